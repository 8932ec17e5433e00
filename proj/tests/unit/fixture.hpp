#pragma once

#include <sodium.h>

#include <vector>

#include "dean/consensus/protocol.hpp"
#include "dean/core/chain.hpp"
#include "dean/core/codec.hpp"

namespace dean::test {

/// SHA-256 through libsodium, independent of the library's OpenSSL path.
inline Hash32 sodiumSha256(const std::vector<std::uint8_t>& bytes) {
    Hash32 out;
    crypto_hash_sha256(out.bytes.data(), bytes.data(), bytes.size());
    return out;
}

inline void put64(std::vector<std::uint8_t>& buf, std::uint64_t v) {
    for (int s = 56; s >= 0; s -= 8) buf.push_back(static_cast<std::uint8_t>(v >> s));
}
inline void putHash(std::vector<std::uint8_t>& buf, const Hash32& h) { buf.insert(buf.end(), h.bytes.begin(), h.bytes.end()); }
inline void putNode(std::vector<std::uint8_t>& buf, const NodeId& id) {
    putHash(buf, id.digest);
    put64(buf, static_cast<std::uint64_t>(id.kind));
}

inline NodeId edgeId(std::uint64_t n) {
    consensus::Registration r;
    r.serial = n;
    r.loc = GeoPoint{static_cast<std::int64_t>(n) * 10, 0};
    return consensus::identityOf(r);
}

/// A sealed block on top of `parent` with twelve distinct transactions.
inline Block childBlock(const Hash32& parent, SimMillis ts, std::uint64_t salt, const NodeId& creator) {
    Block b;
    b.pHash = parent;
    b.timestamp = ts;
    b.creator = creator;
    for (std::uint64_t i = 0; i < kMinTxnsPerBlock; ++i) {
        b.txnList.push_back(makeTransaction(TxnKind::Regular, creator, creator, salt * 100 + i, GeoPoint{1, 2}, ts));
    }
    return sealBlock(std::move(b));
}

inline std::vector<Block> linkedChain(std::size_t n, std::uint64_t salt = 1) {
    std::vector<Block> out{genesisBlock()};
    for (std::size_t i = 1; i < n; ++i) {
        out.push_back(childBlock(out.back().cHash, static_cast<SimMillis>(i) * 1000, salt * 1000 + i, edgeId(0)));
    }
    return out;
}

/// N edge nodes that know each other, driven by hand.
struct Net {
    consensus::NetworkConfig config;
    consensus::LockRegistry locks;
    std::vector<consensus::Registration> regs;
    std::vector<NodeId> ids;
    std::vector<consensus::NodeState> nodes;

    explicit Net(std::size_t n, std::int64_t disk = 4096) : config(consensus::NetworkConfig::forEdges(n)) {
        for (std::size_t i = 0; i < n; ++i) {
            consensus::Registration r;
            r.serial = i;
            r.loc = GeoPoint{static_cast<std::int64_t>(i) * 10, 0};
            r.deployedAt = -static_cast<SimMillis>(i) * 1000;
            regs.push_back(r);
            ids.push_back(consensus::identityOf(r));
        }
        for (const auto& r : regs) nodes.push_back(consensus::makeEdgeNode(r, ids, config, disk));
    }

    consensus::Context ctx(SimMillis now) { return consensus::Context{config, locks, now}; }

    /// Makes node i adjacent to every other node and a leader.
    void makeLeader(std::size_t i) {
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            if (j != i) nodes[i].adjacency.insert(ids[j]);
        }
        nodes[i].role = consensus::Role::Leader;
        nodes[i].phase = consensus::Phase::Steady;
    }

    std::size_t indexOf(const NodeId& id) const {
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (ids[i] == id) return i;
        }
        return ids.size();
    }
};

template <class P>
std::size_t countPayload(const consensus::Outbox& out) {
    std::size_t n = 0;
    for (const auto& m : out.messages) n += std::holds_alternative<P>(m.payload) ? 1 : 0;
    return n;
}

inline bool hasNote(const consensus::Outbox& out, const std::string& kind) {
    for (const auto& n : out.notes) {
        if (n.kind == kind) return true;
    }
    return false;
}

}  // namespace dean::test
