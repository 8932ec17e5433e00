#pragma once

#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "dean/core/hash.hpp"

namespace dean {

/// Simulated time in milliseconds. Wall-clock time never enters protocol logic.
using SimMillis = std::int64_t;

enum class NodeKind : std::uint8_t { Edge = 0, Sensor = 1 };

/// Public identity of a node: the digest of its registration record.
struct NodeId {
    Hash32 digest;
    NodeKind kind = NodeKind::Edge;

    std::string hex() const { return digest.hex(); }
    std::string shortHex() const { return digest.shortHex(); }

    auto operator<=>(const NodeId&) const = default;
    bool operator==(const NodeId&) const = default;
};

struct NodeIdHasher {
    std::size_t operator()(const NodeId& id) const noexcept { return Hash32Hasher{}(id.digest); }
};

/// Planar position in meters.
struct GeoPoint {
    std::int64_t x = 0;
    std::int64_t y = 0;

    bool operator==(const GeoPoint&) const = default;
};

/// Squared Euclidean distance; comparisons never need the root.
inline std::int64_t squaredDistance(GeoPoint a, GeoPoint b) {
    const auto dx = a.x - b.x;
    const auto dy = a.y - b.y;
    return dx * dx + dy * dy;
}

enum class TxnKind : std::uint8_t { Regular = 0, Configuration = 1 };

struct Transaction {
    Hash32 txnId;
    TxnKind kind = TxnKind::Regular;
    NodeId sender;
    NodeId receiver;
    std::uint64_t amount = 0;
    GeoPoint geo;
    SimMillis createdAt = 0;

    bool operator==(const Transaction&) const = default;
};

/// Builds a transaction and stamps its id from the other fields.
Transaction makeTransaction(TxnKind kind, NodeId sender, NodeId receiver, std::uint64_t amount, GeoPoint geo,
                            SimMillis createdAt);

/// Structural checks: id matches content, configuration transactions come from edge nodes.
bool transactionWellFormed(const Transaction& txn);

struct RelocationPointer {
    NodeId holder;
    Hash32 relocatedHash;

    bool operator==(const RelocationPointer&) const = default;
};

inline constexpr std::size_t kMinTxnsPerBlock = 12;

struct Block {
    Hash32 pHash;
    Hash32 cHash;
    SimMillis timestamp = 0;
    std::vector<Transaction> txnList;
    NodeId creator;
    // Unhashed metadata below: may change after mining without breaking the chain.
    Hash32 tHash;
    std::vector<RelocationPointer> rList;
    bool relocationFlag = false;

    bool operator==(const Block&) const = default;
};

/// Blocks are immutable once built and shared between nodes and messages.
using BlockRef = std::shared_ptr<const Block>;

/// Per-node trust attributes exchanged by gossip and scored for leader election.
struct AtwRecord {
    NodeId nodeId;
    /// Activity clock of the node (ms of logged activity since deployment).
    SimMillis timestamp = 0;
    /// Continuous residence within the geo radius of the registered point.
    SimMillis geoTimer = 0;
    GeoPoint loc;
    std::set<NodeId> adj;
    std::uint64_t mList = 0;
    std::uint64_t bList = 0;
    /// Free disk, in block-slots.
    std::int64_t disk = 0;
};

inline constexpr std::int64_t kGeoRadiusMeters = 50;
inline constexpr SimMillis kGeoSaturationMs = 60 * 60 * 1000;

/// Moves the record's node to `to` at time `now`, restarting the geo timer if it leaves
/// the radius around `anchor` (the point at which the current timer started).
void moveNode(AtwRecord& rec, GeoPoint& anchor, GeoPoint to);

/// Advances both timers by `elapsed` without a location change.
void advanceTimers(AtwRecord& rec, SimMillis elapsed);

}  // namespace dean
