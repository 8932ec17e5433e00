#include "dean/storage/memory_balance.hpp"

#include <algorithm>

#include "dean/core/chain.hpp"
#include "dean/core/codec.hpp"

namespace dean::storage {

using consensus::RecoveryReply;
using consensus::RecoveryRequest;
using consensus::RecoverySession;
using consensus::RelocateAck;
using consensus::RelocateBlock;
using consensus::TimerRequest;
using consensus::TimerTag;

namespace {

bool hashesTo(const Block& b, const Hash32& cHash) {
    if (b.txnList.empty()) return false;
    return computeBlockHash(b) == cHash;
}

}  // namespace

std::map<NodeId, NeighborInfo> neighborsFromGossip(const NodeState& s) {
    std::map<NodeId, std::int64_t> inbound;
    for (const auto& [cHash, holder] : s.relocating) inbound[holder] += 1;
    std::map<NodeId, NeighborInfo> out;
    for (const auto& peer : s.adjacency) {
        if (s.faulty.count(peer)) continue;
        auto it = s.atwTable.find(peer);
        if (it == s.atwTable.end() || !it->second.record) continue;
        const auto& rec = *it->second.record;
        const auto used = static_cast<std::int64_t>(rec.bList) + inbound[peer];
        out[peer] = NeighborInfo{DiskGauge{static_cast<std::int64_t>(rec.bList) + rec.disk, used}, rec.loc};
    }
    return out;
}

Expected<std::vector<Relocation>> planDissemination(const NodeState& s,
                                                    const std::map<NodeId, NeighborInfo>& neighbors) {
    std::int64_t projected = s.usedSlots() - static_cast<std::int64_t>(s.relocating.size());
    if (!DiskGauge::overThreshold(projected, s.diskCapacity)) return std::vector<Relocation>{};

    // Oldest first; the tip stays full because the next block links to it.
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i + 1 < s.chain.size(); ++i) {
        const auto& e = s.chain[i];
        if (!isHollow(e) && !s.relocating.count(entryHash(e))) candidates.push_back(i);
    }
    std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
        return entryTimestamp(s.chain[a]) < entryTimestamp(s.chain[b]);
    });

    std::map<NodeId, std::int64_t> free;
    for (const auto& [peer, info] : neighbors) free[peer] = info.gauge.free();

    std::vector<Relocation> plan;
    for (std::size_t idx : candidates) {
        if (!DiskGauge::overThreshold(projected, s.diskCapacity)) break;
        const Block& b = *fullBlock(s.chain[idx]);
        auto refused = s.relocationRefusals.find(b.cHash);
        const NodeId* best = nullptr;
        std::int64_t bestDistance = 0;
        for (const auto& [peer, info] : neighbors) {
            if (peer == s.id || free[peer] <= 0) continue;
            if (refused != s.relocationRefusals.end() && refused->second.count(peer)) continue;
            const bool alreadyHolds = std::any_of(b.rList.begin(), b.rList.end(),
                                                  [&](const RelocationPointer& p) { return p.holder == peer; });
            if (alreadyHolds) continue;
            const auto d = squaredDistance(s.loc, info.loc);
            if (!best || d < bestDistance || (d == bestDistance && peer < *best)) {
                best = &peer;
                bestDistance = d;
            }
        }
        if (!best) continue;
        plan.push_back(Relocation{b.cHash, *best});
        free[*best] -= 1;
        projected -= 1;
    }
    if (plan.empty()) return Failure{ErrorCode::NoEligibleNeighbor, "no neighbour can take a block"};
    return plan;
}

Expected<std::size_t> disseminateOldest(NodeState& s, const std::map<NodeId, NeighborInfo>& neighbors,
                                        SimMillis now, Outbox& out) {
    auto plan = planDissemination(s, neighbors);
    if (!plan) {
        out.note("capacity-alarm", s.id.digest);
        return plan.failure();
    }
    for (const auto& r : plan.value()) {
        Block copy = *fullBlock(*s.entry(r.cHash));
        copy.relocationFlag = true;
        s.relocating[r.cHash] = r.holder;
        out.note("disseminate", r.cHash);
        out.send(s.id, r.holder, RelocateBlock{std::make_shared<const Block>(std::move(copy))}, now);
    }
    return plan.value().size();
}

void maybeDisseminate(NodeState& s, Context& ctx, Outbox& out) {
    const std::int64_t projected = s.usedSlots() - static_cast<std::int64_t>(s.relocating.size());
    if (!DiskGauge::overThreshold(projected, s.diskCapacity)) return;
    (void)disseminateOldest(s, neighborsFromGossip(s), ctx.now, out);
}

Hash32 computeRelocatedHash(const Hash32& cHash, const NodeId& holder, SimMillis receivedAt) {
    ByteWriter w;
    w.hash(cHash);
    w.nodeId(holder);
    w.i64(receivedAt);
    return w.digest();
}

Expected<RelocateAck> receiveRelocatedBlock(NodeState& h, const BlockRef& block, const NodeId& source,
                                            SimMillis now) {
    (void)source;
    if (!block || !block->relocationFlag) return Failure{ErrorCode::NotRelocation, "relocation flag unset"};
    if (h.sideIndex.count(block->cHash)) return Failure{ErrorCode::DuplicateSideBlock, block->cHash.shortHex()};
    if (!hashesTo(*block, block->cHash)) return Failure{ErrorCode::BadSourceHash, block->cHash.shortHex()};
    if (h.usedSlots() >= h.diskCapacity) return Failure{ErrorCode::NoSpace, h.id.shortHex()};
    h.sideIndex.emplace(block->cHash, h.sideChain.size());
    h.sideChain.push_back(block);
    RelocateAck ack;
    ack.cHash = block->cHash;
    ack.holder = h.id;
    ack.receivedAt = now;
    ack.relocatedHash = computeRelocatedHash(block->cHash, h.id, now);
    ack.accepted = true;
    return ack;
}

Expected<std::optional<Transfer>> finalizeDissemination(NodeState& s, const RelocateAck& ack, const NodeId& holder) {
    if (ack.holder != holder || ack.relocatedHash != computeRelocatedHash(ack.cHash, holder, ack.receivedAt)) {
        return Failure{ErrorCode::BadAck, ack.cHash.shortHex()};
    }
    const auto* e = s.entry(ack.cHash);
    if (!e || isHollow(*e)) return Failure{ErrorCode::BadAck, "block is not stored in full"};
    const Block& b = *fullBlock(*e);
    auto rList = b.rList;
    rList.push_back(RelocationPointer{holder, ack.relocatedHash});
    s.hollowPointers[ack.cHash] = rList;
    s.replaceEntry(ack.cHash, hollowOut(b, std::move(rList)));
    if (s.halfCoins < 1) return std::optional<Transfer>{};
    return std::optional<Transfer>{Transfer{s.id, holder, 1}};
}

void applyTransfer(NodeState& from, NodeState& to, const Transfer& t) {
    from.halfCoins -= t.halfCoins;
    to.halfCoins += t.halfCoins;
}

BlockRef findStoredBlock(const NodeState& s, const Hash32& cHash) {
    if (const auto* e = s.entry(cHash)) {
        if (!isHollow(*e)) return fullBlock(*e);
    }
    auto it = s.sideIndex.find(cHash);
    if (it != s.sideIndex.end()) return s.sideChain[it->second];
    return nullptr;
}

Expected<Block> recoverBlock(const NodeState& requester, const Hash32& cHash, const BlockFetcher& fetch) {
    auto it = requester.hollowPointers.find(cHash);
    if (it == requester.hollowPointers.end() || it->second.empty()) {
        return Failure{ErrorCode::Unrecoverable, "no pointers for " + cHash.shortHex()};
    }
    for (const auto& ptr : it->second) {
        BlockRef got = fetch(ptr.holder, cHash);
        if (!got || !hashesTo(*got, cHash)) continue;
        Block b = *got;
        b.rList.clear();
        b.relocationFlag = false;
        return b;
    }
    return Failure{ErrorCode::Unrecoverable, "every holder failed for " + cHash.shortHex()};
}

// ---- message-driven fetches ----

namespace {

void askNext(NodeState& s, RecoverySession& f, Context& ctx, Outbox& out) {
    f.token = s.nextToken++;
    out.send(s.id, f.targets[f.next], RecoveryRequest{f.cHash}, ctx.now);
    out.timers.push_back(TimerRequest{ctx.config.recoveryTimeout, TimerTag::RecoveryDeadline, f.token});
}

void advance(NodeState& s, const Hash32& cHash, Context& ctx, Outbox& out) {
    auto it = s.fetches.find(cHash);
    if (it == s.fetches.end()) return;
    auto& f = it->second;
    f.next += 1;
    if (f.next < f.targets.size()) {
        askNext(s, f, ctx, out);
        return;
    }
    const auto purpose = f.purpose;
    s.fetches.erase(it);
    consensus::onFetchFailed(s, cHash, purpose, ctx, out);
}

}  // namespace

void startFetch(NodeState& s, const Hash32& cHash, RecoverySession::Purpose purpose, std::vector<NodeId> targets,
                Context& ctx, Outbox& out) {
    if (s.fetches.count(cHash)) return;
    targets.erase(std::remove(targets.begin(), targets.end(), s.id), targets.end());
    if (targets.empty()) {
        consensus::onFetchFailed(s, cHash, purpose, ctx, out);
        return;
    }
    auto& f = s.fetches[cHash];
    f.purpose = purpose;
    f.cHash = cHash;
    f.targets = std::move(targets);
    f.next = 0;
    askNext(s, f, ctx, out);
}

void onRecoveryRequest(NodeState& h, const NodeId& from, const RecoveryRequest& req, Context& ctx, Outbox& out) {
    out.send(h.id, from, RecoveryReply{req.cHash, findStoredBlock(h, req.cHash)}, ctx.now);
}

void onRecoveryReply(NodeState& s, const NodeId& from, const RecoveryReply& reply, Context& ctx, Outbox& out) {
    auto it = s.fetches.find(reply.cHash);
    if (it == s.fetches.end() || it->second.targets[it->second.next] != from) return;
    if (!reply.block || !hashesTo(*reply.block, reply.cHash)) {
        advance(s, reply.cHash, ctx, out);
        return;
    }
    const auto purpose = it->second.purpose;
    s.fetches.erase(it);
    consensus::onBlockFetched(s, reply.block, purpose, ctx, out);
}

void onFetchDeadline(NodeState& s, std::uint64_t token, Context& ctx, Outbox& out) {
    for (auto& [cHash, f] : s.fetches) {
        if (f.token == token) {
            const Hash32 key = cHash;
            advance(s, key, ctx, out);
            return;
        }
    }
}

void onRelocateBlock(NodeState& h, const NodeId& from, const RelocateBlock& msg, Context& ctx, Outbox& out) {
    auto result = receiveRelocatedBlock(h, msg.block, from, ctx.now);
    if (result) {
        out.note("side-store", msg.block->cHash);
        out.send(h.id, from, result.value(), ctx.now);
        return;
    }
    RelocateAck nack;
    nack.cHash = msg.block ? msg.block->cHash : Hash32{};
    nack.holder = h.id;
    nack.accepted = false;
    nack.reason = result.code();
    if (result.code() == ErrorCode::NoSpace) out.note("capacity-alarm", h.id.digest);
    out.send(h.id, from, nack, ctx.now);
}

void onRelocateAck(NodeState& s, const NodeId& from, const RelocateAck& ack, Context& ctx, Outbox& out) {
    auto it = s.relocating.find(ack.cHash);
    if (it == s.relocating.end() || it->second != from) return;
    s.relocating.erase(it);
    if (!ack.accepted) {
        s.relocationRefusals[ack.cHash].insert(from);
        maybeDisseminate(s, ctx, out);
        return;
    }
    auto result = finalizeDissemination(s, ack, from);
    if (!result) {
        out.note("bad-ack", ack.cHash);
        return;
    }
    out.note("hollow", ack.cHash);
    if (result.value()) out.transfers.push_back(*result.value());
    maybeDisseminate(s, ctx, out);
}

}  // namespace dean::storage
