#include "dean/consensus/protocol.hpp"

#include <algorithm>

#include "dean/core/atw.hpp"
#include "dean/core/chain.hpp"
#include "dean/core/codec.hpp"
#include "dean/storage/memory_balance.hpp"

namespace dean::consensus {

using storage::isHollow;

NodeId networkQueueId() {
    static const NodeId id{hashBytes("dean/network-queue"), NodeKind::Edge};
    return id;
}

namespace {

constexpr std::size_t kCatchUpTargets = 6;

bool trusted(const NodeState& s, const NodeId& peer) { return !s.faulty.count(peer) && !s.suspects.count(peer); }

template <class P>
void sendToKnownEdges(const NodeState& s, const P& payload, Context& ctx, Outbox& out) {
    for (const auto& peer : s.knownEdges) {
        if (peer != s.id && !s.faulty.count(peer)) out.send(s.id, peer, payload, ctx.now);
    }
}

bool diskFull(const NodeState& s) { return s.usedSlots() >= s.diskCapacity; }

std::vector<NodeId> catchUpTargets(const NodeState& s, const NodeId& first) {
    std::vector<NodeId> targets;
    if (first != s.id && first != networkQueueId()) targets.push_back(first);
    for (const auto& peer : s.adjacency) {
        if (targets.size() >= kCatchUpTargets) break;
        if (peer != first && !s.faulty.count(peer)) targets.push_back(peer);
    }
    for (const auto& peer : s.knownEdges) {
        if (targets.size() >= kCatchUpTargets) break;
        if (peer != first && !s.faulty.count(peer) && std::find(targets.begin(), targets.end(), peer) == targets.end())
            targets.push_back(peer);
    }
    return targets;
}

void parkOrphan(NodeState& s, Orphan orphan, Context& ctx, Outbox& out) {
    const Hash32 parent = orphan.block->pHash;
    const NodeId from = orphan.from;
    s.orphans[parent].push_back(std::move(orphan));
    out.note("orphan", parent);
    storage::startFetch(s, parent, RecoverySession::Purpose::CatchUp, catchUpTargets(s, from), ctx, out);
}

void recordDecision(NodeState& s, const Hash32& cHash, bool reported) {
    s.decisions[cHash] = reported;
    auto it = s.bufferedDecisions.find(cHash);
    if (it == s.bufferedDecisions.end()) return;
    auto buffered = std::move(it->second);
    s.bufferedDecisions.erase(it);
    for (const auto& [peer, verdict] : buffered) {
        (void)buildNetworkOnDecision(s, peer, ValidationDecision{cHash, verdict, false});
    }
}

void stepDown(NodeState& s, Context& ctx, Outbox& out) {
    s.role = Role::Edge;
    s.stepDownPending = false;
    s.knownLeaders.erase(s.id);
    out.note("step-down", s.id.digest);
    sendToKnownEdges(s, LeaderBroadcast{BroadcastKind::LeaderStepDown, s.id, {}, {}}, ctx, out);
}

void finishAttempt(NodeState& s, Context& ctx, Outbox& out) {
    s.inFlight.reset();
    if (s.stepDownPending) stepDown(s, ctx, out);
}

void replicate(NodeState& s, Context& ctx, Outbox& out) {
    auto& a = *s.inFlight;
    a.replicatedAt = ctx.now;
    a.acks.clear();
    out.note("replicate", a.block->cHash);
    for (const auto& peer : s.adjacency) {
        if (s.faulty.count(peer)) continue;
        out.send(s.id, peer, BlockProposal{a.block, ProposalMode::Replicate, a.tHash}, ctx.now);
    }
}

void tryCommit(NodeState& s, Context& ctx, Outbox& out) {
    if (!s.inFlight || !s.inFlight->replicatedAt) return;
    auto& a = *s.inFlight;
    if (1 + a.acks.size() < s.quorumSize()) return;
    const Hash32 cHash = a.block->cHash;
    if (!ctx.locks.release(cHash, s.id, a.lockEpoch)) {
        // The lease ran out first; the registry already handed the block back.
        out.note("commit-lost", cHash);
        s.pendingLocks.erase(cHash);
        finishAttempt(s, ctx, out);
        return;
    }
    s.pendingLocks.erase(cHash);
    s.mined += 1;
    s.halfCoins += 2;
    out.note("commit", cHash);
    out.note("release", cHash);
    out.committed.push_back(a.block);
    finishAttempt(s, ctx, out);
}

void armDeadline(NodeState& s, Context& ctx, Outbox& out) {
    auto& a = *s.inFlight;
    a.token = s.nextToken++;
    out.timers.push_back({ctx.config.replicationTimeout, TimerTag::AttemptDeadline, a.token});
}

/// Silent append of a block that came back from a catch-up fetch.
void storeFetched(NodeState& s, const BlockRef& block, Context& ctx, Outbox& out) {
    if (s.hasBlock(block->cHash)) return;
    if (!s.hasBlock(block->pHash)) {
        parkOrphan(s, Orphan{block, s.id, ProposalMode::Replicate, block->tHash, true}, ctx, out);
        return;
    }
    if (block->pHash != s.tipHash() || !blockWellFormed(*block)) return;
    if (diskFull(s)) {
        out.note("capacity-alarm", block->cHash);
        return;
    }
    s.appendBlock(block);
    out.note("persist", block->cHash);
    afterAppend(s, ctx, out);
}

void onBootstrap(NodeState& s, const NodeId& from, const BlockProposal& p, Context& ctx, Outbox& out) {
    if (!s.hasBlock(p.block->cHash) && !s.hasBlock(p.block->pHash)) {
        parkOrphan(s, Orphan{p.block, from, ProposalMode::Bootstrap, p.tHash, false}, ctx, out);
        return;
    }
    verifyBlockPhase1(s, p.block, ctx, out);
}

void onAtwShareMsg(NodeState& s, const NodeId& from, const AtwShare& share, Context& ctx) {
    if (!share.record || share.record->nodeId != from) return;
    s.atwTable[from] = KnownRecord{share.record, ctx.now};
    s.knownEdges.insert(from);
}

void onFaulty(NodeState& s, const NodeId& from, const FaultyAnnouncement& f, Outbox& out) {
    if (f.subject == s.id) {
        s.expelled = true;
        s.role = Role::Edge;
        out.note("expelled", s.id.digest);
        return;
    }
    if (!s.adjacency.count(from) || s.faulty.count(f.subject)) return;
    s.faulty.insert(f.subject);
    s.adjacency.erase(f.subject);
    s.knownLeaders.erase(f.subject);
    out.note("faulty", f.subject.digest);
}

}  // namespace

// ---- build-network phase ----

Phase1Result verifyBlockPhase1(NodeState& s, const BlockRef& block, Context& ctx, Outbox& out) {
    if (s.hasBlock(block->cHash)) return {true, false};
    const bool valid = block->pHash == s.tipHash() && blockWellFormed(*block);
    bool appended = false;
    if (valid) {
        if (diskFull(s)) {
            out.note("capacity-alarm", block->cHash);
            return {false, false};
        }
        Block copy = *block;
        copy.rList.clear();
        copy.relocationFlag = false;
        s.appendBlock(std::make_shared<const Block>(std::move(copy)));
        out.note("persist", block->cHash);
        appended = true;
    }
    const bool reported = reportVerdict(s, valid);
    out.note(reported ? "decide-valid" : "decide-invalid", block->cHash);
    if (!leaderEligible(s.adjacency.size(), s.edgeCount)) {
        sendToKnownEdges(s, ValidationDecision{block->cHash, reported, false}, ctx, out);
    }
    recordDecision(s, block->cHash, reported);
    if (appended) afterAppend(s, ctx, out);
    return {reported, appended};
}

Expected<bool> buildNetworkOnDecision(NodeState& s, const NodeId& peer, const ValidationDecision& d) {
    if (peer == s.id) return false;
    auto own = s.decisions.find(d.cHash);
    if (own == s.decisions.end()) {
        s.bufferedDecisions[d.cHash].emplace_back(peer, d.verdict);
        return Failure{ErrorCode::UnknownBlock, d.cHash.shortHex()};
    }
    if (own->second != d.verdict) {
        s.suspects.insert(peer);
        return false;
    }
    if (!trusted(s, peer)) return false;
    const bool added = s.adjacency.insert(peer).second;
    if (added) s.knownEdges.insert(peer);
    return added;
}

// ---- leader selection and mining ----

Expected<std::vector<NodeId>> electLeaders(std::span<const AtwRecord> records, std::size_t edgeCount,
                                           const NetworkConfig& config) {
    std::vector<AtwSummary> summaries;
    summaries.reserve(records.size());
    for (const auto& r : records) summaries.push_back(AtwSummary::of(r));
    return electLeaders(std::span<const AtwSummary>(summaries), edgeCount, config);
}

Expected<std::vector<NodeId>> electLeaders(std::span<const AtwSummary> records, std::size_t edgeCount,
                                           const NetworkConfig& config) {
    std::vector<AtwSummary> eligible;
    for (const auto& r : records) {
        if (leaderEligible(r.adjacency, edgeCount)) eligible.push_back(r);
    }
    if (eligible.empty()) return Failure{ErrorCode::NoEligibleNode, "no record above the adjacency bar"};
    const std::size_t networkSize = std::max<std::size_t>(1, edgeCount - 1);
    return atwArgmax(std::span<const AtwSummary>(eligible), config.weights, networkSize, config.atwScale);
}

Hash32 computeTHash(const Hash32& cHash, const NodeId& leader, SimMillis now) {
    ByteWriter w;
    w.hash(cHash);
    w.nodeId(leader);
    w.i64(now);
    return w.digest();
}

Expected<BlockRef> acquireBlockLock(NodeState& leader, const BlockRef& block, Context& ctx, Outbox& out) {
    if (!leader.isLeader()) return Failure{ErrorCode::NoEligibleNode, "not a leader"};
    const auto attempt = ctx.locks.tryAcquire(block->cHash, leader.id, ctx.now);
    if (!attempt.granted) {
        out.note("lock-denied", block->cHash);
        return Failure{ErrorCode::AlreadyLocked, attempt.entry.holder.shortHex()};
    }
    const Hash32 tHash = computeTHash(block->cHash, leader.id, ctx.now);
    Block stamped = *block;
    stamped.tHash = tHash;
    stamped.rList.clear();
    stamped.relocationFlag = false;
    auto ref = std::make_shared<const Block>(std::move(stamped));

    leader.pendingLocks.insert(block->cHash);
    MiningAttempt a;
    a.block = ref;
    a.tHash = tHash;
    a.lockEpoch = attempt.entry.epoch;
    a.lockedAt = ctx.now;
    leader.inFlight = std::move(a);
    armDeadline(leader, ctx, out);
    out.note("lock", block->cHash);
    return ref;
}

ValidateOutcome consensusValidate(NodeState& s, Context& ctx, Outbox& out) {
    if (!s.inFlight) return ValidateOutcome::Invalid;
    auto& a = *s.inFlight;
    const Block& b = *a.block;

    if (!s.hasBlock(b.cHash)) {
        const auto* parent = s.entry(b.pHash);
        if (!parent) {
            if (!a.awaitingParent) {
                a.awaitingParent = true;
                out.note("await-parent", b.pHash);
                storage::startFetch(s, b.pHash, RecoverySession::Purpose::CatchUp,
                                    catchUpTargets(s, b.creator), ctx, out);
            }
            return ValidateOutcome::AwaitingParent;
        }
        a.awaitingParent = false;
        if (isHollow(*parent) && !a.parentVerified) {
            if (!a.recoveringParent) {
                a.recoveringParent = true;
                std::vector<NodeId> holders;
                for (const auto& ptr : std::get<storage::HollowBlock>(*parent).rList) holders.push_back(ptr.holder);
                out.note("recover", b.pHash);
                storage::startFetch(s, b.pHash, RecoverySession::Purpose::Hollow, std::move(holders), ctx, out);
            }
            return ValidateOutcome::RecoveringParent;
        }
        if (b.pHash != s.tipHash() || !blockWellFormed(b)) {
            out.note("invalid", b.cHash);
            abortAttempt(s, ctx, out, "invalid");
            return ValidateOutcome::Invalid;
        }
        if (diskFull(s)) {
            out.note("capacity-alarm", b.cHash);
            abortAttempt(s, ctx, out, "disk-full");
            return ValidateOutcome::Invalid;
        }
        s.appendBlock(a.block);
        out.note("persist", b.cHash);
        replicate(s, ctx, out);
        tryCommit(s, ctx, out);
        afterAppend(s, ctx, out);
        return ValidateOutcome::Replicated;
    }
    // Already stored (it reached this node as a replica earlier): replication only.
    a.awaitingParent = false;
    replicate(s, ctx, out);
    tryCommit(s, ctx, out);
    return ValidateOutcome::Replicated;
}

void onReplicaAck(NodeState& s, const NodeId& from, const ValidationDecision& ack, Context& ctx, Outbox& out) {
    if (!s.inFlight || !s.inFlight->replicatedAt || s.inFlight->block->cHash != ack.cHash) return;
    if (!ack.verdict) return;
    s.inFlight->acks.insert(from);
    tryCommit(s, ctx, out);
}

void abortAttempt(NodeState& s, Context& ctx, Outbox& out, const char* reason) {
    if (!s.inFlight) return;
    const auto& a = *s.inFlight;
    const Hash32 cHash = a.block->cHash;
    const bool released = ctx.locks.release(cHash, s.id, a.lockEpoch);
    s.pendingLocks.erase(cHash);
    s.fetches.erase(a.block->pHash);
    out.note(std::string("abort:") + reason, cHash);
    if (released) {
        out.note("release", cHash);
        out.requeued.push_back(a.block);
    }
    finishAttempt(s, ctx, out);
}

void resumeAttempt(NodeState& s, const BlockRef& block, const LockEntry& lock, Context& ctx, Outbox& out) {
    const Hash32 cHash = block->cHash;
    const auto* stored = s.entry(cHash);
    if (!s.isLeader() || s.inFlight || !stored) {
        // Crashed before persisting (or no longer able to mine): nothing to finish.
        if (ctx.locks.release(cHash, s.id, lock.epoch)) {
            out.note("abort:restart", cHash);
            out.note("release", cHash);
            out.requeued.push_back(block);
        }
        s.pendingLocks.erase(cHash);
        return;
    }
    MiningAttempt a;
    a.block = isHollow(*stored) ? block : storage::fullBlock(*stored);
    a.tHash = a.block->tHash;
    a.lockEpoch = lock.epoch;
    a.lockedAt = lock.since;
    s.inFlight = std::move(a);
    s.pendingLocks.insert(cHash);
    armDeadline(s, ctx, out);
    out.note("resume", cHash);
    replicate(s, ctx, out);
    tryCommit(s, ctx, out);
}

void onReplicate(NodeState& s, const NodeId& from, const BlockProposal& p, Context& ctx, Outbox& out) {
    const BlockRef& b = p.block;
    auto ack = [&](bool truth) {
        out.send(s.id, from, ValidationDecision{b->cHash, reportVerdict(s, truth), true}, ctx.now);
    };
    if (s.hasBlock(b->cHash)) {
        ack(true);
        return;
    }
    if (!s.hasBlock(b->pHash)) {
        parkOrphan(s, Orphan{b, from, ProposalMode::Replicate, p.tHash, false}, ctx, out);
        return;
    }
    if (b->pHash != s.tipHash()) {
        out.note("fork", b->cHash);
        ack(false);
        return;
    }
    if (diskFull(s)) {
        out.note("capacity-alarm", b->cHash);
        ack(false);
        return;
    }
    const bool valid = blockWellFormed(*b);
    if (valid) {
        s.appendBlock(b);
        out.note("persist", b->cHash);
    }
    ack(valid);
    if (valid) afterAppend(s, ctx, out);
}

void onOffer(NodeState& s, const BlockRef& block, Context& ctx, Outbox& out) {
    if (!s.isLeader() || s.inFlight || s.stepDownPending) {
        out.note("offer-declined", block->cHash);
        return;
    }
    if (!acquireBlockLock(s, block, ctx, out)) return;
    consensusValidate(s, ctx, out);
}

void afterAppend(NodeState& s, Context& ctx, Outbox& out) {
    s.fetches.erase(s.tipHash());
    for (;;) {
        auto it = std::find_if(s.orphans.begin(), s.orphans.end(),
                               [&](const auto& kv) { return s.hasBlock(kv.first); });
        if (it == s.orphans.end()) break;
        auto ready = std::move(it->second);
        s.orphans.erase(it);
        for (const auto& o : ready) {
            if (o.fetched) {
                storeFetched(s, o.block, ctx, out);
            } else if (o.mode == ProposalMode::Bootstrap) {
                verifyBlockPhase1(s, o.block, ctx, out);
            } else {
                onReplicate(s, o.from, BlockProposal{o.block, o.mode, o.tHash}, ctx, out);
            }
        }
    }
    if (s.inFlight && s.inFlight->awaitingParent && s.hasBlock(s.inFlight->block->pHash)) {
        consensusValidate(s, ctx, out);
    }
    storage::maybeDisseminate(s, ctx, out);
}

void onBlockFetched(NodeState& s, const BlockRef& block, RecoverySession::Purpose purpose, Context& ctx,
                    Outbox& out) {
    if (purpose == RecoverySession::Purpose::Hollow) {
        out.note("recovered", block->cHash);
        if (s.inFlight && s.inFlight->recoveringParent && s.inFlight->block->pHash == block->cHash) {
            s.inFlight->recoveringParent = false;
            s.inFlight->parentVerified = true;
            consensusValidate(s, ctx, out);
        }
        return;
    }
    Block copy = *block;
    copy.rList.clear();
    copy.relocationFlag = false;
    storeFetched(s, std::make_shared<const Block>(std::move(copy)), ctx, out);
}

void onFetchFailed(NodeState& s, const Hash32& cHash, RecoverySession::Purpose purpose, Context& ctx, Outbox& out) {
    out.note("unrecoverable", cHash);
    if (!s.inFlight || s.inFlight->block->pHash != cHash) return;
    if (purpose == RecoverySession::Purpose::Hollow || s.inFlight->awaitingParent) {
        abortAttempt(s, ctx, out, "missing-parent");
    }
}

// ---- joins ----

void requestJoin(NodeState& c, Context& ctx, Outbox& out) {
    const JoinRequest req{c.id, c.registration, 2 * ctx.config.joinFeeCoins};
    out.note("join-request", c.id.digest);
    for (const auto& leader : c.knownLeaders) out.send(c.id, leader, req, ctx.now);
}

Expected<Hash32> approveNewNode(NodeState& s, const NodeId& from, const JoinRequest& req, Context& ctx,
                                Outbox& out) {
    if (!s.isLeader()) return Failure{ErrorCode::NoEligibleNode, "not a leader"};
    if (from != req.candidate || identityOf(req.registration) != req.candidate) {
        out.note("join-rejected", req.candidate.digest);
        return Failure{ErrorCode::BadIdentity, req.candidate.shortHex()};
    }
    BlockRef challenge;
    for (auto it = s.chain.rbegin(); it != s.chain.rend() && !challenge; ++it) challenge = storage::fullBlock(*it);
    if (!challenge) return Failure{ErrorCode::Unrecoverable, "no full block to challenge with"};
    s.pendingJoins[req.candidate] = PendingJoin{challenge->cHash, blockWellFormed(*challenge), req.feeHalfCoins};
    out.note("join-challenge", req.candidate.digest);
    out.send(s.id, req.candidate, JoinChallenge{challenge}, ctx.now);
    return challenge->cHash;
}

void onJoinChallenge(NodeState& c, const NodeId& from, const JoinChallenge& ch, Context& ctx, Outbox& out) {
    if (!ch.block) return;
    bool truth = false;
    try {
        truth = blockWellFormed(*ch.block);
    } catch (const DeanError&) {
        truth = false;
    }
    out.send(c.id, from, JoinResult{ch.block->cHash, reportVerdict(c, truth)}, ctx.now);
}

Expected<bool> onJoinResult(NodeState& s, const NodeId& from, const JoinResult& r, Context& ctx, Outbox& out) {
    auto it = s.pendingJoins.find(from);
    if (it == s.pendingJoins.end()) return Failure{ErrorCode::UnknownNode, from.shortHex()};
    const PendingJoin pj = it->second;
    s.pendingJoins.erase(it);
    if (r.cHash != pj.challenge || r.verdict != pj.expectedVerdict) {
        out.note("join-failed", from.digest);
        return Failure{ErrorCode::FailedChallenge, from.shortHex()};
    }
    s.adjacency.insert(from);
    s.knownEdges.insert(from);
    s.lastSeen[from] = ctx.now;
    s.edgeCount = std::max(s.edgeCount, s.knownEdges.size() + 1);
    s.halfCoins += pj.feeHalfCoins;
    out.note("join-approved", from.digest);

    LeaderBroadcast plain{BroadcastKind::NodeApproved, from, {}, {}};
    sendToKnownEdges(s, plain, ctx, out);
    // The copy for the candidate replaces the plain one with chain and membership.
    out.messages.erase(std::remove_if(out.messages.begin(), out.messages.end(),
                                      [&](const Message& m) {
                                          return m.to == from && m.kind() == MessageKind::LeaderBroadcast;
                                      }),
                       out.messages.end());
    LeaderBroadcast full = plain;
    for (const auto& e : s.chain) {
        if (isHollow(e)) break;
        full.chainSnapshot.push_back(storage::fullBlock(e));
    }
    full.members.assign(s.knownEdges.begin(), s.knownEdges.end());
    full.members.push_back(s.id);
    out.send(s.id, from, std::move(full), ctx.now);
    return true;
}

void onLeaderBroadcast(NodeState& s, const NodeId& from, const LeaderBroadcast& m, Context& ctx, Outbox& out) {
    switch (m.kind) {
        case BroadcastKind::LeaderElected:
            if (m.subject != from) return;
            s.knownLeaders.insert(from);
            s.knownEdges.insert(from);
            s.phase = Phase::Steady;
            return;
        case BroadcastKind::LeaderStepDown:
            if (m.subject == from) s.knownLeaders.erase(from);
            return;
        case BroadcastKind::NodeApproved:
            break;
    }
    if (m.subject == s.id) {
        if (s.joined) return;
        s.joined = true;
        for (const auto& member : m.members) {
            if (member != s.id) s.knownEdges.insert(member);
        }
        s.edgeCount = std::max(s.edgeCount, s.knownEdges.size() + 1);
        s.adjacency.insert(from);
        s.lastSeen[from] = ctx.now;
        s.knownLeaders.insert(from);
        s.phase = Phase::Steady;
        for (const auto& b : m.chainSnapshot) {
            if (!b || s.hasBlock(b->cHash)) continue;
            if (b->pHash != s.tipHash() || !blockWellFormed(*b) || diskFull(s)) break;
            s.appendBlock(b);
            out.note("persist", b->cHash);
        }
        out.note("joined", s.id.digest);
        afterAppend(s, ctx, out);
        return;
    }
    if (!s.knownLeaders.count(from)) return;
    auto& votes = s.joinVotes[m.subject];
    votes.insert(from);
    if (2 * votes.size() > s.knownLeaders.size() && !s.adjacency.count(m.subject)) {
        s.knownEdges.insert(m.subject);
        s.adjacency.insert(m.subject);
        s.lastSeen[m.subject] = ctx.now;
        s.edgeCount = std::max(s.edgeCount, s.knownEdges.size() + 1);
        out.note("member-added", m.subject.digest);
    }
}

// ---- gossip ----

std::vector<AtwSummary> projectedSummaries(const NodeState& s, SimMillis now, SimMillis maxAge) {
    std::vector<AtwSummary> out;
    out.reserve(s.atwTable.size() + 1);
    if (!s.expelled && s.joined) {
        out.push_back(s.ownSummary(now));
    }
    for (const auto& [peer, known] : s.atwTable) {
        if (!known.record || !trusted(s, peer) || !s.knownEdges.count(peer)) continue;
        const SimMillis age = now - known.sharedAt;
        if (age > maxAge) continue;
        auto sum = AtwSummary::of(*known.record);
        sum.timestamp += age;
        sum.geoTimer += age;
        out.push_back(sum);
    }
    return out;
}

void atwGossipTick(NodeState& s, Context& ctx, Outbox& out) {
    if (s.expelled) return;
    out.timers.push_back({ctx.config.atwSharePeriod, TimerTag::AtwTick, s.tickEpoch});
    if (!s.joined) return;

    auto record = std::make_shared<const AtwRecord>(s.ownRecord(ctx.now));
    sendToKnownEdges(s, AtwShare{record}, ctx, out);

    std::vector<NodeId> silent;
    for (const auto& peer : s.adjacency) {
        auto seen = s.lastSeen.find(peer);
        const SimMillis last = seen == s.lastSeen.end() ? s.deployedAt : seen->second;
        if (ctx.now - last > ctx.config.atwTimeout) silent.push_back(peer);
    }
    for (const auto& peer : silent) {
        s.faulty.insert(peer);
        s.adjacency.erase(peer);
        s.knownLeaders.erase(peer);
        out.note("faulty", peer.digest);
        sendToKnownEdges(s, FaultyAnnouncement{peer}, ctx, out);
    }

    const auto summaries = projectedSummaries(s, ctx.now, ctx.config.atwTimeout);
    const auto winners = electLeaders(std::span<const AtwSummary>(summaries), s.edgeCount, ctx.config);
    const bool elected = winners && std::binary_search(winners.value().begin(), winners.value().end(), s.id);
    if (elected) {
        s.stepDownPending = false;
        if (!s.isLeader()) {
            s.role = Role::Leader;
            s.phase = Phase::Steady;
            s.knownLeaders.insert(s.id);
            out.note("elected", s.id.digest);
            sendToKnownEdges(s, LeaderBroadcast{BroadcastKind::LeaderElected, s.id, {}, {}}, ctx, out);
        }
    } else if (s.isLeader()) {
        if (s.inFlight) {
            s.stepDownPending = true;
        } else {
            stepDown(s, ctx, out);
        }
    }
}

// ---- dispatch ----

void handleMessage(NodeState& s, const Message& msg, Context& ctx, Outbox& out) {
    if (s.expelled) return;
    if (s.faulty.count(msg.from)) {
        out.note("dropped", msg.from.digest);
        return;
    }
    s.lastSeen[msg.from] = ctx.now;
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, BlockProposal>) {
                if (!p.block) return;
                switch (p.mode) {
                    case ProposalMode::Bootstrap: onBootstrap(s, msg.from, p, ctx, out); break;
                    case ProposalMode::Offer: onOffer(s, p.block, ctx, out); break;
                    case ProposalMode::Replicate: onReplicate(s, msg.from, p, ctx, out); break;
                }
            } else if constexpr (std::is_same_v<T, ValidationDecision>) {
                if (p.replicaAck) {
                    onReplicaAck(s, msg.from, p, ctx, out);
                } else {
                    (void)buildNetworkOnDecision(s, msg.from, p);
                }
            } else if constexpr (std::is_same_v<T, AtwShare>) {
                onAtwShareMsg(s, msg.from, p, ctx);
            } else if constexpr (std::is_same_v<T, JoinRequest>) {
                (void)approveNewNode(s, msg.from, p, ctx, out);
            } else if constexpr (std::is_same_v<T, JoinChallenge>) {
                onJoinChallenge(s, msg.from, p, ctx, out);
            } else if constexpr (std::is_same_v<T, JoinResult>) {
                (void)onJoinResult(s, msg.from, p, ctx, out);
            } else if constexpr (std::is_same_v<T, LeaderBroadcast>) {
                onLeaderBroadcast(s, msg.from, p, ctx, out);
            } else if constexpr (std::is_same_v<T, RelocateBlock>) {
                storage::onRelocateBlock(s, msg.from, p, ctx, out);
            } else if constexpr (std::is_same_v<T, RelocateAck>) {
                storage::onRelocateAck(s, msg.from, p, ctx, out);
            } else if constexpr (std::is_same_v<T, RecoveryRequest>) {
                storage::onRecoveryRequest(s, msg.from, p, ctx, out);
            } else if constexpr (std::is_same_v<T, RecoveryReply>) {
                storage::onRecoveryReply(s, msg.from, p, ctx, out);
            } else if constexpr (std::is_same_v<T, FaultyAnnouncement>) {
                onFaulty(s, msg.from, p, out);
            } else if constexpr (std::is_same_v<T, TxnSubmit>) {
                if (s.id.kind == NodeKind::Edge) out.admitted.push_back(p.txn);
            }
        },
        msg.payload);
}

void handleTimer(NodeState& s, const TimerRequest& timer, Context& ctx, Outbox& out) {
    switch (timer.tag) {
        case TimerTag::AtwTick:
            if (timer.key == s.tickEpoch) atwGossipTick(s, ctx, out);
            return;
        case TimerTag::AttemptDeadline:
            if (s.inFlight && s.inFlight->token == timer.key) abortAttempt(s, ctx, out, "timeout");
            return;
        case TimerTag::RecoveryDeadline:
            storage::onFetchDeadline(s, timer.key, ctx, out);
            return;
    }
}

}  // namespace dean::consensus
