#pragma once

#include <span>
#include <vector>

#include "dean/consensus/config.hpp"
#include "dean/consensus/lock_registry.hpp"
#include "dean/consensus/message.hpp"
#include "dean/consensus/node_state.hpp"
#include "dean/core/error.hpp"

namespace dean::consensus {

/// What a handler may touch besides its own node.
struct Context {
    const NetworkConfig& config;
    LockRegistry& locks;
    SimMillis now = 0;
};

/// Identity of the simulator-scoped network queue that offers assembled blocks to leaders.
NodeId networkQueueId();

/// 2|adj| > n, i.e. adjacent to more than half of the other edge nodes' population.
constexpr bool leaderEligible(std::size_t adjacencySize, std::size_t edgeCount) {
    return 2 * adjacencySize > edgeCount;
}

// ---- build-network phase ----

struct Phase1Result {
    bool decision = false;
    bool appended = false;
};

/// Validates a bootstrap block against the local tip. A new valid block is appended and
/// the node's decision goes to every known edge peer while the node is still short of
/// leader-eligible adjacency. Blocks already stored yield decision=true and no messages.
/// A block whose parent is unknown is parked as an orphan and decision=false is returned
/// without recording anything.
Phase1Result verifyBlockPhase1(NodeState& state, const BlockRef& block, Context& ctx, Outbox& out);

/// Compares a peer's decision with the local one. Matching peers join the adjacency,
/// conflicting ones become permanent suspects. Returns whether adjacency grew.
/// UnknownBlock when the local decision does not exist yet (the decision is buffered).
Expected<bool> buildNetworkOnDecision(NodeState& state, const NodeId& peer, const ValidationDecision& decision);

// ---- leader selection and mining ----

/// Eligible records (adjacency over half of edgeCount) tied for the maximal score.
/// The adjacency term is normalised by edgeCount - 1, the number of possible peers.
Expected<std::vector<NodeId>> electLeaders(std::span<const AtwRecord> records, std::size_t edgeCount,
                                           const NetworkConfig& config);
Expected<std::vector<NodeId>> electLeaders(std::span<const AtwSummary> records, std::size_t edgeCount,
                                           const NetworkConfig& config);

/// hash(cHash || leader || now).
Hash32 computeTHash(const Hash32& cHash, const NodeId& leader, SimMillis now);

/// Takes the registry lock for `block` and starts a mining attempt with the stamped copy.
/// AlreadyLocked names the holder in its detail.
Expected<BlockRef> acquireBlockLock(NodeState& leader, const BlockRef& block, Context& ctx, Outbox& out);

enum class ValidateOutcome { Replicated, AwaitingParent, RecoveringParent, Invalid };

/// Drives the held attempt: parent checks, validation, local persist and replication to
/// the adjacency. Commit happens later in onReplicaAck once a quorum has persisted.
/// An invalid block releases the lock and is requeued.
ValidateOutcome consensusValidate(NodeState& leader, Context& ctx, Outbox& out);

/// Counts a replica's answer; commits when leader plus positive acks reach quorum.
void onReplicaAck(NodeState& leader, const NodeId& from, const ValidationDecision& ack, Context& ctx, Outbox& out);

/// Ends the held attempt without commit: lock released, block handed back for requeue.
void abortAttempt(NodeState& leader, Context& ctx, Outbox& out, const char* reason);

/// A mining attempt resumed after a restart: the block is re-replicated and commits if a
/// quorum confirms it, otherwise it aborts at the deadline like any other attempt.
void resumeAttempt(NodeState& leader, const BlockRef& block, const LockEntry& lock, Context& ctx, Outbox& out);

/// Replica side of replication.
void onReplicate(NodeState& replica, const NodeId& from, const BlockProposal& proposal, Context& ctx, Outbox& out);

/// A block offered to a leader by the network queue.
void onOffer(NodeState& leader, const BlockRef& block, Context& ctx, Outbox& out);

/// Runs after every append: orphans whose parent arrived, parked attempts, disk pressure.
void afterAppend(NodeState& state, Context& ctx, Outbox& out);

/// A fetch finished with a block that re-hashed to the requested cHash.
void onBlockFetched(NodeState& state, const BlockRef& block, RecoverySession::Purpose purpose, Context& ctx,
                    Outbox& out);

/// Every fetch target failed.
void onFetchFailed(NodeState& state, const Hash32& cHash, RecoverySession::Purpose purpose, Context& ctx,
                   Outbox& out);

// ---- joins ----

/// Candidate side: sends its registration with the escrowed fee to every known leader.
void requestJoin(NodeState& candidate, Context& ctx, Outbox& out);

/// Leader side, first half: checks the identity digest and sends a challenge block.
Expected<Hash32> approveNewNode(NodeState& leader, const NodeId& from, const JoinRequest& request, Context& ctx,
                                Outbox& out);

/// Candidate side: validates the challenge and returns its verdict.
void onJoinChallenge(NodeState& candidate, const NodeId& from, const JoinChallenge& challenge, Context& ctx,
                     Outbox& out);

/// Leader side, second half: a correct verdict admits the candidate, earns the fee and
/// broadcasts NodeApproved. FailedChallenge otherwise.
Expected<bool> onJoinResult(NodeState& leader, const NodeId& from, const JoinResult& result, Context& ctx,
                            Outbox& out);

void onLeaderBroadcast(NodeState& state, const NodeId& from, const LeaderBroadcast& msg, Context& ctx, Outbox& out);

// ---- gossip ----

/// Shares the node's record, detects silent adjacency peers and re-runs the election.
void atwGossipTick(NodeState& state, Context& ctx, Outbox& out);

/// The node's view of every trusted edge (itself included), timers advanced to `now`.
/// Records older than maxAge are left out.
std::vector<AtwSummary> projectedSummaries(const NodeState& state, SimMillis now, SimMillis maxAge);

// ---- dispatch ----

/// Entry point for every delivered message. Messages from peers marked faulty are dropped.
void handleMessage(NodeState& state, const Message& msg, Context& ctx, Outbox& out);

/// Timer entry point.
void handleTimer(NodeState& state, const TimerRequest& timer, Context& ctx, Outbox& out);

}  // namespace dean::consensus
