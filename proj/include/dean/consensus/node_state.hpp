#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "dean/consensus/config.hpp"
#include "dean/consensus/message.hpp"
#include "dean/core/types.hpp"
#include "dean/storage/hollow.hpp"

namespace dean::consensus {

enum class Role : std::uint8_t { Sensor, Edge, Leader };
enum class Phase : std::uint8_t { Building, Steady };

/// A peer's latest ATW record together with the time it was shared.
struct KnownRecord {
    std::shared_ptr<const AtwRecord> record;
    SimMillis sharedAt = 0;
};

/// The single block a leader is mining. Volatile: lost on restart.
struct MiningAttempt {
    BlockRef block;
    Hash32 tHash;
    std::uint64_t lockEpoch = 0;
    /// Key of this attempt's deadline timer.
    std::uint64_t token = 0;
    SimMillis lockedAt = 0;
    /// Set once the block was validated and replication went out.
    std::optional<SimMillis> replicatedAt;
    /// Parent not yet stored locally; validation resumes when it arrives.
    bool awaitingParent = false;
    /// Parent is hollow; a recovery is running.
    bool recoveringParent = false;
    /// Parent payload was recovered and checked against its cHash.
    bool parentVerified = false;
    std::set<NodeId> acks;
};

/// A block received before its parent.
struct Orphan {
    BlockRef block;
    NodeId from;
    ProposalMode mode = ProposalMode::Bootstrap;
    Hash32 tHash;
    /// Came back from a catch-up fetch: stored silently, no decision or ack.
    bool fetched = false;
};

/// Requester side of a block fetch. Hollow recovery walks the rList holders in order;
/// catch-up after missed blocks walks the peers that should have the block.
struct RecoverySession {
    enum class Purpose : std::uint8_t { Hollow, CatchUp };
    Purpose purpose = Purpose::CatchUp;
    Hash32 cHash;
    std::vector<NodeId> targets;
    std::size_t next = 0;
    std::uint64_t token = 0;
};

/// Leader side of a join handshake.
struct PendingJoin {
    Hash32 challenge;
    bool expectedVerdict = true;
    std::int64_t feeHalfCoins = 0;
};

/// Byzantine behaviour: each reported verdict is inverted with this probability, drawn
/// from a private seeded stream.
struct VerdictFlip {
    double probability = 0;
    std::uint64_t rngState = 0;
};

/// One node's complete protocol state. Fields marked volatile are cleared by a restart;
/// everything else counts as persisted.
struct NodeState {
    NodeId id;
    Role role = Role::Edge;
    Phase phase = Phase::Building;

    std::vector<storage::ChainEntry> chain;
    std::unordered_map<Hash32, std::size_t, Hash32Hasher> chainIndex;
    std::vector<BlockRef> sideChain;
    std::unordered_map<Hash32, std::size_t, Hash32Hasher> sideIndex;
    std::map<Hash32, std::vector<RelocationPointer>> hollowPointers;
    std::int64_t fullEntries = 0;

    std::set<NodeId> adjacency;
    std::map<NodeId, KnownRecord> atwTable;
    std::int64_t diskCapacity = 4096;
    /// Balance in half-coins so that a split reward stays integral.
    std::int64_t halfCoins = 0;
    std::uint64_t mined = 0;

    // Membership and trust bookkeeping.
    std::set<NodeId> knownEdges;
    std::size_t edgeCount = 0;
    std::set<NodeId> knownLeaders;
    std::set<NodeId> suspects;
    std::set<NodeId> faulty;
    std::map<Hash32, bool> decisions;
    std::map<NodeId, std::set<NodeId>> joinVotes;
    std::map<NodeId, SimMillis> lastSeen;
    bool expelled = false;
    bool joined = true;
    /// Lost the election while mining; steps down when the held block finishes.
    bool stepDownPending = false;
    /// Bumped on every restart so timers armed before the crash are ignored.
    std::uint64_t tickEpoch = 0;

    GeoPoint loc;
    GeoPoint geoAnchor;
    SimMillis geoSince = 0;
    SimMillis deployedAt = 0;
    Registration registration;
    VerdictFlip flip;

    // Volatile.
    std::set<Hash32> pendingLocks;
    std::optional<MiningAttempt> inFlight;
    std::map<Hash32, std::vector<Orphan>> orphans;
    std::map<Hash32, std::vector<std::pair<NodeId, bool>>> bufferedDecisions;
    std::map<Hash32, NodeId> relocating;
    std::map<Hash32, std::set<NodeId>> relocationRefusals;
    std::map<Hash32, RecoverySession> fetches;
    std::map<NodeId, PendingJoin> pendingJoins;
    /// Timer keys; never reset so that a stale timer cannot match a new attempt.
    std::uint64_t nextToken = 1;

    bool isLeader() const { return role == Role::Leader && !expelled; }
    bool idleLeader() const { return isLeader() && !inFlight; }
    std::size_t quorumSize() const { return quorum(edgeCount); }

    bool hasBlock(const Hash32& cHash) const { return chainIndex.count(cHash) != 0; }
    const storage::ChainEntry* entry(const Hash32& cHash) const;
    const storage::ChainEntry& tip() const { return chain.back(); }
    const Hash32& tipHash() const { return storage::entryHash(chain.back()); }

    /// Full blocks in the chain plus side-chain blocks.
    std::int64_t usedSlots() const;
    storage::DiskGauge gauge() const { return {diskCapacity, usedSlots()}; }

    void appendBlock(BlockRef block);
    void replaceEntry(const Hash32& cHash, storage::ChainEntry entry);

    /// Snapshot of this node's own ATW attributes at `now`.
    AtwRecord ownRecord(SimMillis now) const;
    /// Same as AtwSummary::of(ownRecord(now)) without copying the adjacency set.
    AtwSummary ownSummary(SimMillis now) const;

    /// Applies a crash: every volatile field goes back to its initial value.
    void clearVolatile();
};

/// Initial state of an edge node: genesis block, membership of the initial edge set.
NodeState makeEdgeNode(const Registration& reg, const std::vector<NodeId>& initialEdges, const NetworkConfig& config,
                       std::int64_t diskCapacity);

/// The reported verdict after Byzantine flipping; advances the node's private stream.
bool reportVerdict(NodeState& state, bool truth);

/// Protocol-level observation written to the trace next to the delivery that caused it.
struct TraceNote {
    std::string kind;
    Hash32 digest;
};

enum class TimerTag : std::uint8_t { AtwTick, AttemptDeadline, RecoveryDeadline };

struct TimerRequest {
    SimMillis delay = 0;
    TimerTag tag = TimerTag::AtwTick;
    std::uint64_t key = 0;
};

/// Coin movement that touches two nodes and is settled atomically by the simulator.
struct Transfer {
    NodeId from;
    NodeId to;
    std::int64_t halfCoins = 0;
};

/// Everything a handler wants to happen outside the node: messages in send order,
/// timers, trace notes, ledger transfers.
struct Outbox {
    std::vector<Message> messages;
    std::vector<TimerRequest> timers;
    std::vector<TraceNote> notes;
    std::vector<Transfer> transfers;
    /// Blocks whose mining attempt ended without a commit and must be offered again.
    std::vector<BlockRef> requeued;
    /// Blocks this node just committed as leader.
    std::vector<BlockRef> committed;
    /// Transactions an edge accepted from its sensors, in arrival order.
    std::vector<Transaction> admitted;

    void send(const NodeId& from, const NodeId& to, Payload payload, SimMillis now) {
        messages.push_back(Message{from, to, std::move(payload), now});
    }
    void note(std::string kind, const Hash32& digest) { notes.push_back({std::move(kind), digest}); }
};

}  // namespace dean::consensus
