#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <unordered_map>
#include <variant>
#include <vector>

#include <json.hpp>

#include "dean/consensus/lock_registry.hpp"
#include "dean/consensus/protocol.hpp"
#include "dean/sim/rng.hpp"
#include "dean/sim/topology.hpp"
#include "dean/sim/trace.hpp"
#include "dean/workload/workload.hpp"

namespace dean::sim {

struct Fault {
    enum class Mode : std::uint8_t { Silent, Restart, ByzantineFlip };
    NodeId target;
    Mode mode = Mode::Silent;
    /// Silent: onset. Restart: crash time. ByzantineFlip: activation time.
    SimMillis at = 0;
    SimMillis downFor = 0;
    double probability = 0;
    std::uint64_t seed = 0;

    static Fault silent(const NodeId& n, SimMillis from) { return {n, Mode::Silent, from, 0, 0, 0}; }
    static Fault restart(const NodeId& n, SimMillis at, SimMillis downFor) {
        return {n, Mode::Restart, at, downFor, 0, 0};
    }
    static Fault byzantine(const NodeId& n, double p, std::uint64_t seed, SimMillis at = 0) {
        return {n, Mode::ByzantineFlip, at, 0, p, seed};
    }
};

struct Deliver {
    consensus::Message msg;
};
struct NodeTimer {
    NodeId node;
    consensus::TimerRequest timer;
};
struct Inject {
    Fault fault;
    /// Second half of a restart: the node comes back.
    bool recovery = false;
};
/// The next workload item is due.
struct Issue {};
/// A registry lock reached the end of its lease.
struct LeaseCheck {
    Hash32 cHash;
    std::uint64_t epoch = 0;
};
/// A join candidate comes online.
struct JoinStart {
    std::size_t candidate = 0;
};

struct SimEvent {
    SimMillis fireAt = 0;
    std::uint64_t seq = 0;
    std::variant<Deliver, NodeTimer, Inject, Issue, LeaseCheck, JoinStart> kind;
};

struct LaterEvent {
    bool operator()(const SimEvent& a, const SimEvent& b) const {
        return a.fireAt != b.fireAt ? a.fireAt > b.fireAt : a.seq > b.seq;
    }
};

/// Latency model shared by the world and scheduleSend.
struct LinkModel {
    SimMillis sensorEdge = 95;
    SimMillis edgeEdge = 150;
    /// Uniform jitter as a fraction of the base latency (0.1 = plus or minus 10%).
    double jitterFraction = 0.1;
};

/// Deliver event for `msg` departing at `departAt`. UnknownNode if an endpoint is not in
/// the topology (the network queue counts as an edge).
Expected<SimEvent> scheduleSend(const consensus::Message& msg, const Topology& topology, const LinkModel& links,
                                SimMillis departAt, Rng& rng, std::uint64_t seq);

enum class TraceMode : std::uint8_t { Full, Digest, Off };

struct WorldConfig {
    consensus::NetworkConfig net;
    LinkModel links;
    /// Each further message in one handler's batch leaves this much later.
    SimMillis messageOverheadMs = 1;
    std::uint64_t seed = 1;
    /// EventStorm is raised when the queue grows beyond this.
    std::size_t eventCeiling = 20'000'000;
    /// Per-node disk capacity overrides (block slots).
    std::map<NodeId, std::int64_t> diskOverrides;
    /// Checks used <= capacity for the handling node after every event.
    bool checkCapacity = true;
};

/// Counters and samples gathered while running; everything here is simulated time.
struct Metrics {
    std::uint64_t eventsProcessed = 0;
    std::uint64_t messagesSent = 0;
    std::uint64_t blocksAssembled = 0;
    std::uint64_t blocksCommitted = 0;
    std::uint64_t txnsIssued = 0;
    std::uint64_t txnsAdmitted = 0;
    std::uint64_t txnsCommitted = 0;
    std::uint64_t requeues = 0;
    std::uint64_t joins = 0;
    std::uint64_t capacityViolations = 0;
    std::optional<SimMillis> firstIssue;
    std::optional<SimMillis> lastCommit;
    /// Replicate note to the (quorum - 1)-th replica persist, one sample per block.
    std::vector<SimMillis> commitLatencies;

    /// Committed transactions per simulated second.
    double throughput() const;
    double meanCommitLatency() const;
};

struct CommittedBlock {
    BlockRef block;
    SimMillis at = 0;
    /// Null for blocks committed by observation during the build-network phase.
    std::optional<NodeId> leader;
};

nlohmann::json configToJson(const WorldConfig& config);

/// Full simulation state. Copyable: a copy is an independent fork of the run.
class World {
public:
    World(WorldConfig config, Topology topology);

    void loadWorkload(std::vector<workload::WorkloadItem> items);
    void injectFaults(const std::vector<Fault>& plan);
    /// An edge node that asks to join at `at`. Returns its id.
    NodeId addJoinCandidate(consensus::Registration reg, SimMillis at);

    /// Replaces the observers; the header is sent to each new observer immediately.
    void setObservers(std::vector<std::shared_ptr<TraceObserver>> observers);
    const std::vector<std::shared_ptr<TraceObserver>>& observers() const { return observers_; }
    nlohmann::json traceHeader() const;
    /// Swaps every observer for its clone. A copied world calls this so that it stops
    /// feeding the original's observers.
    void detachObservers();

    /// Processes one event. False when the queue is empty.
    bool step();
    /// Runs until the queue is empty or the next event is later than stopAt.
    void runUntil(SimMillis stopAt);
    /// Runs until the whole workload is issued and every assembled block is committed,
    /// or until `limit`. True if settled.
    bool runUntilSettled(SimMillis limit);
    bool settled() const;

    SimMillis now() const { return clock_; }
    std::size_t queueSize() const { return queue_.size(); }
    const Metrics& metrics() const { return metrics_; }
    const Topology& topology() const { return topology_; }
    const WorldConfig& config() const { return config_; }
    const std::vector<NodeId>& edgeIds() const { return edgeOrder_; }
    const consensus::NodeState& state(const NodeId& id) const;
    consensus::NodeState& mutableState(const NodeId& id);
    const consensus::LockRegistry& locks() const { return locks_; }
    const std::map<Hash32, CommittedBlock>& committed() const { return committed_; }
    const std::vector<Hash32>& commitOrder() const { return commitOrder_; }
    /// Every block the queue ever assembled, by cHash.
    const std::map<Hash32, BlockRef>& assembled() const { return assembled_; }
    std::size_t pendingBlocks() const { return pending_.size(); }

    bool isSilent(const NodeId& id) const;
    bool isDown(const NodeId& id) const;
    /// Neither silent nor down.
    bool isActive(const NodeId& id) const { return !isSilent(id) && !isDown(id); }
    bool isCompromised(const NodeId& id) const { return compromised_.count(id) != 0; }
    std::vector<NodeId> leaders() const;

    /// Half-coins over all edge nodes, and what conservation says they must be.
    std::int64_t totalHalfCoins() const;
    std::int64_t expectedHalfCoins() const;

    /// Fetches a stored block from a live holder (used by synchronous recovery).
    BlockRef fetchFrom(const NodeId& holder, const Hash32& cHash) const;

private:
    struct EdgeSlot {
        consensus::NodeState state;
        std::optional<SimMillis> silentFrom;
        bool down = false;
        bool offerOutstanding = false;
    };

    void push(SimMillis at, decltype(SimEvent::kind) kind);
    void emit(SimMillis at, const NodeId& node, const std::string& kind, const Hash32& digest);
    void send(consensus::Message msg, SimMillis departAt);
    void handle(const SimEvent& ev);
    void onDeliver(const consensus::Message& msg);
    void onInject(const Inject& inj);
    void onIssue();
    void onLease(const LeaseCheck& lc);
    void onJoinStart(const JoinStart& js);
    void apply(EdgeSlot& slot, consensus::Outbox& out);
    void admit(EdgeSlot& slot, const Transaction& txn);
    void assemble(EdgeSlot& creator);
    void observeNote(const NodeId& node, const std::string& kind, const Hash32& digest);
    void markCommitted(const BlockRef& block, std::optional<NodeId> leader);
    void requeue(const BlockRef& block);
    void dispatch();
    bool anyActiveLeader() const;
    void broadcastBootstrap(const BlockRef& block);
    consensus::Context context();

    WorldConfig config_;
    Topology topology_;
    Rng rng_;
    consensus::LockRegistry locks_;
    std::priority_queue<SimEvent, std::vector<SimEvent>, LaterEvent> queue_;
    std::uint64_t seq_ = 0;
    SimMillis clock_ = 0;

    std::unordered_map<NodeId, EdgeSlot, NodeIdHasher> edges_;
    std::vector<NodeId> edgeOrder_;
    std::vector<std::pair<consensus::Registration, SimMillis>> candidates_;
    std::set<NodeId> compromised_;

    std::vector<workload::WorkloadItem> workload_;
    std::size_t nextIssue_ = 0;
    std::unordered_map<Hash32, SimMillis, Hash32Hasher> issuedAt_;

    // Network queue.
    std::deque<Transaction> admitted_;
    Hash32 lastAssembled_;
    std::uint64_t assemblySeq_ = 0;
    std::map<Hash32, BlockRef> assembled_;
    std::map<std::uint64_t, BlockRef> pending_;
    std::unordered_map<Hash32, std::uint64_t, Hash32Hasher> pendingSeq_;
    std::unordered_map<Hash32, std::uint64_t, Hash32Hasher> offered_;
    std::unordered_map<Hash32, std::set<NodeId>, Hash32Hasher> bootstrapHolders_;
    std::set<Hash32> bootstrapBlocks_;
    std::set<NodeId> leaderCache_;
    std::set<Hash32> latencySampled_;

    std::map<Hash32, CommittedBlock> committed_;
    std::vector<Hash32> commitOrder_;
    struct ReplicationWatch {
        NodeId leader;
        SimMillis startedAt = 0;
        std::size_t persisted = 0;
    };
    std::unordered_map<Hash32, ReplicationWatch, Hash32Hasher> replication_;

    Metrics metrics_;
    std::vector<std::shared_ptr<TraceObserver>> observers_;
};

}  // namespace dean::sim
