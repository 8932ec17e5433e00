#include "dean/sim/world.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dean/core/chain.hpp"
#include "dean/core/codec.hpp"
#include "dean/core/error.hpp"
#include "dean/storage/memory_balance.hpp"

namespace dean::sim {

using consensus::BlockProposal;
using consensus::Message;
using consensus::Outbox;
using consensus::ProposalMode;

double Metrics::throughput() const {
    if (!firstIssue || !lastCommit || *lastCommit <= *firstIssue) return 0.0;
    return static_cast<double>(txnsCommitted) * 1000.0 / static_cast<double>(*lastCommit - *firstIssue);
}

double Metrics::meanCommitLatency() const {
    if (commitLatencies.empty()) return 0.0;
    const double sum = std::accumulate(commitLatencies.begin(), commitLatencies.end(), 0.0);
    return sum / static_cast<double>(commitLatencies.size());
}

Expected<SimEvent> scheduleSend(const Message& msg, const Topology& topology, const LinkModel& links,
                                SimMillis departAt, Rng& rng, std::uint64_t seq) {
    auto kindOf = [&](const NodeId& id) -> std::optional<NodeKind> {
        if (id == consensus::networkQueueId()) return NodeKind::Edge;
        return topology.kindOf(id);
    };
    const auto a = kindOf(msg.from);
    const auto b = kindOf(msg.to);
    if (!a) return Failure{ErrorCode::UnknownNode, msg.from.shortHex()};
    if (!b) return Failure{ErrorCode::UnknownNode, msg.to.shortHex()};
    const SimMillis base = (*a == NodeKind::Sensor || *b == NodeKind::Sensor) ? links.sensorEdge : links.edgeEdge;
    SimMillis latency = base;
    if (links.jitterFraction > 0) {
        const double u = rng.uniform() * 2.0 - 1.0;
        latency += static_cast<SimMillis>(std::llround(static_cast<double>(base) * links.jitterFraction * u));
    }
    return SimEvent{departAt + std::max<SimMillis>(latency, 0), seq, Deliver{msg}};
}

nlohmann::json configToJson(const WorldConfig& c) {
    const auto& n = c.net;
    return nlohmann::json{
        {"initialEdgeCount", n.initialEdgeCount},
        {"faultBound", n.faultBound},
        {"sensorEdgeRatio", n.sensorEdgeRatio},
        {"areaSide", n.areaSide},
        {"linkLatencySensorEdge", c.links.sensorEdge},
        {"linkLatencyEdgeEdge", c.links.edgeEdge},
        {"jitterFraction", c.links.jitterFraction},
        {"messageOverheadMs", c.messageOverheadMs},
        {"atwSharePeriod", n.atwSharePeriod},
        {"atwTimeout", n.atwTimeout},
        {"replicationTimeout", n.replicationTimeout},
        {"lockLease", n.lockLease},
        {"recoveryTimeout", n.recoveryTimeout},
        {"joinFeeCoins", n.joinFeeCoins},
        {"txnsPerBlock", n.txnsPerBlock},
        {"defaultDiskCapacity", n.defaultDiskCapacity},
        {"weights",
         {{"adjacency", n.weights.adjacency},
          {"geo", n.weights.geo},
          {"activity", n.weights.activity},
          {"disk", n.weights.disk}}},
        {"atwScale",
         {{"geoSaturationMs", n.atwScale.geoSaturationMs},
          {"activitySaturationMs", n.atwScale.activitySaturationMs},
          {"diskReferenceSlots", n.atwScale.diskReferenceSlots}}},
        {"seed", c.seed},
        {"eventCeiling", c.eventCeiling},
    };
}

World::World(WorldConfig config, Topology topology)
    : config_(std::move(config)), topology_(std::move(topology)), rng_(config_.seed) {
    topology_.reindex();
    config_.net.initialEdgeCount = topology_.edgeNodes.size();
    config_.net.faultBound = config_.net.initialEdgeCount == 0 ? 0 : (config_.net.initialEdgeCount - 1) / 2;
    config_.net.validate();
    lastAssembled_ = genesisBlock().cHash;

    const auto ids = topology_.edgeIds();
    for (const auto& site : topology_.edgeNodes) {
        auto disk = config_.net.defaultDiskCapacity;
        if (auto it = config_.diskOverrides.find(site.id); it != config_.diskOverrides.end()) disk = it->second;
        EdgeSlot slot;
        slot.state = consensus::makeEdgeNode(site.registration, ids, config_.net, disk);
        edges_.emplace(site.id, std::move(slot));
        edgeOrder_.push_back(site.id);
    }
    for (const auto& id : edgeOrder_) {
        const auto offset = static_cast<SimMillis>(rng_.uniformInt(0, static_cast<std::uint64_t>(config_.net.atwSharePeriod - 1)));
        push(offset, NodeTimer{id, consensus::TimerRequest{0, consensus::TimerTag::AtwTick, 0}});
    }
}

nlohmann::json World::traceHeader() const {
    return nlohmann::json{{"schema", kTraceSchema},
                          {"seed", config_.seed},
                          {"edgeCount", topology_.edgeNodes.size() - candidates_.size()},
                          {"sensorCount", topology_.sensorNodes.size()},
                          {"config", configToJson(config_)}};
}

void World::setObservers(std::vector<std::shared_ptr<TraceObserver>> observers) {
    observers_ = std::move(observers);
    const auto header = traceHeader();
    for (auto& o : observers_) o->onHeader(header);
}

void World::detachObservers() {
    for (auto& o : observers_) o = o->clone();
}

void World::loadWorkload(std::vector<workload::WorkloadItem> items) {
    std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.issueAt < b.issueAt; });
    const bool wasIdle = nextIssue_ >= workload_.size();
    workload_.insert(workload_.end(), std::make_move_iterator(items.begin()), std::make_move_iterator(items.end()));
    if (wasIdle && nextIssue_ < workload_.size()) push(std::max(clock_, workload_[nextIssue_].issueAt), Issue{});
}

void World::injectFaults(const std::vector<Fault>& plan) {
    for (const auto& f : plan) {
        if (!edges_.count(f.target)) throw DeanError(ErrorCode::UnknownNode, f.target.shortHex());
        if (f.mode != Fault::Mode::Restart) compromised_.insert(f.target);
        push(std::max(clock_, f.at), Inject{f, false});
    }
}

NodeId World::addJoinCandidate(consensus::Registration reg, SimMillis at) {
    reg.kind = NodeKind::Edge;
    const NodeId id = consensus::identityOf(reg);
    topology_.edgeNodes.push_back(EdgeSite{id, reg});
    topology_.reindex();
    candidates_.emplace_back(reg, at);
    push(std::max(clock_, at), JoinStart{candidates_.size() - 1});
    return id;
}

const consensus::NodeState& World::state(const NodeId& id) const {
    auto it = edges_.find(id);
    if (it == edges_.end()) throw DeanError(ErrorCode::UnknownNode, id.shortHex());
    return it->second.state;
}

consensus::NodeState& World::mutableState(const NodeId& id) {
    auto it = edges_.find(id);
    if (it == edges_.end()) throw DeanError(ErrorCode::UnknownNode, id.shortHex());
    return it->second.state;
}

bool World::isSilent(const NodeId& id) const {
    auto it = edges_.find(id);
    return it != edges_.end() && it->second.silentFrom && *it->second.silentFrom <= clock_;
}

bool World::isDown(const NodeId& id) const {
    auto it = edges_.find(id);
    return it != edges_.end() && it->second.down;
}

std::vector<NodeId> World::leaders() const {
    std::vector<NodeId> out;
    for (const auto& id : edgeOrder_) {
        if (edges_.at(id).state.isLeader()) out.push_back(id);
    }
    return out;
}

std::int64_t World::totalHalfCoins() const {
    std::int64_t total = 0;
    for (const auto& [id, slot] : edges_) total += slot.state.halfCoins;
    return total;
}

std::int64_t World::expectedHalfCoins() const {
    std::int64_t mined = 0;
    for (const auto& [id, slot] : edges_) mined += static_cast<std::int64_t>(slot.state.mined);
    return 2 * mined + 2 * config_.net.joinFeeCoins * static_cast<std::int64_t>(metrics_.joins);
}

BlockRef World::fetchFrom(const NodeId& holder, const Hash32& cHash) const {
    auto it = edges_.find(holder);
    if (it == edges_.end() || !isActive(holder)) return nullptr;
    return storage::findStoredBlock(it->second.state, cHash);
}

consensus::Context World::context() { return consensus::Context{config_.net, locks_, clock_}; }

void World::push(SimMillis at, decltype(SimEvent::kind) kind) {
    queue_.push(SimEvent{at, seq_++, std::move(kind)});
    if (queue_.size() > config_.eventCeiling) {
        throw DeanError(ErrorCode::EventStorm, "event queue exceeded " + std::to_string(config_.eventCeiling));
    }
}

void World::emit(SimMillis at, const NodeId& node, const std::string& kind, const Hash32& digest) {
    if (observers_.empty()) return;
    const TraceRecord r{at, node, kind, digest};
    for (auto& o : observers_) o->onRecord(r);
}

void World::send(Message msg, SimMillis departAt) {
    msg.sentAt = departAt;
    auto ev = scheduleSend(msg, topology_, config_.links, departAt, rng_, seq_);
    if (!ev) throw DeanError(ev.code(), ev.failure().detail);
    ++seq_;
    ++metrics_.messagesSent;
    queue_.push(std::move(ev).value());
    if (queue_.size() > config_.eventCeiling) {
        throw DeanError(ErrorCode::EventStorm, "event queue exceeded " + std::to_string(config_.eventCeiling));
    }
}

bool World::step() {
    if (queue_.empty()) return false;
    SimEvent ev = queue_.top();
    queue_.pop();
    clock_ = std::max(clock_, ev.fireAt);
    handle(ev);
    ++metrics_.eventsProcessed;
    dispatch();
    return true;
}

void World::runUntil(SimMillis stopAt) {
    while (!queue_.empty() && queue_.top().fireAt <= stopAt) step();
    clock_ = std::max(clock_, stopAt);
}

bool World::settled() const {
    return nextIssue_ >= workload_.size() && pending_.empty() && assembled_.size() == committed_.size() &&
           admitted_.size() < config_.net.txnsPerBlock;
}

bool World::runUntilSettled(SimMillis limit) {
    while (!settled() && !queue_.empty() && queue_.top().fireAt <= limit) step();
    return settled();
}

void World::handle(const SimEvent& ev) {
    std::visit(
        [&](const auto& k) {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, Deliver>) {
                onDeliver(k.msg);
            } else if constexpr (std::is_same_v<T, NodeTimer>) {
                auto it = edges_.find(k.node);
                if (it == edges_.end()) return;
                if (!observers_.empty()) {
                    static const char* names[] = {"timer:AtwTick", "timer:AttemptDeadline", "timer:RecoveryDeadline"};
                    ByteWriter w;
                    w.u64(static_cast<std::uint64_t>(k.timer.tag));
                    w.u64(k.timer.key);
                    emit(clock_, k.node, names[static_cast<int>(k.timer.tag)], w.digest());
                }
                if (!isActive(k.node)) return;
                auto ctx = context();
                Outbox out;
                consensus::handleTimer(it->second.state, k.timer, ctx, out);
                apply(it->second, out);
            } else if constexpr (std::is_same_v<T, Inject>) {
                onInject(k);
            } else if constexpr (std::is_same_v<T, Issue>) {
                onIssue();
            } else if constexpr (std::is_same_v<T, LeaseCheck>) {
                onLease(k);
            } else if constexpr (std::is_same_v<T, JoinStart>) {
                onJoinStart(k);
            }
        },
        ev.kind);
}

void World::onDeliver(const Message& msg) {
    if (!observers_.empty()) {
        emit(clock_, msg.to, std::string(consensus::messageKindName(msg.kind())), consensus::payloadDigest(msg));
    }
    auto it = edges_.find(msg.to);
    if (it == edges_.end()) return;
    auto& slot = it->second;
    if (const auto* p = std::get_if<BlockProposal>(&msg.payload); p && p->mode == ProposalMode::Offer) {
        slot.offerOutstanding = false;
        if (auto o = offered_.find(p->block->cHash); o != offered_.end() && --o->second == 0) offered_.erase(o);
    }
    if (!isActive(msg.to)) return;
    auto ctx = context();
    Outbox out;
    consensus::handleMessage(slot.state, msg, ctx, out);
    apply(slot, out);
}

void World::apply(EdgeSlot& slot, Outbox& out) {
    const NodeId self = slot.state.id;
    for (const auto& n : out.notes) observeNote(self, n.kind, n.digest);
    for (const auto& t : out.transfers) {
        auto from = edges_.find(t.from);
        auto to = edges_.find(t.to);
        if (from == edges_.end() || to == edges_.end()) continue;
        storage::applyTransfer(from->second.state, to->second.state, t);
        emit(clock_, t.to, "transfer", hashBytes(t.from.hex() + t.to.hex()));
    }
    for (const auto& b : out.committed) markCommitted(b, self);
    for (const auto& b : out.requeued) requeue(b);
    for (const auto& t : out.timers) push(clock_ + t.delay, NodeTimer{self, t});
    SimMillis departAt = clock_;
    for (auto& m : out.messages) {
        send(std::move(m), departAt);
        departAt += config_.messageOverheadMs;
    }
    for (const auto& txn : out.admitted) admit(slot, txn);
    if (config_.checkCapacity && slot.state.usedSlots() > slot.state.diskCapacity) {
        ++metrics_.capacityViolations;
        emit(clock_, self, "capacity-violation", self.digest);
    }
}

void World::observeNote(const NodeId& node, const std::string& kind, const Hash32& digest) {
    emit(clock_, node, kind, digest);
    if (kind == "persist") {
        if (bootstrapBlocks_.count(digest) && !committed_.count(digest)) {
            auto& holders = bootstrapHolders_[digest];
            holders.insert(node);
            if (holders.size() >= consensus::quorum(config_.net.initialEdgeCount + metrics_.joins)) {
                markCommitted(assembled_.at(digest), std::nullopt);
                bootstrapHolders_.erase(digest);
            }
        }
        auto w = replication_.find(digest);
        if (w != replication_.end() && w->second.leader != node) {
            auto& watch = w->second;
            watch.persisted += 1;
            const auto q = edges_.at(watch.leader).state.quorumSize();
            if (watch.persisted + 1 >= q) {
                if (latencySampled_.insert(digest).second) {
                    metrics_.commitLatencies.push_back(clock_ - watch.startedAt);
                }
                replication_.erase(w);
            }
        }
    } else if (kind == "replicate") {
        if (!latencySampled_.count(digest)) replication_[digest] = ReplicationWatch{node, clock_, 0};
    } else if (kind == "lock") {
        if (auto h = locks_.holderOf(digest)) push(clock_ + config_.net.lockLease, LeaseCheck{digest, h->epoch});
    } else if (kind == "elected") {
        leaderCache_.insert(node);
    } else if (kind == "step-down" || kind == "expelled") {
        leaderCache_.erase(node);
    } else if (kind == "join-approved") {
        ++metrics_.joins;
    }
}

void World::markCommitted(const BlockRef& block, std::optional<NodeId> leader) {
    const Hash32 cHash = block->cHash;
    if (committed_.count(cHash)) return;
    committed_.emplace(cHash, CommittedBlock{block, clock_, leader});
    commitOrder_.push_back(cHash);
    ++metrics_.blocksCommitted;
    metrics_.txnsCommitted += block->txnList.size();
    metrics_.lastCommit = clock_;
    if (auto it = pendingSeq_.find(cHash); it != pendingSeq_.end()) {
        pending_.erase(it->second);
        pendingSeq_.erase(it);
    }
    if (!leader) emit(clock_, consensus::networkQueueId(), "commit", cHash);
}

void World::requeue(const BlockRef& block) {
    if (committed_.count(block->cHash)) return;
    ++metrics_.requeues;
    emit(clock_, consensus::networkQueueId(), "requeue", block->cHash);
}

void World::onInject(const Inject& inj) {
    const auto& f = inj.fault;
    auto& slot = edges_.at(f.target);
    switch (f.mode) {
        case Fault::Mode::Silent:
            slot.silentFrom = clock_;
            leaderCache_.erase(f.target);
            emit(clock_, f.target, "fault:silent", f.target.digest);
            return;
        case Fault::Mode::ByzantineFlip:
            slot.state.flip = consensus::VerdictFlip{f.probability, f.seed};
            emit(clock_, f.target, "fault:byzantine", f.target.digest);
            return;
        case Fault::Mode::Restart:
            break;
    }
    if (!inj.recovery) {
        if (slot.down) return;
        slot.down = true;
        slot.state.clearVolatile();
        slot.state.tickEpoch += 1;
        slot.offerOutstanding = false;
        emit(clock_, f.target, "crash", f.target.digest);
        push(clock_ + f.downFor, Inject{f, true});
        return;
    }
    if (!slot.down) return;
    slot.down = false;
    emit(clock_, f.target, "restart", f.target.digest);
    push(clock_, NodeTimer{f.target, consensus::TimerRequest{0, consensus::TimerTag::AtwTick, slot.state.tickEpoch}});
    auto ctx = context();
    Outbox out;
    for (const auto& [cHash, entry] : locks_.heldBy(f.target)) {
        auto it = assembled_.find(cHash);
        if (it == assembled_.end()) continue;
        consensus::resumeAttempt(slot.state, it->second, entry, ctx, out);
    }
    apply(slot, out);
}

void World::onIssue() {
    if (nextIssue_ >= workload_.size()) return;
    const auto& item = workload_[nextIssue_++];
    ++metrics_.txnsIssued;
    if (!metrics_.firstIssue) metrics_.firstIssue = clock_;
    emit(clock_, item.sensor, "issue", item.txn.txnId);
    if (const auto* sensor = topology_.sensor(item.sensor)) {
        send(Message{item.sensor, sensor->attachedEdge, consensus::TxnSubmit{item.txn}, clock_}, clock_);
    }
    if (nextIssue_ < workload_.size()) push(std::max(clock_, workload_[nextIssue_].issueAt), Issue{});
}

void World::onLease(const LeaseCheck& lc) {
    const auto holder = locks_.holderOf(lc.cHash);
    if (!holder || holder->epoch != lc.epoch) return;
    locks_.release(lc.cHash, holder->holder, holder->epoch);
    emit(clock_, holder->holder, "lease-expired", lc.cHash);
    emit(clock_, holder->holder, "release", lc.cHash);
    if (auto it = assembled_.find(lc.cHash); it != assembled_.end()) requeue(it->second);
}

void World::onJoinStart(const JoinStart& js) {
    const auto& [reg, at] = candidates_.at(js.candidate);
    (void)at;
    EdgeSlot slot;
    slot.state = consensus::makeEdgeNode(reg, edgeOrder_, config_.net, config_.net.defaultDiskCapacity);
    slot.state.joined = false;
    for (const auto& id : leaderCache_) {
        if (isActive(id) && edges_.at(id).state.isLeader()) slot.state.knownLeaders.insert(id);
    }
    const NodeId id = slot.state.id;
    edges_.emplace(id, std::move(slot));
    edgeOrder_.push_back(id);
    emit(clock_, id, "join-start", id.digest);
    auto& s = edges_.at(id);
    auto ctx = context();
    Outbox out;
    consensus::requestJoin(s.state, ctx, out);
    apply(s, out);
    push(clock_ + config_.net.atwSharePeriod,
         NodeTimer{id, consensus::TimerRequest{0, consensus::TimerTag::AtwTick, s.state.tickEpoch}});
}

void World::admit(EdgeSlot& slot, const Transaction& txn) {
    ++metrics_.txnsAdmitted;
    emit(clock_, slot.state.id, "admit", txn.txnId);
    admitted_.push_back(txn);
    while (admitted_.size() >= config_.net.txnsPerBlock) assemble(slot);
}

void World::assemble(EdgeSlot& creator) {
    auto block = workload::assembleBlocks(admitted_, lastAssembled_, creator.state.id, clock_, config_.net.txnsPerBlock);
    if (!block) return;
    auto ref = std::make_shared<const Block>(std::move(*block));
    lastAssembled_ = ref->cHash;
    assembled_.emplace(ref->cHash, ref);
    ++metrics_.blocksAssembled;
    emit(clock_, creator.state.id, "assemble", ref->cHash);
    const auto seq = assemblySeq_++;
    pending_.emplace(seq, ref);
    pendingSeq_.emplace(ref->cHash, seq);
    // dispatch() decides between offering it to a leader and the build-network broadcast.
}

bool World::anyActiveLeader() const {
    for (const auto& id : leaderCache_) {
        if (isActive(id) && edges_.at(id).state.isLeader()) return true;
    }
    return false;
}

void World::broadcastBootstrap(const BlockRef& block) {
    bootstrapBlocks_.insert(block->cHash);
    emit(clock_, consensus::networkQueueId(), "bootstrap", block->cHash);
    SimMillis departAt = clock_;
    for (const auto& id : edgeOrder_) {
        if (!edges_.at(id).state.joined) continue;
        send(Message{consensus::networkQueueId(), id, BlockProposal{block, ProposalMode::Bootstrap, {}}, departAt},
             departAt);
        departAt += config_.messageOverheadMs;
    }
}

void World::dispatch() {
    if (pending_.empty()) return;
    if (!anyActiveLeader()) {
        // No one can mine: remaining blocks go out in order through the build-network path.
        while (!pending_.empty()) {
            auto it = pending_.begin();
            const BlockRef block = it->second;
            if (locks_.holderOf(block->cHash) || offered_.count(block->cHash)) break;
            pending_.erase(it);
            pendingSeq_.erase(block->cHash);
            broadcastBootstrap(block);
        }
        return;
    }
    for (const auto& id : leaderCache_) {
        auto& slot = edges_.at(id);
        const auto& s = slot.state;
        if (slot.offerOutstanding || !isActive(id) || !s.isLeader() || s.inFlight || s.stepDownPending) continue;
        BlockRef pick;
        for (const auto& [seq, block] : pending_) {
            if (!offered_.count(block->cHash) && !locks_.holderOf(block->cHash)) {
                pick = block;
                break;
            }
        }
        if (!pick) return;
        slot.offerOutstanding = true;
        offered_[pick->cHash] += 1;
        send(Message{consensus::networkQueueId(), id, BlockProposal{pick, ProposalMode::Offer, {}}, clock_}, clock_);
    }
}

}  // namespace dean::sim
