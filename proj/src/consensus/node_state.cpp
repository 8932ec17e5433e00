#include "dean/consensus/node_state.hpp"

#include "dean/core/chain.hpp"
#include "dean/core/error.hpp"

namespace dean::consensus {

const storage::ChainEntry* NodeState::entry(const Hash32& cHash) const {
    auto it = chainIndex.find(cHash);
    return it == chainIndex.end() ? nullptr : &chain[it->second];
}

std::int64_t NodeState::usedSlots() const { return fullEntries + static_cast<std::int64_t>(sideChain.size()); }

void NodeState::appendBlock(BlockRef block) {
    chainIndex.emplace(block->cHash, chain.size());
    chain.emplace_back(std::move(block));
    ++fullEntries;
}

void NodeState::replaceEntry(const Hash32& cHash, storage::ChainEntry replacement) {
    auto& slot = chain.at(chainIndex.at(cHash));
    fullEntries += (storage::isHollow(slot) ? 0 : -1) + (storage::isHollow(replacement) ? 0 : 1);
    slot = std::move(replacement);
}

AtwRecord NodeState::ownRecord(SimMillis now) const {
    AtwRecord rec;
    rec.nodeId = id;
    rec.timestamp = now - deployedAt;
    rec.geoTimer = now - geoSince;
    rec.loc = loc;
    rec.adj = adjacency;
    rec.mList = mined;
    rec.bList = static_cast<std::uint64_t>(usedSlots());
    rec.disk = diskCapacity - usedSlots();
    return rec;
}

AtwSummary NodeState::ownSummary(SimMillis now) const {
    return {id, adjacency.size(), now - deployedAt, now - geoSince, diskCapacity - usedSlots()};
}

void NodeState::clearVolatile() {
    pendingLocks.clear();
    inFlight.reset();
    orphans.clear();
    bufferedDecisions.clear();
    relocating.clear();
    relocationRefusals.clear();
    fetches.clear();
    pendingJoins.clear();
}

NodeState makeEdgeNode(const Registration& reg, const std::vector<NodeId>& initialEdges, const NetworkConfig& config,
                       std::int64_t diskCapacity) {
    NodeState s;
    s.registration = reg;
    s.id = identityOf(reg);
    s.role = Role::Edge;
    s.phase = Phase::Building;
    s.diskCapacity = diskCapacity;
    s.loc = reg.loc;
    s.geoAnchor = reg.loc;
    s.geoSince = reg.deployedAt;
    s.deployedAt = reg.deployedAt;
    s.knownEdges.insert(initialEdges.begin(), initialEdges.end());
    s.knownEdges.erase(s.id);
    s.edgeCount = std::max<std::size_t>(config.initialEdgeCount, s.knownEdges.size() + 1);
    s.appendBlock(genesisRef());
    return s;
}

bool reportVerdict(NodeState& state, bool truth) {
    if (state.flip.probability <= 0) return truth;
    // splitmix64 step; a uniform double from the top 53 bits.
    std::uint64_t z = (state.flip.rngState += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    const double u = static_cast<double>(z >> 11) * 0x1.0p-53;
    return u < state.flip.probability ? !truth : truth;
}

}  // namespace dean::consensus
