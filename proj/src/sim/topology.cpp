#include "dean/sim/topology.hpp"

#include <cmath>

#include "dean/core/error.hpp"
#include "dean/sim/rng.hpp"

namespace dean::sim {

void Topology::reindex() {
    index_.clear();
    for (std::size_t i = 0; i < edgeNodes.size(); ++i) index_[edgeNodes[i].id] = {false, i};
    for (std::size_t i = 0; i < sensorNodes.size(); ++i) index_[sensorNodes[i].id] = {true, i};
}

std::optional<NodeKind> Topology::kindOf(const NodeId& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second.first ? NodeKind::Sensor : NodeKind::Edge;
}

GeoPoint Topology::locationOf(const NodeId& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw DeanError(ErrorCode::UnknownNode, id.shortHex());
    return it->second.first ? sensorNodes[it->second.second].registration.loc
                            : edgeNodes[it->second.second].registration.loc;
}

std::vector<NodeId> Topology::edgeIds() const {
    std::vector<NodeId> ids;
    ids.reserve(edgeNodes.size());
    for (const auto& e : edgeNodes) ids.push_back(e.id);
    return ids;
}

const SensorSite* Topology::sensor(const NodeId& id) const {
    auto it = index_.find(id);
    if (it == index_.end() || !it->second.first) return nullptr;
    return &sensorNodes[it->second.second];
}

Topology buildTopology(const TopologySpec& spec) {
    if (spec.edges == 0) throw DeanError(ErrorCode::BadConfig, "topology needs at least one edge node");
    if (spec.areaSide <= 0) throw DeanError(ErrorCode::BadConfig, "areaSide must be positive");
    Rng rng(spec.seed);
    Topology t;
    t.areaSide = spec.areaSide;
    auto place = [&] {
        return GeoPoint{rng.uniformSigned(0, spec.areaSide), rng.uniformSigned(0, spec.areaSide)};
    };
    for (std::size_t i = 0; i < spec.edges; ++i) {
        consensus::Registration reg;
        reg.kind = NodeKind::Edge;
        reg.serial = i;
        reg.loc = place();
        reg.deployedAt = spec.deploySpreadMs > 0 ? -rng.uniformSigned(0, spec.deploySpreadMs) : 0;
        reg.salt = rng.next();
        t.edgeNodes.push_back(EdgeSite{consensus::identityOf(reg), reg});
    }
    for (std::size_t i = 0; i < spec.sensors; ++i) {
        consensus::Registration reg;
        reg.kind = NodeKind::Sensor;
        reg.serial = i;
        reg.loc = place();
        reg.deployedAt = 0;
        reg.salt = rng.next();
        const EdgeSite* nearest = &t.edgeNodes.front();
        for (const auto& e : t.edgeNodes) {
            const auto d = squaredDistance(reg.loc, e.registration.loc);
            const auto best = squaredDistance(reg.loc, nearest->registration.loc);
            if (d < best || (d == best && e.id < nearest->id)) nearest = &e;
        }
        t.sensorNodes.push_back(SensorSite{consensus::identityOf(reg), reg, nearest->id});
    }
    t.reindex();
    return t;
}

std::pair<std::size_t, std::size_t> splitNodes(std::size_t nodes, double ratio) {
    if (ratio < 0) throw DeanError(ErrorCode::BadConfig, "ratio must be non-negative");
    const auto edges = static_cast<std::size_t>(std::llround(static_cast<double>(nodes) / (1.0 + ratio)));
    return {std::max<std::size_t>(edges, 1), nodes - std::min(nodes, std::max<std::size_t>(edges, 1))};
}

}  // namespace dean::sim
