#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "dean/consensus/message.hpp"
#include "dean/core/types.hpp"

namespace dean::sim {

struct EdgeSite {
    NodeId id;
    consensus::Registration registration;
};

struct SensorSite {
    NodeId id;
    consensus::Registration registration;
    NodeId attachedEdge;
};

/// Node geography. Edge nodes form a full mesh; each sensor hangs off its nearest edge.
class Topology {
public:
    std::vector<EdgeSite> edgeNodes;
    std::vector<SensorSite> sensorNodes;
    std::int64_t areaSide = 600;

    /// Rebuilds the id index; call after editing the node lists by hand.
    void reindex();

    bool contains(const NodeId& id) const { return index_.count(id) != 0; }
    std::optional<NodeKind> kindOf(const NodeId& id) const;
    GeoPoint locationOf(const NodeId& id) const;
    std::vector<NodeId> edgeIds() const;
    const SensorSite* sensor(const NodeId& id) const;

private:
    // id -> (is sensor, position in its list)
    std::unordered_map<NodeId, std::pair<bool, std::size_t>, NodeIdHasher> index_;
};

struct TopologySpec {
    std::size_t edges = 7;
    std::size_t sensors = 21;
    std::int64_t areaSide = 600;
    /// Edge nodes were deployed uniformly within this long before time 0. Keeping it below
    /// the activity saturation point makes the oldest edge a unique election winner.
    SimMillis deploySpreadMs = 30 * 60 * 1000;
    std::uint64_t seed = 1;
};

/// Deterministic placement: uniform positions in the square, registrations with
/// seed-derived salts, sensors attached to the nearest edge.
Topology buildTopology(const TopologySpec& spec);

/// Edge and sensor counts for `nodes` total nodes at 1:ratio edge:sensor.
std::pair<std::size_t, std::size_t> splitNodes(std::size_t nodes, double ratio);

}  // namespace dean::sim
