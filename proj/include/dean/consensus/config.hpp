#pragma once

#include <cstddef>
#include <cstdint>

#include "dean/core/atw.hpp"
#include "dean/core/types.hpp"

namespace dean::consensus {

/// More than half of n.
constexpr std::size_t quorum(std::size_t n) { return n / 2 + 1; }

/// Network-wide protocol parameters. Every node sees the same values.
struct NetworkConfig {
    std::size_t initialEdgeCount = 7;
    /// Largest tolerated number of compromised edge nodes, floor((n - 1) / 2).
    std::size_t faultBound = 3;
    double sensorEdgeRatio = 3.0;
    std::int64_t areaSide = 600;
    SimMillis linkLatencySensorEdge = 95;
    SimMillis linkLatencyEdgeEdge = 150;
    SimMillis atwSharePeriod = 2000;
    SimMillis atwTimeout = 7000;

    /// A mining attempt that has not reached a replication quorum by then is aborted.
    SimMillis replicationTimeout = 3000;
    /// The lock registry frees a lock this long after it was granted if nobody released it.
    SimMillis lockLease = 6000;
    /// Per-holder wait before a recovery moves on to the next pointer.
    SimMillis recoveryTimeout = 1000;

    std::int64_t joinFeeCoins = 1;
    std::size_t txnsPerBlock = kMinTxnsPerBlock;
    std::int64_t defaultDiskCapacity = 4096;

    AtwWeights weights;
    AtwScale atwScale;

    /// Builds a config for n initial edge nodes with the derived fault bound.
    static NetworkConfig forEdges(std::size_t n);

    /// Throws DeanError(BadConfig) if any field is out of range.
    void validate() const;
};

}  // namespace dean::consensus
