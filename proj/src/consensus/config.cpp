#include "dean/consensus/config.hpp"

#include <cmath>
#include <string>

#include "dean/core/error.hpp"

namespace dean::consensus {

NetworkConfig NetworkConfig::forEdges(std::size_t n) {
    NetworkConfig c;
    c.initialEdgeCount = n;
    c.faultBound = n == 0 ? 0 : (n - 1) / 2;
    return c;
}

void NetworkConfig::validate() const {
    auto fail = [](const std::string& what) { throw DeanError(ErrorCode::BadConfig, what); };
    if (initialEdgeCount < 3) fail("initialEdgeCount must be at least 3");
    if (2 * faultBound >= initialEdgeCount) fail("faultBound must stay below half of initialEdgeCount");
    if (!(sensorEdgeRatio >= 0) || !std::isfinite(sensorEdgeRatio)) fail("sensorEdgeRatio must be non-negative");
    if (areaSide <= 0) fail("areaSide must be positive");
    if (linkLatencySensorEdge < 0 || linkLatencyEdgeEdge < 0) fail("link latencies must be non-negative");
    if (atwSharePeriod <= 0) fail("atwSharePeriod must be positive");
    if (atwTimeout <= atwSharePeriod) fail("atwTimeout must exceed atwSharePeriod");
    if (replicationTimeout <= 0 || lockLease < replicationTimeout) fail("lockLease must cover replicationTimeout");
    if (recoveryTimeout <= 0) fail("recoveryTimeout must be positive");
    if (joinFeeCoins < 0) fail("joinFeeCoins must be non-negative");
    if (txnsPerBlock < kMinTxnsPerBlock) fail("txnsPerBlock below the block minimum");
    if (defaultDiskCapacity <= 0) fail("defaultDiskCapacity must be positive");
    const double s = weights.sum();
    if (weights.adjacency < 0 || weights.geo < 0 || weights.activity < 0 || weights.disk < 0 || std::abs(s - 1.0) > 1e-9)
        fail("weights must be non-negative and sum to 1");
    if (atwScale.geoSaturationMs <= 0 || atwScale.activitySaturationMs <= 0 || atwScale.diskReferenceSlots <= 0)
        fail("ATW saturation points must be positive");
}

}  // namespace dean::consensus
