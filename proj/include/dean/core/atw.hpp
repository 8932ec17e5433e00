#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dean/core/types.hpp"

namespace dean {

/// Weights of the four ATW terms. atwScore requires them to be non-negative and sum to 1.
struct AtwWeights {
    double adjacency = 0.4;
    double geo = 0.2;
    double activity = 0.2;
    double disk = 0.2;

    double sum() const { return adjacency + geo + activity + disk; }
    AtwWeights scaled(double factor) const {
        return {adjacency * factor, geo * factor, activity * factor, disk * factor};
    }
};

/// Saturation points of the time and disk terms.
struct AtwScale {
    SimMillis geoSaturationMs = kGeoSaturationMs;
    SimMillis activitySaturationMs = kGeoSaturationMs;
    /// Free slots at which the disk term saturates.
    std::int64_t diskReferenceSlots = 64;
};

struct AtwTerms {
    double adjacency = 0;
    double geo = 0;
    double activity = 0;
    double disk = 0;
};

/// The scalar part of a record that scoring reads. Election runs over these so that a
/// gossip tick does not copy every peer's adjacency set.
struct AtwSummary {
    NodeId nodeId;
    std::size_t adjacency = 0;
    SimMillis timestamp = 0;
    SimMillis geoTimer = 0;
    std::int64_t disk = 0;

    static AtwSummary of(const AtwRecord& rec) {
        return {rec.nodeId, rec.adj.size(), rec.timestamp, rec.geoTimer, rec.disk};
    }
};

AtwTerms atwTerms(const AtwSummary& rec, std::size_t networkSize, const AtwScale& scale = {});
/// Each term clamped to [0, 1].
AtwTerms atwTerms(const AtwRecord& rec, std::size_t networkSize, const AtwScale& scale = {});

/// Convex combination of the clamped terms. networkSize is the number of peers a node
/// could be adjacent to. Throws BadWeights / BadConfig on malformed input.
double atwScore(const AtwRecord& rec, const AtwWeights& weights, std::size_t networkSize,
                const AtwScale& scale = {});

/// Scores equal within a relative 1e-9 are ties.
bool atwScoresTie(double a, double b);

/// All records whose score ties the maximum, sorted by NodeId. Accepts any weights with
/// non-negative entries and a positive sum (they are normalised first), so scaling all
/// weights by a positive constant never changes the result.
std::vector<NodeId> atwArgmax(std::span<const AtwRecord> population, const AtwWeights& weights,
                              std::size_t networkSize, const AtwScale& scale = {});
std::vector<NodeId> atwArgmax(std::span<const AtwSummary> population, const AtwWeights& weights,
                              std::size_t networkSize, const AtwScale& scale = {});

}  // namespace dean
