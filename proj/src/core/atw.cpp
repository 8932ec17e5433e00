#include "dean/core/atw.hpp"

#include <algorithm>
#include <cmath>

#include "dean/core/error.hpp"

namespace dean {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

double ratio(double num, double den) { return den <= 0 ? 0.0 : clamp01(num / den); }

void checkWeightEntries(const AtwWeights& w) {
    for (double v : {w.adjacency, w.geo, w.activity, w.disk}) {
        if (!std::isfinite(v) || v < 0) throw DeanError(ErrorCode::BadWeights, "weights must be finite and >= 0");
    }
}

double combine(const AtwTerms& t, const AtwWeights& w) {
    return w.adjacency * t.adjacency + w.geo * t.geo + w.activity * t.activity + w.disk * t.disk;
}

}  // namespace

AtwTerms atwTerms(const AtwRecord& rec, std::size_t networkSize, const AtwScale& scale) {
    return atwTerms(AtwSummary::of(rec), networkSize, scale);
}

AtwTerms atwTerms(const AtwSummary& rec, std::size_t networkSize, const AtwScale& scale) {
    if (networkSize == 0) throw DeanError(ErrorCode::BadConfig, "networkSize must be >= 1");
    AtwTerms t;
    t.adjacency = ratio(static_cast<double>(rec.adjacency), static_cast<double>(networkSize));
    t.geo = ratio(static_cast<double>(rec.geoTimer), static_cast<double>(scale.geoSaturationMs));
    t.activity = ratio(static_cast<double>(rec.timestamp), static_cast<double>(scale.activitySaturationMs));
    t.disk = ratio(static_cast<double>(rec.disk), static_cast<double>(scale.diskReferenceSlots));
    return t;
}

double atwScore(const AtwRecord& rec, const AtwWeights& weights, std::size_t networkSize, const AtwScale& scale) {
    checkWeightEntries(weights);
    if (std::abs(weights.sum() - 1.0) > 1e-9) throw DeanError(ErrorCode::BadWeights, "weights must sum to 1");
    return clamp01(combine(atwTerms(rec, networkSize, scale), weights));
}

bool atwScoresTie(double a, double b) {
    return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}

std::vector<NodeId> atwArgmax(std::span<const AtwRecord> population, const AtwWeights& weights,
                              std::size_t networkSize, const AtwScale& scale) {
    std::vector<AtwSummary> summaries;
    summaries.reserve(population.size());
    for (const auto& rec : population) summaries.push_back(AtwSummary::of(rec));
    return atwArgmax(std::span<const AtwSummary>(summaries), weights, networkSize, scale);
}

std::vector<NodeId> atwArgmax(std::span<const AtwSummary> population, const AtwWeights& weights,
                              std::size_t networkSize, const AtwScale& scale) {
    checkWeightEntries(weights);
    const double total = weights.sum();
    if (!(total > 0)) throw DeanError(ErrorCode::BadWeights, "weights must have a positive sum");
    const AtwWeights unit = weights.scaled(1.0 / total);

    std::vector<double> scores;
    scores.reserve(population.size());
    double best = -1;
    for (const auto& rec : population) {
        scores.push_back(combine(atwTerms(rec, networkSize, scale), unit));
        best = std::max(best, scores.back());
    }
    std::vector<NodeId> winners;
    for (std::size_t i = 0; i < population.size(); ++i) {
        if (atwScoresTie(scores[i], best)) winners.push_back(population[i].nodeId);
    }
    std::sort(winners.begin(), winners.end());
    return winners;
}

}  // namespace dean
