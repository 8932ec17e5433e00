#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "dean/sim/world.hpp"
#include "dean/workload/workload.hpp"

namespace dean::experiments {

/// Everything a trial needs besides node count, ratio and seed.
struct ExperimentConfig {
    sim::WorldConfig world;
    workload::WorkloadSpec workload;
    /// Workload starts after this much simulated time so the network can bootstrap.
    SimMillis warmupMs = 10'000;
    /// Hard stop for one trial, simulated.
    SimMillis horizonMs = 3'600'000;
    double ratio = 3.0;
    std::size_t nodes = 200;
    /// Adds the 1,000-node resilience variant.
    bool full = false;
};

/// Reads `key = value` lines (`#` starts a comment). Unknown keys and malformed values
/// throw DeanError(BadConfig). Keys are listed in the README.
ExperimentConfig parseConfig(std::istream& is, ExperimentConfig base = {});
nlohmann::json configToJson(const ExperimentConfig& c);

struct Verdict {
    std::string rule;
    bool pass = false;
    std::string detail;
};

struct MetricRow {
    std::string experiment;
    std::uint64_t seed = 0;
    std::size_t nodeCount = 0;
    double ratio = 0;
    std::string metric;
    double value = 0;
};

struct ExperimentReport {
    std::string name;
    nlohmann::json config;
    std::vector<std::uint64_t> seeds;
    /// metric name -> series, in the order rows were added.
    std::map<std::string, std::vector<double>> metrics;
    std::vector<MetricRow> rows;
    std::vector<Verdict> verdicts;

    void add(std::uint64_t seed, std::size_t nodes, double ratio, const std::string& metric, double value);
    void verdict(std::string rule, bool pass, std::string detail);
    bool passed() const;
    nlohmann::json toJson() const;
};

void writeCsv(std::ostream& os, const std::vector<ExperimentReport>& reports);

/// One built world plus the topology it runs on.
struct Trial {
    sim::Topology topology;
    std::unique_ptr<sim::World> world;
};

/// Topology for `nodes` at 1:ratio, the world and its workload, seeded from `seed`.
Trial buildTrial(const ExperimentConfig& cfg, std::size_t nodes, double ratio, std::uint64_t seed);

/// Fraction of edge nodes holding a valid copy of the majority chain. Silent and down
/// nodes count as not holding one. Hollow entries are recovered through live holders.
double validChainFraction(const sim::World& world);

/// Honest holders for every committed block; each one under quorum is a violation.
struct SafetyCheck {
    std::size_t committed = 0;
    std::size_t violations = 0;
};
SafetyCheck checkCommittedSafety(const sim::World& world);

double coefficientOfVariation(const std::vector<double>& xs);
/// Mean absolute second difference.
double roughness(const std::vector<double>& ys);

ExperimentReport runResilience(const ExperimentConfig& cfg, std::size_t nodes, const std::vector<double>& fractions,
                               const std::vector<std::uint64_t>& seeds);
ExperimentReport runScalability(const ExperimentConfig& cfg, const std::vector<std::size_t>& nodeCounts,
                                const std::vector<std::uint64_t>& seeds);
ExperimentReport runSensitivity(const ExperimentConfig& cfg, const std::vector<double>& ratios, std::size_t nodes,
                                const std::vector<std::uint64_t>& seeds);
ExperimentReport runSafetyOracle(const ExperimentConfig& cfg, const std::vector<std::size_t>& edgeCounts);

struct LivenessSpec {
    std::size_t edges = 7;
    std::size_t blocks = 50;
    SimMillis downFor = 1000;
    std::uint64_t seed = 1;
    /// Inject at every n-th event boundary; 1 is exhaustive.
    std::size_t stride = 1;
};
ExperimentReport runLivenessCheck(const ExperimentConfig& cfg, const LivenessSpec& spec);

struct MemoryBalanceSpec {
    std::size_t edges = 7;
    std::int64_t smallDisk = 20;
    std::size_t blocks = 60;
    std::uint64_t seed = 1;
};
ExperimentReport runMemoryBalance(const ExperimentConfig& cfg, const MemoryBalanceSpec& spec);

/// A plain run: metrics plus lock exclusivity, liveness and conservation verdicts. The
/// trace goes to `trace` when it is non-null.
ExperimentReport runSingle(const ExperimentConfig& cfg, std::uint64_t seed,
                           std::shared_ptr<sim::TraceObserver> trace = nullptr);

/// Side chain, hollow entries and balances of every edge node, one JSON object per line.
void dumpState(const sim::World& world, std::ostream& os);

}  // namespace dean::experiments
