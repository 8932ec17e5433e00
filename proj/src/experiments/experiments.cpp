#include "dean/experiments/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "dean/core/chain.hpp"
#include "dean/core/codec.hpp"
#include "dean/core/error.hpp"
#include "dean/storage/memory_balance.hpp"

namespace dean::experiments {

using sim::Fault;
using sim::World;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parseNumber(const std::string& key, const std::string& v) {
    std::istringstream is(v);
    T out{};
    is >> out;
    if (is.fail() || !is.eof()) throw DeanError(ErrorCode::BadConfig, key + ": bad value '" + v + "'");
    return out;
}

bool parseBool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw DeanError(ErrorCode::BadConfig, key + ": expected true or false");
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

template <typename T, typename F>
Setter num(F field) {
    return [field](ExperimentConfig& c, const std::string& k, const std::string& v) {
        field(c) = parseNumber<T>(k, v);
    };
}

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"nodes", num<std::size_t>([](auto& c) -> auto& { return c.nodes; })},
        {"ratio", num<double>([](auto& c) -> auto& { return c.ratio; })},
        {"seed", num<std::uint64_t>([](auto& c) -> auto& { return c.world.seed; })},
        {"warmupMs", num<SimMillis>([](auto& c) -> auto& { return c.warmupMs; })},
        {"horizonMs", num<SimMillis>([](auto& c) -> auto& { return c.horizonMs; })},
        {"full", [](auto& c, const auto& k, const auto& v) { c.full = parseBool(k, v); }},
        {"areaSide", num<std::int64_t>([](auto& c) -> auto& { return c.world.net.areaSide; })},
        {"linkLatencySensorEdge",
         [](auto& c, const auto& k, const auto& v) {
             c.world.links.sensorEdge = c.world.net.linkLatencySensorEdge = parseNumber<SimMillis>(k, v);
         }},
        {"linkLatencyEdgeEdge",
         [](auto& c, const auto& k, const auto& v) {
             c.world.links.edgeEdge = c.world.net.linkLatencyEdgeEdge = parseNumber<SimMillis>(k, v);
         }},
        {"jitterFraction", num<double>([](auto& c) -> auto& { return c.world.links.jitterFraction; })},
        {"messageOverheadMs", num<SimMillis>([](auto& c) -> auto& { return c.world.messageOverheadMs; })},
        {"atwSharePeriod", num<SimMillis>([](auto& c) -> auto& { return c.world.net.atwSharePeriod; })},
        {"atwTimeout", num<SimMillis>([](auto& c) -> auto& { return c.world.net.atwTimeout; })},
        {"replicationTimeout", num<SimMillis>([](auto& c) -> auto& { return c.world.net.replicationTimeout; })},
        {"lockLease", num<SimMillis>([](auto& c) -> auto& { return c.world.net.lockLease; })},
        {"recoveryTimeout", num<SimMillis>([](auto& c) -> auto& { return c.world.net.recoveryTimeout; })},
        {"joinFeeCoins", num<std::int64_t>([](auto& c) -> auto& { return c.world.net.joinFeeCoins; })},
        {"txnsPerBlock",
         [](auto& c, const auto& k, const auto& v) {
             c.world.net.txnsPerBlock = c.workload.txnsPerBlock = parseNumber<std::size_t>(k, v);
         }},
        {"defaultDiskCapacity", num<std::int64_t>([](auto& c) -> auto& { return c.world.net.defaultDiskCapacity; })},
        {"weights.adjacency", num<double>([](auto& c) -> auto& { return c.world.net.weights.adjacency; })},
        {"weights.geo", num<double>([](auto& c) -> auto& { return c.world.net.weights.geo; })},
        {"weights.activity", num<double>([](auto& c) -> auto& { return c.world.net.weights.activity; })},
        {"weights.disk", num<double>([](auto& c) -> auto& { return c.world.net.weights.disk; })},
        {"atwScale.geoSaturationMs",
         num<SimMillis>([](auto& c) -> auto& { return c.world.net.atwScale.geoSaturationMs; })},
        {"atwScale.activitySaturationMs",
         num<SimMillis>([](auto& c) -> auto& { return c.world.net.atwScale.activitySaturationMs; })},
        {"atwScale.diskReferenceSlots",
         num<std::int64_t>([](auto& c) -> auto& { return c.world.net.atwScale.diskReferenceSlots; })},
        {"eventCeiling", num<std::size_t>([](auto& c) -> auto& { return c.world.eventCeiling; })},
        {"totalTxns", num<std::uint64_t>([](auto& c) -> auto& { return c.workload.totalTxns; })},
        {"txnRatePerSensor", num<double>([](auto& c) -> auto& { return c.workload.txnRatePerSensor; })},
        {"keySpace", num<std::uint64_t>([](auto& c) -> auto& { return c.workload.keySpace; })},
        {"readWriteMix", num<double>([](auto& c) -> auto& { return c.workload.readWriteMix; })},
    };
    return table;
}

double mean(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

/// Runs to settlement, then lets in-flight replication land.
bool settle(World& w, SimMillis horizon, SimMillis drain = 5000) {
    const bool ok = w.runUntilSettled(horizon);
    w.runUntil(w.now() + drain);
    return ok;
}

std::uint64_t subSeed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::vector<NodeId> pickSubset(std::vector<NodeId> ids, std::size_t k, std::uint64_t seed) {
    sim::Rng rng(seed);
    for (std::size_t i = 0; i < k && i < ids.size(); ++i) {
        const auto j = i + rng.uniformInt(0, ids.size() - i - 1);
        std::swap(ids[i], ids[j]);
    }
    ids.resize(std::min(k, ids.size()));
    return ids;
}

}  // namespace

ExperimentConfig parseConfig(std::istream& is, ExperimentConfig base) {
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(is, line)) {
        ++lineNo;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw DeanError(ErrorCode::BadConfig, "line " + std::to_string(lineNo) + ": expected key = value");
        }
        const auto key = trim(line.substr(0, eq));
        auto value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        const auto it = setters().find(key);
        if (it == setters().end()) throw DeanError(ErrorCode::BadConfig, "unknown key '" + key + "'");
        it->second(base, key, value);
    }
    base.world.net.validate();
    base.workload.validate();
    if (base.ratio <= 0) throw DeanError(ErrorCode::BadConfig, "ratio must be positive");
    return base;
}

nlohmann::json configToJson(const ExperimentConfig& c) {
    const auto& w = c.workload;
    return nlohmann::json{{"world", sim::configToJson(c.world)},
                          {"workload",
                           {{"totalTxns", w.totalTxns},
                            {"txnRatePerSensor", w.txnRatePerSensor},
                            {"txnsPerBlock", w.txnsPerBlock},
                            {"keySpace", w.keySpace},
                            {"readWriteMix", w.readWriteMix}}},
                          {"warmupMs", c.warmupMs},
                          {"horizonMs", c.horizonMs},
                          {"ratio", c.ratio},
                          {"nodes", c.nodes},
                          {"full", c.full}};
}

void ExperimentReport::add(std::uint64_t seed, std::size_t nodes, double ratio, const std::string& metric,
                           double value) {
    rows.push_back(MetricRow{name, seed, nodes, ratio, metric, value});
    metrics[metric].push_back(value);
}

void ExperimentReport::verdict(std::string rule, bool pass, std::string detail) {
    verdicts.push_back(Verdict{std::move(rule), pass, std::move(detail)});
}

bool ExperimentReport::passed() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

nlohmann::json ExperimentReport::toJson() const {
    nlohmann::json vs = nlohmann::json::array();
    for (const auto& v : verdicts) vs.push_back({{"rule", v.rule}, {"pass", v.pass}, {"detail", v.detail}});
    return nlohmann::json{{"name", name},     {"config", config},   {"seeds", seeds},
                          {"metrics", metrics}, {"verdicts", vs}, {"pass", passed()}};
}

void writeCsv(std::ostream& os, const std::vector<ExperimentReport>& reports) {
    os << "experiment,seed,nodeCount,ratio,metricName,value\n";
    for (const auto& r : reports) {
        for (const auto& row : r.rows) {
            os << row.experiment << ',' << row.seed << ',' << row.nodeCount << ',' << fmt(row.ratio) << ','
               << row.metric << ',' << fmt(row.value) << '\n';
        }
    }
}

Trial buildTrial(const ExperimentConfig& cfg, std::size_t nodes, double ratio, std::uint64_t seed) {
    const auto [edges, sensors] = sim::splitNodes(nodes, ratio);
    sim::TopologySpec ts;
    ts.edges = edges;
    ts.sensors = sensors;
    ts.areaSide = cfg.world.net.areaSide;
    ts.seed = seed;
    Trial t;
    t.topology = sim::buildTopology(ts);

    auto wc = cfg.world;
    wc.seed = seed;
    wc.net.sensorEdgeRatio = ratio;
    t.world = std::make_unique<World>(wc, t.topology);

    auto ws = cfg.workload;
    ws.seed = seed;
    ws.startAt = cfg.warmupMs;
    ws.txnsPerBlock = cfg.world.net.txnsPerBlock;
    t.world->loadWorkload(workload::generate(ws, t.topology));
    return t;
}

double validChainFraction(const World& world) {
    const auto& ids = world.edgeIds();
    if (ids.empty()) return 0.0;
    std::map<Hash32, std::size_t> tips;
    for (const auto& id : ids) {
        if (world.isActive(id)) tips[world.state(id).tipHash()] += 1;
    }
    if (tips.empty()) return 0.0;
    // Most common tip; ties go to the longer chain, then the smaller hash.
    Hash32 majority;
    std::size_t best = 0;
    std::size_t bestLen = 0;
    for (const auto& [tip, count] : tips) {
        std::size_t len = 0;
        for (const auto& id : ids) {
            if (world.isActive(id) && world.state(id).tipHash() == tip) {
                len = world.state(id).chain.size();
                break;
            }
        }
        if (count > best || (count == best && len > bestLen)) {
            majority = tip;
            best = count;
            bestLen = len;
        }
    }

    const storage::BlockFetcher fetch = [&](const NodeId& holder, const Hash32& cHash) {
        return world.fetchFrom(holder, cHash);
    };
    std::size_t valid = 0;
    for (const auto& id : ids) {
        if (!world.isActive(id)) continue;
        const auto& s = world.state(id);
        if (s.tipHash() != majority) continue;
        std::vector<Block> blocks;
        blocks.reserve(s.chain.size());
        bool ok = true;
        for (const auto& e : s.chain) {
            if (!storage::isHollow(e)) {
                blocks.push_back(*storage::fullBlock(e));
                continue;
            }
            auto rec = storage::recoverBlock(s, storage::entryHash(e), fetch);
            if (!rec) {
                ok = false;
                break;
            }
            blocks.push_back(std::move(rec).value());
        }
        if (ok && validateChain(std::span<const Block>(blocks)).valid) ++valid;
    }
    return static_cast<double>(valid) / static_cast<double>(ids.size());
}

SafetyCheck checkCommittedSafety(const World& world) {
    SafetyCheck out;
    const auto q = consensus::quorum(world.config().net.initialEdgeCount + world.metrics().joins);
    for (const auto& [cHash, cb] : world.committed()) {
        ++out.committed;
        std::size_t honest = 0;
        for (const auto& id : world.edgeIds()) {
            if (!world.isCompromised(id) && world.state(id).hasBlock(cHash)) ++honest;
        }
        if (honest < q) ++out.violations;
    }
    return out;
}

double coefficientOfVariation(const std::vector<double>& xs) {
    const double m = mean(xs);
    if (xs.size() < 2 || m == 0.0) return 0.0;
    double ss = 0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size())) / std::abs(m);
}

double roughness(const std::vector<double>& ys) {
    if (ys.size() < 3) return 0.0;
    double sum = 0;
    for (std::size_t i = 2; i < ys.size(); ++i) sum += std::abs(ys[i] - 2 * ys[i - 1] + ys[i - 2]);
    return sum / static_cast<double>(ys.size() - 2);
}

ExperimentReport runSingle(const ExperimentConfig& cfg, std::uint64_t seed, std::shared_ptr<sim::TraceObserver> trace) {
    ExperimentReport r;
    r.name = "run";
    r.config = configToJson(cfg);
    r.seeds = {seed};
    auto t = buildTrial(cfg, cfg.nodes, cfg.ratio, seed);
    auto& w = *t.world;
    auto locks = std::make_shared<sim::LockExclusivityChecker>();
    auto live = std::make_shared<sim::LivenessClassifier>();
    auto digest = std::make_shared<sim::DigestTraceSink>();
    std::vector<std::shared_ptr<sim::TraceObserver>> obs{locks, live, digest};
    if (trace) obs.push_back(trace);
    w.setObservers(obs);

    const auto started = std::chrono::steady_clock::now();
    const bool ok = settle(w, cfg.horizonMs);
    const double cpu = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    const auto& m = w.metrics();
    const auto n = cfg.nodes;
    r.add(seed, n, cfg.ratio, "edgeNodes", static_cast<double>(w.edgeIds().size()));
    r.add(seed, n, cfg.ratio, "throughputTxnsPerSec", m.throughput());
    r.add(seed, n, cfg.ratio, "meanCommitLatencyMs", m.meanCommitLatency());
    r.add(seed, n, cfg.ratio, "blocksCommitted", static_cast<double>(m.blocksCommitted));
    r.add(seed, n, cfg.ratio, "txnsCommitted", static_cast<double>(m.txnsCommitted));
    r.add(seed, n, cfg.ratio, "requeues", static_cast<double>(m.requeues));
    r.add(seed, n, cfg.ratio, "messages", static_cast<double>(m.messagesSent));
    r.add(seed, n, cfg.ratio, "validChainFraction", validChainFraction(w));
    r.add(seed, n, cfg.ratio, "cpuSecondsPerBlock",
          m.blocksCommitted ? cpu / static_cast<double>(m.blocksCommitted) : 0.0);
    const auto s = live->summarize();
    r.verdict("settled", ok, std::to_string(m.blocksCommitted) + " of " + std::to_string(m.blocksAssembled));
    r.verdict("lock exclusivity", locks->ok(), std::to_string(locks->violations().size()) + " violations");
    r.verdict("every block committed or aborted", s.ok(),
              std::to_string(s.partial) + " partial, " + std::to_string(s.violations.size()) + " violations");
    r.verdict("half-coin conservation", w.totalHalfCoins() == w.expectedHalfCoins(),
              std::to_string(w.totalHalfCoins()) + " vs " + std::to_string(w.expectedHalfCoins()));
    r.verdict("capacity", m.capacityViolations == 0, std::to_string(m.capacityViolations) + " violations");
    r.config["traceDigest"] = digest->digest().hex();
    return r;
}

ExperimentReport runResilience(const ExperimentConfig& cfg, std::size_t nodes, const std::vector<double>& fractions,
                               const std::vector<std::uint64_t>& seeds) {
    ExperimentReport r;
    r.name = "resilience";
    r.config = configToJson(cfg);
    r.seeds = seeds;
    for (double f : fractions) {
        if (!(f >= 0 && f < 0.5)) throw DeanError(ErrorCode::BadConfig, "failure fraction must be in [0, 0.5)");
        std::vector<double> fracs;
        for (auto seed : seeds) {
            auto t = buildTrial(cfg, nodes, cfg.ratio, seed);
            auto& w = *t.world;
            const auto edges = w.edgeIds();
            const auto k = static_cast<std::size_t>(std::llround(f * static_cast<double>(edges.size())));
            const auto victims = pickSubset(edges, k, subSeed(seed, 1));
            // Failures arrive at random points across the first two thirds of the workload.
            const double rate =
                cfg.workload.txnRatePerSensor * static_cast<double>(t.topology.sensorNodes.size());
            const auto span = static_cast<SimMillis>(
                static_cast<double>(cfg.workload.totalTxns) * 1000.0 / std::max(rate, 1e-9));
            sim::Rng rng(subSeed(seed, 2));
            std::vector<Fault> plan;
            for (const auto& v : victims) {
                const auto at = cfg.warmupMs + static_cast<SimMillis>(rng.uniform() * static_cast<double>(span) * 2 / 3);
                plan.push_back(Fault::silent(v, at));
            }
            w.injectFaults(plan);
            const bool ok = settle(w, cfg.horizonMs);
            const double frac = validChainFraction(w);
            fracs.push_back(frac);
            r.add(seed, nodes, f, "validChainFraction", frac);
            r.add(seed, nodes, f, "settled", ok ? 1.0 : 0.0);
            r.add(seed, nodes, f, "blocksCommitted", static_cast<double>(w.metrics().blocksCommitted));
            r.add(seed, nodes, f, "throughputTxnsPerSec", w.metrics().throughput());
        }
        const double m = mean(fracs);
        const double lo = fracs.empty() ? 0.0 : *std::min_element(fracs.begin(), fracs.end());
        r.add(0, nodes, f, "meanValidChainFraction", m);
        if (std::abs(f - 0.25) < 1e-9) {
            r.verdict("25% failures: mean valid-chain fraction >= 0.55", m >= 0.55, "mean " + fmt(m));
            r.verdict("25% failures: every seed >= 0.50", lo >= 0.50, "min " + fmt(lo));
        } else if (f == 0.0) {
            r.verdict("no failures: every node valid", lo == 1.0, "min " + fmt(lo));
        } else {
            r.verdict(fmt(f * 100) + "% failures: valid-chain fraction > 0.50", lo > 0.50, "min " + fmt(lo));
        }
    }
    return r;
}

ExperimentReport runScalability(const ExperimentConfig& cfg, const std::vector<std::size_t>& nodeCounts,
                                const std::vector<std::uint64_t>& seeds) {
    ExperimentReport r;
    r.name = "scalability";
    r.config = configToJson(cfg);
    r.seeds = seeds;
    std::vector<double> curve;
    for (auto n : nodeCounts) {
        std::vector<double> lat;
        for (auto seed : seeds) {
            auto t = buildTrial(cfg, n, cfg.ratio, seed);
            auto& w = *t.world;
            const auto started = std::chrono::steady_clock::now();
            const bool ok = settle(w, cfg.horizonMs);
            const double cpu = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
            const auto& m = w.metrics();
            lat.push_back(m.meanCommitLatency());
            r.add(seed, n, cfg.ratio, "meanCommitLatencyMs", m.meanCommitLatency());
            r.add(seed, n, cfg.ratio, "maxCommitLatencyMs",
                  m.commitLatencies.empty()
                      ? 0.0
                      : static_cast<double>(*std::max_element(m.commitLatencies.begin(), m.commitLatencies.end())));
            r.add(seed, n, cfg.ratio, "throughputTxnsPerSec", m.throughput());
            r.add(seed, n, cfg.ratio, "cpuSecondsPerBlock",
                  m.blocksCommitted ? cpu / static_cast<double>(m.blocksCommitted) : 0.0);
            r.add(seed, n, cfg.ratio, "settled", ok ? 1.0 : 0.0);
        }
        curve.push_back(mean(lat));
        r.add(0, n, cfg.ratio, "seedMeanCommitLatencyMs", curve.back());
    }
    bool monotone = true;
    for (std::size_t i = 1; i < curve.size(); ++i) monotone = monotone && curve[i] >= curve[i - 1];
    std::string series;
    for (double c : curve) series += (series.empty() ? "" : ", ") + fmt(c);
    r.verdict("commit latency non-decreasing in node count", monotone, series);
    if (!nodeCounts.empty()) {
        const auto top = std::max_element(nodeCounts.begin(), nodeCounts.end()) - nodeCounts.begin();
        const double worst = curve[static_cast<std::size_t>(top)];
        r.verdict("commit latency < 5 s at " + std::to_string(nodeCounts[static_cast<std::size_t>(top)]) + " nodes",
                  worst < 5000.0, fmt(worst) + " ms");
        const auto small = std::min_element(nodeCounts.begin(), nodeCounts.end()) - nodeCounts.begin();
        const double best = curve[static_cast<std::size_t>(small)];
        const double bound = 2.0 * static_cast<double>(cfg.world.links.edgeEdge);
        r.verdict("smallest network commits within one replication round", best > 0 && best < bound,
                  fmt(best) + " ms, bound " + fmt(bound));
    }
    return r;
}

ExperimentReport runSensitivity(const ExperimentConfig& cfg, const std::vector<double>& ratios, std::size_t nodes,
                                const std::vector<std::uint64_t>& seeds) {
    ExperimentReport r;
    r.name = "sensitivity";
    r.config = configToJson(cfg);
    r.seeds = seeds;
    std::vector<double> tput;
    std::vector<double> lat;
    for (double ratio : ratios) {
        std::vector<double> t1;
        std::vector<double> l1;
        for (auto seed : seeds) {
            auto t = buildTrial(cfg, nodes, ratio, seed);
            auto& w = *t.world;
            settle(w, cfg.horizonMs);
            t1.push_back(w.metrics().throughput());
            l1.push_back(w.metrics().meanCommitLatency());
            r.add(seed, nodes, ratio, "throughputTxnsPerSec", t1.back());
            r.add(seed, nodes, ratio, "meanCommitLatencyMs", l1.back());
        }
        tput.push_back(mean(t1));
        lat.push_back(mean(l1));
        r.add(0, nodes, ratio, "seedMeanThroughput", tput.back());
        r.add(0, nodes, ratio, "seedMeanLatencyMs", lat.back());
    }
    const double cvT = coefficientOfVariation(tput);
    const double cvL = coefficientOfVariation(lat);
    r.add(0, nodes, 0, "throughputCoV", cvT);
    r.add(0, nodes, 0, "latencyCoV", cvL);
    r.verdict("throughput CoV across ratios < 0.15", cvT < 0.15, fmt(cvT));
    r.verdict("latency CoV across ratios < 0.15", cvL < 0.15, fmt(cvL));

    // Latency-vs-scale roughness per ratio; reported, not gated.
    const std::vector<std::size_t> scales{60, 100, 140, 180};
    for (double ratio : ratios) {
        std::vector<double> curve;
        for (auto n : scales) {
            auto t = buildTrial(cfg, n, ratio, seeds.empty() ? 1 : seeds.front());
            settle(*t.world, cfg.horizonMs);
            curve.push_back(t.world->metrics().meanCommitLatency());
        }
        r.add(0, nodes, ratio, "latencyRoughness", roughness(curve));
    }
    return r;
}

namespace {

/// Runs one short trial with the given edges compromised. Silent faults start once the
/// network has committed a few blocks; Byzantine flips are active from the start.
struct OracleRun {
    SafetyCheck check;
    bool settled = false;
};

OracleRun oracleTrial(const ExperimentConfig& base, std::size_t edges, const std::vector<std::size_t>& subset,
                      Fault::Mode mode, std::uint64_t seed) {
    ExperimentConfig cfg = base;
    cfg.workload.totalTxns = 20 * cfg.world.net.txnsPerBlock;
    cfg.workload.txnRatePerSensor = 1.0;
    cfg.horizonMs = 120'000;
    auto t = buildTrial(cfg, edges * 4, 3.0, seed);
    auto& w = *t.world;
    const auto& ids = w.edgeIds();
    std::vector<Fault> plan;
    const auto onset = cfg.warmupMs + 3000;
    for (auto i : subset) {
        if (mode == Fault::Mode::Silent) {
            plan.push_back(Fault::silent(ids[i], onset));
        } else {
            plan.push_back(Fault::byzantine(ids[i], 1.0, subSeed(seed, i)));
        }
    }
    w.injectFaults(plan);
    OracleRun out;
    out.settled = settle(w, cfg.horizonMs);
    out.check = checkCommittedSafety(w);
    return out;
}

void forEachSubset(std::size_t n, std::size_t k, const std::function<void(const std::vector<std::size_t>&)>& fn) {
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
        fn(idx);
        std::size_t i = k;
        while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
        if (i == 0) return;
        ++idx[i - 1];
        for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

}  // namespace

ExperimentReport runSafetyOracle(const ExperimentConfig& cfg, const std::vector<std::size_t>& edgeCounts) {
    ExperimentReport r;
    r.name = "safety-oracle";
    r.config = configToJson(cfg);
    const std::uint64_t seed = cfg.world.seed;
    r.seeds = {seed};
    std::size_t totalViolations = 0;
    std::size_t cases = 0;
    for (auto n : edgeCounts) {
        std::size_t violations = 0;
        std::size_t nCases = 0;
        std::size_t vacuous = 0;
        std::size_t committed = 0;
        for (auto mode : {Fault::Mode::Silent, Fault::Mode::ByzantineFlip}) {
            for (std::size_t k = 0; k <= n / 2; ++k) {
                forEachSubset(n, k, [&](const std::vector<std::size_t>& subset) {
                    const auto run = oracleTrial(cfg, n, subset, mode, seed);
                    ++nCases;
                    violations += run.check.violations;
                    committed += run.check.committed;
                    if (run.check.committed == 0) ++vacuous;
                });
            }
        }
        r.add(seed, n, 3.0, "cases", static_cast<double>(nCases));
        r.add(seed, n, 3.0, "violations", static_cast<double>(violations));
        r.add(seed, n, 3.0, "committedBlocksChecked", static_cast<double>(committed));
        r.add(seed, n, 3.0, "vacuousCases", static_cast<double>(vacuous));
        totalViolations += violations;
        cases += nCases;
        r.verdict("N=" + std::to_string(n) + ": no committed block under quorum honest holders", violations == 0,
                  std::to_string(violations) + " violations over " + std::to_string(nCases) + " cases, " +
                      std::to_string(vacuous) + " with no commits");
    }
    // Negative control: one more compromised node than the bound must be caught.
    std::size_t caught = 0;
    std::size_t controls = 0;
    forEachSubset(5, 3, [&](const std::vector<std::size_t>& subset) {
        const auto run = oracleTrial(cfg, 5, subset, Fault::Mode::Silent, seed);
        ++controls;
        if (run.check.violations > 0) ++caught;
    });
    r.add(seed, 5, 3.0, "negativeControlCaught", static_cast<double>(caught));
    r.verdict("N=5 with 3 silent: oracle reports violations", caught == controls,
              std::to_string(caught) + " of " + std::to_string(controls) + " subsets flagged");
    r.add(seed, 0, 3.0, "totalCases", static_cast<double>(cases));
    r.add(seed, 0, 3.0, "totalViolations", static_cast<double>(totalViolations));
    return r;
}

ExperimentReport runLivenessCheck(const ExperimentConfig& base, const LivenessSpec& spec) {
    ExperimentReport r;
    r.name = "liveness";
    ExperimentConfig cfg = base;
    cfg.workload.totalTxns = spec.blocks * cfg.world.net.txnsPerBlock;
    r.config = configToJson(cfg);
    r.config["liveness"] = {{"edges", spec.edges}, {"blocks", spec.blocks}, {"downFor", spec.downFor},
                            {"stride", spec.stride}};
    r.seeds = {spec.seed};

    auto t = buildTrial(cfg, spec.edges * 4, 3.0, spec.seed);
    World baseWorld = std::move(*t.world);
    baseWorld.setObservers({std::make_shared<sim::LockExclusivityChecker>(), std::make_shared<sim::LivenessClassifier>()});

    std::size_t forks = 0;
    std::size_t failed = 0;
    std::size_t midAttempt = 0;
    std::size_t committed = 0;
    std::size_t aborted = 0;
    std::size_t unsettled = 0;
    std::size_t lockViolations = 0;
    std::string firstFailure;
    std::size_t index = 0;
    while (!baseWorld.settled() && baseWorld.now() <= cfg.horizonMs) {
        if (index % spec.stride == 0) {
            std::optional<NodeId> target;
            for (const auto& id : baseWorld.leaders()) {
                if (!baseWorld.isActive(id)) continue;
                if (!target || baseWorld.state(id).inFlight) target = id;
            }
            if (target) {
                World fork = baseWorld;
                fork.detachObservers();
                if (fork.state(*target).inFlight) ++midAttempt;
                fork.injectFaults({Fault::restart(*target, fork.now(), spec.downFor)});
                const bool ok = settle(fork, cfg.horizonMs);
                const auto& obs = fork.observers();
                const auto& locks = static_cast<const sim::LockExclusivityChecker&>(*obs[0]);
                const auto s = static_cast<const sim::LivenessClassifier&>(*obs[1]).summarize();
                ++forks;
                committed += s.committed;
                aborted += s.aborted;
                if (!ok) ++unsettled;
                if (!locks.ok()) ++lockViolations;
                if (!ok || !s.ok() || !locks.ok()) {
                    ++failed;
                    if (firstFailure.empty()) {
                        firstFailure = "event " + std::to_string(index) + ": " +
                                       (s.violations.empty() ? std::string(ok ? "partial" : "unsettled")
                                                             : s.violations.front());
                    }
                }
            }
        }
        if (!baseWorld.step()) break;
        ++index;
    }
    const auto n = spec.edges * 4;
    r.add(spec.seed, n, 3.0, "eventBoundaries", static_cast<double>(index));
    r.add(spec.seed, n, 3.0, "injections", static_cast<double>(forks));
    r.add(spec.seed, n, 3.0, "injectionsMidAttempt", static_cast<double>(midAttempt));
    r.add(spec.seed, n, 3.0, "blocksCommitted", static_cast<double>(committed));
    r.add(spec.seed, n, 3.0, "blocksAbortedFinal", static_cast<double>(aborted));
    r.add(spec.seed, n, 3.0, "unsettledRuns", static_cast<double>(unsettled));
    r.add(spec.seed, n, 3.0, "lockViolationRuns", static_cast<double>(lockViolations));
    r.verdict("every block committed or aborted after every leader restart", failed == 0 && forks > 0,
              std::to_string(failed) + " failing of " + std::to_string(forks) + " injections" +
                  (firstFailure.empty() ? "" : "; first: " + firstFailure));
    return r;
}

ExperimentReport runMemoryBalance(const ExperimentConfig& base, const MemoryBalanceSpec& spec) {
    ExperimentReport r;
    r.name = "memory-balance";
    ExperimentConfig cfg = base;
    cfg.workload.totalTxns = spec.blocks * cfg.world.net.txnsPerBlock;
    r.seeds = {spec.seed};

    const auto [edges, sensors] = sim::splitNodes(spec.edges * 4, 3.0);
    sim::TopologySpec ts;
    ts.edges = edges;
    ts.sensors = sensors;
    ts.areaSide = cfg.world.net.areaSide;
    ts.seed = spec.seed;
    auto topo = sim::buildTopology(ts);
    const NodeId small = topo.edgeNodes.back().id;
    auto wc = cfg.world;
    wc.seed = spec.seed;
    wc.diskOverrides[small] = spec.smallDisk;
    cfg.world = wc;
    r.config = configToJson(cfg);
    r.config["memoryBalance"] = {{"smallDisk", spec.smallDisk}, {"blocks", spec.blocks}, {"node", small.hex()}};

    World w(wc, topo);
    auto ws = cfg.workload;
    ws.seed = spec.seed;
    ws.startAt = cfg.warmupMs;
    w.loadWorkload(workload::generate(ws, topo));

    std::int64_t peak = 0;
    std::size_t rounds = 0;
    std::size_t roundsAbove = 0;
    std::size_t overCapacity = 0;
    bool relocating = false;
    std::int64_t worstAfterRound = 0;
    auto observe = [&] {
        for (const auto& id : w.edgeIds()) {
            const auto& s = w.state(id);
            if (s.usedSlots() > s.diskCapacity) ++overCapacity;
        }
        const auto& s = w.state(small);
        peak = std::max(peak, s.usedSlots());
        const bool now = !s.relocating.empty();
        if (relocating && !now) {
            ++rounds;
            worstAfterRound = std::max(worstAfterRound, s.usedSlots());
            if (storage::DiskGauge::overThreshold(s.usedSlots(), s.diskCapacity)) ++roundsAbove;
        }
        relocating = now;
    };
    bool ok = false;
    while (w.now() <= cfg.horizonMs) {
        if (w.settled()) {
            ok = true;
            break;
        }
        if (!w.step()) break;
        observe();
    }
    const SimMillis drainUntil = w.now() + 5000;
    while (w.step() && w.now() <= drainUntil) observe();

    const auto& s = w.state(small);
    const storage::BlockFetcher fetch = [&](const NodeId& holder, const Hash32& cHash) {
        return w.fetchFrom(holder, cHash);
    };
    std::size_t recovered = 0;
    std::size_t identical = 0;
    std::size_t hollow = 0;
    for (const auto& cHash : w.commitOrder()) {
        const auto& original = *w.assembled().at(cHash);
        const auto* e = s.entry(cHash);
        if (!e) continue;
        Block got;
        if (storage::isHollow(*e)) {
            ++hollow;
            auto rec = storage::recoverBlock(s, cHash, fetch);
            if (!rec) continue;
            got = std::move(rec).value();
        } else {
            got = *storage::fullBlock(*e);
        }
        ++recovered;
        if (got.cHash == original.cHash && canonicalBlockBody(got) == canonicalBlockBody(original)) ++identical;
    }
    const auto committed = w.commitOrder().size();
    const bool conserved = w.totalHalfCoins() == w.expectedHalfCoins();

    const auto n = spec.edges * 4;
    r.add(spec.seed, n, 3.0, "blocksCommitted", static_cast<double>(committed));
    r.add(spec.seed, n, 3.0, "peakOccupancy", static_cast<double>(peak));
    r.add(spec.seed, n, 3.0, "disseminationRounds", static_cast<double>(rounds));
    r.add(spec.seed, n, 3.0, "worstOccupancyAfterRound", static_cast<double>(worstAfterRound));
    r.add(spec.seed, n, 3.0, "hollowEntries", static_cast<double>(hollow));
    r.add(spec.seed, n, 3.0, "blocksRecoveredIdentical", static_cast<double>(identical));
    r.add(spec.seed, n, 3.0, "halfCoins", static_cast<double>(w.totalHalfCoins()));
    r.add(spec.seed, n, 3.0, "expectedHalfCoins", static_cast<double>(w.expectedHalfCoins()));

    r.verdict("all blocks committed", ok && committed == spec.blocks,
              std::to_string(committed) + " of " + std::to_string(spec.blocks));
    r.verdict("occupancy never exceeds capacity", overCapacity == 0 && w.metrics().capacityViolations == 0 &&
                                                      peak <= spec.smallDisk,
              "peak " + std::to_string(peak) + " of " + std::to_string(spec.smallDisk));
    r.verdict("occupancy below 51% after every dissemination round", rounds > 0 && roundsAbove == 0,
              std::to_string(rounds) + " rounds, " + std::to_string(roundsAbove) + " above");
    r.verdict("every block recoverable byte-identical", identical == committed && hollow > 0,
              std::to_string(identical) + " of " + std::to_string(committed) + " (" + std::to_string(hollow) +
                  " hollow)");
    r.verdict("half-coin conservation", conserved,
              std::to_string(w.totalHalfCoins()) + " vs " + std::to_string(w.expectedHalfCoins()));
    return r;
}

void dumpState(const World& world, std::ostream& os) {
    for (const auto& id : world.edgeIds()) {
        const auto& s = world.state(id);
        nlohmann::json hollow = nlohmann::json::array();
        for (const auto& e : s.chain) {
            if (!storage::isHollow(e)) continue;
            const auto& h = std::get<storage::HollowBlock>(e);
            nlohmann::json ptrs = nlohmann::json::array();
            for (const auto& p : h.rList) ptrs.push_back({{"holder", p.holder.hex()}, {"relocatedHash", p.relocatedHash.hex()}});
            hollow.push_back({{"cHash", h.cHash.hex()}, {"rList", ptrs}});
        }
        nlohmann::json side = nlohmann::json::array();
        for (const auto& b : s.sideChain) side.push_back(b->cHash.hex());
        os << nlohmann::json{{"node", id.hex()},
                             {"leader", s.isLeader()},
                             {"active", world.isActive(id)},
                             {"chainLength", s.chain.size()},
                             {"tip", s.tipHash().hex()},
                             {"fullEntries", s.fullEntries},
                             {"usedSlots", s.usedSlots()},
                             {"diskCapacity", s.diskCapacity},
                             {"halfCoins", s.halfCoins},
                             {"mined", s.mined},
                             {"hollow", hollow},
                             {"sideChain", side}}
                  .dump()
           << '\n';
    }
}

}  // namespace dean::experiments
