// dean-sim: runs the simulator and the experiment suites from the command line.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "dean/core/error.hpp"
#include "dean/experiments/experiments.hpp"

namespace fs = std::filesystem;
using namespace dean;
using namespace dean::experiments;

namespace {

struct Options {
    std::string configPath;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> nodes;
    std::optional<double> ratio;
    std::string out = "dean-out";
    bool full = false;
    std::size_t seeds = 0;
    std::size_t stride = 1;
};

/// `base` carries the subcommand's defaults; the config file and flags override them.
ExperimentConfig loadConfig(const Options& o, ExperimentConfig cfg = {}) {
    if (!o.configPath.empty()) {
        std::ifstream is(o.configPath);
        if (!is) throw DeanError(ErrorCode::BadConfig, "cannot open " + o.configPath);
        cfg = parseConfig(is, cfg);
    }
    if (o.seed) cfg.world.seed = *o.seed;
    if (o.nodes) cfg.nodes = *o.nodes;
    if (o.ratio) cfg.ratio = *o.ratio;
    cfg.full = cfg.full || o.full;
    return cfg;
}

std::vector<std::uint64_t> seedList(const ExperimentConfig& cfg, std::size_t count) {
    std::vector<std::uint64_t> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(cfg.world.seed + i);
    return out;
}

int finish(const Options& o, const std::vector<ExperimentReport>& reports) {
    fs::create_directories(o.out);
    nlohmann::json j = nlohmann::json::array();
    bool pass = true;
    for (const auto& r : reports) {
        j.push_back(r.toJson());
        pass = pass && r.passed();
        for (const auto& v : r.verdicts) {
            std::cout << (v.pass ? "PASS " : "FAIL ") << r.name << ": " << v.rule << " (" << v.detail << ")\n";
        }
    }
    std::ofstream(fs::path(o.out) / "report.json") << (reports.size() == 1 ? j[0] : j).dump(2) << '\n';
    std::ofstream csv(fs::path(o.out) / "metrics.csv");
    writeCsv(csv, reports);
    std::cout << "wrote " << (fs::path(o.out) / "report.json").string() << '\n';
    return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DEAN consensus simulator"};
    app.require_subcommand(1);
    Options o;
    auto common = [&o](CLI::App* sub) {
        sub->add_option("--config", o.configPath, "key = value config file");
        sub->add_option("--seed", o.seed, "base seed");
        sub->add_option("--nodes", o.nodes, "total node count");
        sub->add_option("--ratio", o.ratio, "sensors per edge node");
        sub->add_option("--out", o.out, "output directory")->capture_default_str();
        sub->add_flag("--full", o.full, "add the 1000-node variants");
    };
    auto* run = app.add_subcommand("run", "one workload run with a full trace");
    auto* resilience = app.add_subcommand("resilience", "valid-chain fraction under silent failures");
    auto* scalability = app.add_subcommand("scalability", "commit latency over network size");
    auto* sensitivity = app.add_subcommand("sensitivity", "throughput and latency over sensor:edge ratios");
    auto* safety = app.add_subcommand("safety-oracle", "exhaustive compromised-subset check");
    auto* liveness = app.add_subcommand("liveness", "leader restart at every event boundary");
    auto* memory = app.add_subcommand("memory-balance", "small-disk dissemination and recovery");
    auto* dump = app.add_subcommand("dump-state", "per-node storage state after a run, as JSONL");
    for (auto* s : {run, resilience, scalability, sensitivity, safety, liveness, memory, dump}) common(s);
    for (auto* s : {resilience, scalability, sensitivity}) s->add_option("--seeds", o.seeds, "number of seeds");
    liveness->add_option("--stride", o.stride, "inject at every n-th event (1 = exhaustive)");

    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentConfig defaults;
        if (resilience->parsed()) defaults.workload.totalTxns = 6000;
        if (scalability->parsed()) defaults.workload.totalTxns = 40 * defaults.world.net.txnsPerBlock;
        if (sensitivity->parsed()) defaults.workload.totalTxns = 3000;
        const auto cfg = loadConfig(o, defaults);
        if (run->parsed()) {
            fs::create_directories(o.out);
            auto os = std::make_shared<std::ofstream>(fs::path(o.out) / "trace.jsonl");
            auto writer = std::make_shared<sim::JsonlTraceWriter>(os);
            return finish(o, {runSingle(cfg, cfg.world.seed, writer)});
        }
        if (resilience->parsed()) {
            std::vector<ExperimentReport> out{
                runResilience(cfg, cfg.nodes, {0.0, 0.25, 0.4}, seedList(cfg, o.seeds ? o.seeds : 5))};
            if (cfg.full) {
                out.push_back(runResilience(cfg, 1000, {0.25}, seedList(cfg, 1)));
                out.back().name = "resilience-full";
            }
            return finish(o, out);
        }
        if (scalability->parsed()) {
            return finish(o, {runScalability(cfg, {100, 250, 500, 1000}, seedList(cfg, o.seeds ? o.seeds : 1))});
        }
        if (sensitivity->parsed()) {
            return finish(o, {runSensitivity(cfg, {2, 3, 4, 5}, o.nodes ? cfg.nodes : 100,
                                             seedList(cfg, o.seeds ? o.seeds : 3))});
        }
        if (safety->parsed()) return finish(o, {runSafetyOracle(cfg, {3, 5, 7, 9})});
        if (liveness->parsed()) {
            LivenessSpec spec;
            spec.seed = cfg.world.seed;
            spec.stride = std::max<std::size_t>(o.stride, 1);
            return finish(o, {runLivenessCheck(cfg, spec)});
        }
        if (memory->parsed()) {
            MemoryBalanceSpec spec;
            spec.seed = cfg.world.seed;
            return finish(o, {runMemoryBalance(cfg, spec)});
        }
        if (dump->parsed()) {
            auto t = buildTrial(cfg, cfg.nodes, cfg.ratio, cfg.world.seed);
            t.world->runUntilSettled(cfg.horizonMs);
            t.world->runUntil(t.world->now() + 5000);
            fs::create_directories(o.out);
            std::ofstream os(fs::path(o.out) / "state.jsonl");
            dumpState(*t.world, os);
            dumpState(*t.world, std::cout);
            return 0;
        }
    } catch (const DeanError& e) {
        std::cerr << "dean-sim: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
