#include <doctest.h>

#include <sstream>

#include "dean/experiments/experiments.hpp"

using namespace dean;
using namespace dean::experiments;

TEST_SUITE("experiments") {
    TEST_CASE("config file overrides") {
        std::istringstream is(R"(# trial setup
nodes = 120
ratio = 4   # sensors per edge
seed = 42
replicationTimeout = 2500
linkLatencyEdgeEdge = 120
txnsPerBlock = 16
weights.adjacency = 0.25
weights.geo = 0.25
weights.activity = 0.25
weights.disk = 0.25
full = true
totalTxns = "900"
)");
        const auto c = parseConfig(is);
        CHECK(c.nodes == 120);
        CHECK(c.ratio == 4.0);
        CHECK(c.world.seed == 42);
        CHECK(c.world.net.replicationTimeout == 2500);
        CHECK(c.world.net.linkLatencyEdgeEdge == 120);
        CHECK(c.world.links.edgeEdge == 120);
        CHECK(c.world.net.txnsPerBlock == 16);
        CHECK(c.workload.txnsPerBlock == 16);
        CHECK(c.world.net.weights.adjacency == 0.25);
        CHECK(c.full);
        CHECK(c.workload.totalTxns == 900);
        // Untouched keys keep their defaults.
        CHECK(c.world.net.atwSharePeriod == 2000);
    }

    TEST_CASE("config errors") {
        for (const char* text : {"replicationTimeoutt = 5\n", "nodes\n", "nodes = many\n", "txnsPerBlock = 8\n",
                                 "weights.geo = 0.9\n", "ratio = -1\n", "full = maybe\n"}) {
            INFO(text);
            std::istringstream is(text);
            CHECK_THROWS_AS(parseConfig(is), DeanError);
        }
    }

    TEST_CASE("reports: json and csv") {
        ExperimentReport r;
        r.name = "demo";
        r.config = configToJson(ExperimentConfig{});
        r.add(1, 100, 3, "latency", 150.5);
        r.add(2, 100, 3, "latency", 151);
        r.verdict("ok", true, "fine");
        CHECK(r.passed());
        const auto j = r.toJson();
        CHECK(j["metrics"]["latency"].size() == 2);
        CHECK(j["config"]["world"].contains("seed"));
        CHECK(j["config"]["horizonMs"] == 3'600'000);
        std::ostringstream os;
        writeCsv(os, {r});
        CHECK(os.str() ==
              "experiment,seed,nodeCount,ratio,metricName,value\n"
              "demo,1,100,3,latency,150.5\n"
              "demo,2,100,3,latency,151\n");
        r.verdict("bad", false, "");
        CHECK_FALSE(r.passed());
    }

    TEST_CASE("statistics by hand") {
        // mean 4, population variance 1.0 -> sd 1, CoV 0.25
        CHECK(coefficientOfVariation({3, 5, 3, 5}) == doctest::Approx(0.25));
        CHECK(coefficientOfVariation({7, 7, 7}) == 0.0);
        // second differences of 1,4,9,16 are 2,2
        CHECK(roughness({1, 4, 9, 16}) == doctest::Approx(2.0));
        CHECK(roughness({1, 2, 3, 4, 5}) == 0.0);
        CHECK(roughness({0, 3, 0}) == doctest::Approx(6.0));
        CHECK(roughness({1, 2}) == 0.0);
    }

    TEST_CASE("a single run at ratio 3 is deterministic") {
        ExperimentConfig cfg;
        cfg.nodes = 40;
        cfg.workload.totalTxns = 480;
        const auto a = runSingle(cfg, 9);
        const auto b = runSingle(cfg, 9);
        CHECK(a.passed());
        CHECK(a.config["traceDigest"] == b.config["traceDigest"]);
        CHECK(a.metrics.at("throughputTxnsPerSec") == b.metrics.at("throughputTxnsPerSec"));
        CHECK(a.metrics.at("meanCommitLatencyMs") == b.metrics.at("meanCommitLatencyMs"));
        CHECK(a.metrics.at("txnsCommitted")[0] == 480);
        CHECK(a.metrics.at("validChainFraction")[0] == 1.0);
        const auto c = runSingle(cfg, 10);
        CHECK(c.passed());
        CHECK(a.config["traceDigest"] != c.config["traceDigest"]);
    }

    TEST_CASE("healthy trials are fully valid and safe") {
        ExperimentConfig cfg;
        cfg.workload.totalTxns = 240;
        auto t = buildTrial(cfg, 28, 3.0, 4);
        CHECK(t.topology.edgeNodes.size() == 7);
        CHECK(t.topology.sensorNodes.size() == 21);
        t.world->runUntilSettled(600'000);
        t.world->runUntil(t.world->now() + 5000);
        CHECK(validChainFraction(*t.world) == 1.0);
        const auto s = checkCommittedSafety(*t.world);
        CHECK(s.committed == 20);
        CHECK(s.violations == 0);
    }

    TEST_CASE("safety oracle for three edges") {
        ExperimentConfig cfg;
        const auto r = runSafetyOracle(cfg, {3});
        for (const auto& v : r.verdicts) {
            INFO(v.rule << ": " << v.detail);
            CHECK(v.pass);
        }
        // Subsets of size 0 and 1, two modes.
        CHECK(r.metrics.at("cases")[0] == 8);
    }

    TEST_CASE("liveness with a coarse stride") {
        ExperimentConfig cfg;
        LivenessSpec spec;
        spec.blocks = 10;
        spec.stride = 50;
        const auto r = runLivenessCheck(cfg, spec);
        for (const auto& v : r.verdicts) {
            INFO(v.rule << ": " << v.detail);
            CHECK(v.pass);
        }
    }
}
