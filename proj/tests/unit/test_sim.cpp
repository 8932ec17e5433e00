#include <doctest.h>

#include <set>
#include <sstream>

#include "dean/experiments/experiments.hpp"
#include "dean/sim/world.hpp"
#include "fixture.hpp"

using namespace dean;
using namespace dean::sim;

namespace {

World makeWorld(std::size_t edges, std::uint64_t seed, std::uint64_t txns) {
    TopologySpec ts;
    ts.edges = edges;
    ts.sensors = edges * 3;
    ts.seed = seed;
    auto topo = buildTopology(ts);
    WorldConfig wc;
    wc.net = consensus::NetworkConfig::forEdges(edges);
    wc.seed = seed;
    World w(wc, topo);
    workload::WorkloadSpec ws;
    ws.totalTxns = txns;
    ws.seed = seed;
    ws.startAt = 10'000;
    w.loadWorkload(workload::generate(ws, topo));
    return w;
}

std::string fullTrace(std::uint64_t seed, std::uint64_t txns) {
    auto w = makeWorld(5, seed, txns);
    auto os = std::make_shared<std::ostringstream>();
    w.setObservers({std::make_shared<JsonlTraceWriter>(os)});
    w.runUntilSettled(300'000);
    return os->str();
}

TraceRecord rec(SimMillis t, const NodeId& n, const char* kind, const Hash32& h) { return {t, n, kind, h}; }

}  // namespace

TEST_SUITE("sim") {
    TEST_CASE("scheduleSend without jitter uses the base latencies") {
        TopologySpec ts;
        ts.edges = 3;
        ts.sensors = 3;
        const auto topo = buildTopology(ts);
        LinkModel links;
        links.jitterFraction = 0;
        Rng rng(1);
        const auto e0 = topo.edgeNodes[0].id, e1 = topo.edgeNodes[1].id;
        const auto s0 = topo.sensorNodes[0].id;
        consensus::Message m{e0, e1, consensus::FaultyAnnouncement{e0}, 1000};
        auto ev = scheduleSend(m, topo, links, 1000, rng, 7);
        REQUIRE(ev);
        CHECK(ev->fireAt == 1150);
        CHECK(ev->seq == 7);
        m.from = s0;
        CHECK(scheduleSend(m, topo, links, 1000, rng, 8)->fireAt == 1095);
        m.from = consensus::networkQueueId();
        CHECK(scheduleSend(m, topo, links, 1000, rng, 9)->fireAt == 1150);
        m.to = test::edgeId(999);
        CHECK(scheduleSend(m, topo, links, 0, rng, 10).code() == ErrorCode::UnknownNode);
    }

    TEST_CASE("jitter stays within its band") {
        TopologySpec ts;
        ts.edges = 2;
        ts.sensors = 0;
        const auto topo = buildTopology(ts);
        LinkModel links;
        Rng rng(3);
        consensus::Message m{topo.edgeNodes[0].id, topo.edgeNodes[1].id, consensus::FaultyAnnouncement{}, 0};
        std::set<SimMillis> seen;
        for (int i = 0; i < 500; ++i) {
            const auto at = scheduleSend(m, topo, links, 0, rng, 0)->fireAt;
            CHECK(at >= 135);
            CHECK(at <= 165);
            seen.insert(at);
        }
        CHECK(seen.size() > 10);
    }

    TEST_CASE("rng helpers") {
        Rng a(5), b(5);
        for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
        Rng r(9);
        std::array<int, 6> hist{};
        for (int i = 0; i < 6000; ++i) {
            const auto v = r.uniformInt(3, 8);
            REQUIRE(v >= 3);
            REQUIRE(v <= 8);
            hist[v - 3] += 1;
            const double u = r.uniform();
            CHECK(u >= 0.0);
            CHECK(u < 1.0);
        }
        for (int h : hist) CHECK(h == doctest::Approx(1000).epsilon(0.15));
        CHECK(r.uniformSigned(-5, -5) == -5);
    }

    TEST_CASE("trace lines round trip") {
        const TraceRecord r{1234, test::edgeId(3), "commit", hashBytes("b")};
        CHECK(parseTraceLine(toJsonLine(r)) == r);
        CHECK_THROWS_AS(parseTraceLine("{\"simTime\": 1}"), DeanError);
        CHECK_THROWS_AS(parseTraceLine("nope"), DeanError);
    }

    TEST_CASE("empty workload: only timers and gossip") {
        auto w = makeWorld(5, 1, 0);
        auto trace = std::make_shared<MemoryTrace>();
        w.setObservers({trace});
        w.runUntil(30'000);
        CHECK(trace->header()["schema"] == kTraceSchema);
        const std::set<std::string> allowed{"timer:AtwTick", "AtwShare", "BlockProposal", "ValidationDecision",
                                            "persist", "decision", "adjacency", "elected", "commit",
                                            "LeaderBroadcast", "step-down"};
        std::set<std::string> kinds;
        for (const auto& r : trace->records()) kinds.insert(r.eventKind);
        for (const auto& k : kinds) {
            INFO(k);
            CHECK((allowed.count(k) || k.rfind("timer:", 0) == 0 || k == "atw" || k == "member-added"));
        }
        CHECK(kinds.count("AtwShare"));
        CHECK_FALSE(kinds.count("TxnSubmit"));
        CHECK(w.metrics().txnsIssued == 0);
        CHECK(w.metrics().blocksAssembled == 0);
    }

    TEST_CASE("same seed gives an identical trace; another seed differs") {
        const auto a = fullTrace(3, 240);
        const auto b = fullTrace(3, 240);
        CHECK(a == b);
        CHECK(a.size() > 1000);
        const auto c = fullTrace(4, 240);
        CHECK(a != c);
    }

    TEST_CASE("a run with checkers attached stays clean") {
        for (std::uint64_t seed : {1, 2, 3}) {
            auto w = makeWorld(5, seed, 360);
            auto locks = std::make_shared<LockExclusivityChecker>();
            auto live = std::make_shared<LivenessClassifier>();
            w.setObservers({locks, live});
            REQUIRE(w.runUntilSettled(600'000));
            w.runUntil(w.now() + 5000);
            CHECK(locks->ok());
            CHECK(locks->locksSeen() > 0);
            const auto s = live->summarize();
            CHECK(s.ok());
            CHECK(w.metrics().txnsCommitted == 360);
            CHECK(w.metrics().blocksCommitted == 30);
            CHECK(w.totalHalfCoins() == w.expectedHalfCoins());
            CHECK(w.metrics().capacityViolations == 0);
            CHECK(w.metrics().throughput() > 0);
            CHECK(w.metrics().meanCommitLatency() > 0);
        }
    }

    TEST_CASE("replaying a written trace feeds checkers the same way") {
        const auto text = fullTrace(6, 240);
        std::istringstream is(text);
        MemoryTrace mem;
        replayTrace(is, mem);
        CHECK(mem.header()["seed"] == 6);
        std::ostringstream again;
        for (const auto& r : mem.records()) again << toJsonLine(r) << '\n';
        CHECK(text.substr(text.find('\n') + 1) == again.str());

        std::istringstream is2(text);
        LockExclusivityChecker locks;
        replayTrace(is2, locks);
        CHECK(locks.ok());

        std::istringstream bad("{\"schema\":\"x\"}\nbroken\n");
        CHECK_THROWS_AS(replayTrace(bad, mem), DeanError);
    }

    TEST_CASE("digest sink agrees with the full trace") {
        auto w1 = makeWorld(5, 2, 120);
        auto w2 = w1;
        auto os = std::make_shared<std::ostringstream>();
        auto d1 = std::make_shared<DigestTraceSink>();
        w1.setObservers({d1});
        w2.setObservers({std::make_shared<JsonlTraceWriter>(os)});
        w1.runUntilSettled(300'000);
        w2.runUntilSettled(300'000);
        DigestTraceSink d2;
        std::istringstream is(os->str());
        replayTrace(is, d2);
        CHECK(d1->digest() == d2.digest());
        CHECK(d1->records() == d2.records());
    }

    TEST_CASE("lock checker on synthetic traces") {
        const auto a = test::edgeId(1), b = test::edgeId(2);
        const auto h = hashBytes("blk");
        LockExclusivityChecker ok;
        for (const auto& r : {rec(1, a, "lock", h), rec(2, a, "release", h), rec(3, b, "lock", h)}) ok.onRecord(r);
        CHECK(ok.ok());
        CHECK(ok.locksSeen() == 2);
        LockExclusivityChecker bad;
        for (const auto& r : {rec(1, a, "lock", h), rec(2, b, "lock", h)}) bad.onRecord(r);
        CHECK_FALSE(bad.ok());
        // A release by someone else does not free the lock.
        LockExclusivityChecker stray;
        for (const auto& r : {rec(1, a, "lock", h), rec(2, b, "release", h), rec(3, b, "lock", h)}) stray.onRecord(r);
        CHECK_FALSE(stray.ok());
    }

    TEST_CASE("liveness classifier on synthetic traces") {
        const auto a = test::edgeId(1), b = test::edgeId(2), c = test::edgeId(3);
        const auto h = hashBytes("blk");
        auto feed = [](LivenessClassifier& lc, std::initializer_list<TraceRecord> rs) {
            lc.onHeader(nlohmann::json{{"edgeCount", 5}});
            for (const auto& r : rs) lc.onRecord(r);
            return lc.summarize();
        };
        LivenessClassifier c1;
        auto s1 = feed(c1, {rec(1, a, "lock", h), rec(2, a, "commit", h)});
        CHECK(s1.ok());
        CHECK(s1.committed == 1);

        LivenessClassifier c2;
        auto s2 = feed(c2, {rec(1, a, "lock", h), rec(2, a, "abort:timeout", h), rec(2, a, "requeue", h),
                            rec(5, b, "lock", h), rec(6, b, "commit", h)});
        CHECK(s2.ok());
        CHECK(s2.abortEvents == 1);

        LivenessClassifier c3;
        auto s3 = feed(c3, {rec(1, a, "lock", h)});
        CHECK(s3.partial == 1);
        CHECK_FALSE(s3.ok());

        LivenessClassifier c4;
        auto s4 = feed(c4, {rec(1, a, "lock", h), rec(2, a, "persist", h), rec(2, b, "persist", h),
                            rec(2, c, "persist", h), rec(3, a, "abort:timeout", h), rec(3, a, "requeue", h)});
        CHECK_FALSE(s4.ok());

        LivenessClassifier c5;
        auto s5 = feed(c5, {rec(1, a, "lock", h), rec(2, a, "commit", h), rec(3, b, "lock", h), rec(4, b, "commit", h)});
        CHECK_FALSE(s5.ok());
    }

    TEST_CASE("a silent node emits nothing after onset") {
        auto w = makeWorld(5, 7, 240);
        auto trace = std::make_shared<MemoryTrace>();
        w.setObservers({trace});
        const auto victim = w.edgeIds()[3];
        w.injectFaults({Fault::silent(victim, 25'000)});
        w.runUntilSettled(300'000);
        for (const auto& r : trace->records()) {
            if (r.nodeId == victim && r.simTime > 25'000) {
                // Events addressed to the victim are still logged; it must not act on them.
                for (const char* k : {"persist", "lock", "decision", "adjacency", "elected", "faulty", "transfer"}) {
                    CHECK(r.eventKind != k);
                }
            }
        }
        for (const auto& id : w.edgeIds()) {
            if (id == victim) continue;
            const auto& seen = w.state(id).lastSeen;
            auto it = seen.find(victim);
            if (it != seen.end()) CHECK(it->second <= 25'000 + w.config().links.edgeEdge * 2);
        }
        CHECK(w.isSilent(victim));
        CHECK_FALSE(w.isActive(victim));
        CHECK(w.isCompromised(victim));
    }

    TEST_CASE("faults against unknown nodes are refused") {
        auto w = makeWorld(3, 1, 0);
        CHECK_THROWS_AS(w.injectFaults({Fault::silent(test::edgeId(555), 1)}), DeanError);
    }

    TEST_CASE("a copied world is an independent fork") {
        auto base = makeWorld(5, 11, 240);
        base.runUntil(20'000);
        auto fork = base;
        fork.detachObservers();
        fork.injectFaults({Fault::silent(fork.edgeIds()[0], fork.now() + 1)});
        fork.runUntilSettled(300'000);
        base.runUntilSettled(300'000);
        CHECK_FALSE(base.isSilent(base.edgeIds()[0]));
        CHECK(fork.isSilent(fork.edgeIds()[0]));

        auto replay = makeWorld(5, 11, 240);
        replay.runUntilSettled(300'000);
        CHECK(replay.metrics().eventsProcessed == base.metrics().eventsProcessed);
        CHECK(replay.commitOrder() == base.commitOrder());
    }

    TEST_CASE("event ceiling raises EventStorm") {
        TopologySpec ts;
        ts.edges = 5;
        ts.sensors = 15;
        WorldConfig wc;
        wc.net = consensus::NetworkConfig::forEdges(5);
        wc.eventCeiling = 10;
        World w(wc, buildTopology(ts));
        CHECK_THROWS_AS(w.runUntil(60'000), DeanError);
    }

    TEST_CASE("a leader restart mid-run still settles") {
        auto w = makeWorld(5, 12, 360);
        auto live = std::make_shared<LivenessClassifier>();
        w.setObservers({live});
        w.runUntil(15'000);
        const auto leaders = w.leaders();
        REQUIRE_FALSE(leaders.empty());
        w.injectFaults({Fault::restart(leaders.front(), w.now() + 10, 1000)});
        REQUIRE(w.runUntilSettled(600'000));
        w.runUntil(w.now() + 5000);
        CHECK(live->summarize().ok());
        // Submissions that reach the crashed edge while it is down are lost; everything
        // admitted is committed except a final partial block.
        const auto& m = w.metrics();
        CHECK(m.txnsIssued == 360);
        CHECK(m.txnsAdmitted >= 360 - 15);
        CHECK(m.txnsCommitted == m.txnsAdmitted - m.txnsAdmitted % 12);
        CHECK(m.blocksCommitted == m.blocksAssembled);
        CHECK_FALSE(w.isDown(leaders.front()));
    }
}
