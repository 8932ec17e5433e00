#include <doctest.h>

#include <sstream>

#include "dean/core/chain.hpp"
#include "dean/sim/topology.hpp"
#include "dean/workload/workload.hpp"

using namespace dean;
using namespace dean::workload;

namespace {

sim::Topology topo(std::size_t edges = 5, std::size_t sensors = 15) {
    sim::TopologySpec ts;
    ts.edges = edges;
    ts.sensors = sensors;
    return sim::buildTopology(ts);
}

std::deque<Transaction> txns(std::size_t n) {
    std::deque<Transaction> out;
    const auto t = topo();
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(makeTransaction(TxnKind::Regular, t.sensorNodes[0].id, t.edgeNodes[0].id, i + 1, {},
                                      static_cast<SimMillis>(i)));
    }
    return out;
}

}  // namespace

TEST_SUITE("workload") {
    TEST_CASE("splitNodes") {
        CHECK(sim::splitNodes(200, 3.0) == std::pair<std::size_t, std::size_t>{50, 150});
        CHECK(sim::splitNodes(100, 4.0) == std::pair<std::size_t, std::size_t>{20, 80});
        CHECK(sim::splitNodes(1000, 3.0) == std::pair<std::size_t, std::size_t>{250, 750});
    }

    TEST_CASE("topology attaches each sensor to its nearest edge") {
        const auto t = topo(7, 40);
        CHECK(t.edgeNodes.size() == 7);
        CHECK(t.sensorNodes.size() == 40);
        for (const auto& s : t.sensorNodes) {
            const auto d = squaredDistance(s.registration.loc, t.locationOf(s.attachedEdge));
            for (const auto& e : t.edgeNodes) CHECK(d <= squaredDistance(s.registration.loc, e.registration.loc));
            CHECK(t.kindOf(s.id) == NodeKind::Sensor);
        }
        CHECK_FALSE(t.contains(NodeId{hashBytes("x")}));
    }

    TEST_CASE("empty and deterministic streams") {
        WorkloadSpec spec;
        spec.totalTxns = 0;
        CHECK(generate(spec, topo()).empty());
        spec.totalTxns = 500;
        spec.seed = 9;
        const auto a = generate(spec, topo());
        const auto b = generate(spec, topo());
        REQUIRE(a.size() == 500);
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].txn == b[i].txn);
            CHECK(a[i].issueAt == b[i].issueAt);
            CHECK(a[i].key == b[i].key);
        }
        spec.seed = 10;
        const auto c = generate(spec, topo());
        bool differs = false;
        for (std::size_t i = 0; i < a.size(); ++i) differs = differs || !(a[i].txn == c[i].txn);
        CHECK(differs);
    }

    TEST_CASE("stream properties") {
        WorkloadSpec spec;
        spec.totalTxns = 3000;
        spec.startAt = 10'000;
        spec.txnRatePerSensor = 2.0;
        const auto t = topo();
        const auto items = generate(spec, t);
        std::size_t reads = 0;
        for (std::size_t i = 0; i < items.size(); ++i) {
            const auto& it = items[i];
            if (i) CHECK(items[i - 1].issueAt <= it.issueAt);
            CHECK(it.issueAt >= spec.startAt);
            CHECK(transactionWellFormed(it.txn));
            CHECK(it.txn.amount >= 1);
            CHECK(it.txn.amount <= 1000);
            CHECK(it.key < spec.keySpace);
            CHECK(t.kindOf(it.txn.receiver) == NodeKind::Edge);
            CHECK(it.txn.sender == it.sensor);
            reads += it.op == Op::Read;
        }
        // 15 sensors at 2/s: 3000 requests take 100 s.
        CHECK(items.back().issueAt - spec.startAt == doctest::Approx(100'000).epsilon(0.01));
        CHECK(static_cast<double>(reads) / items.size() == doctest::Approx(0.5).epsilon(0.1));
    }

    TEST_CASE("1200 transactions fill 100 blocks") {
        WorkloadSpec spec;
        spec.totalTxns = 1200;
        std::deque<Transaction> pending;
        for (const auto& it : generate(spec, topo())) pending.push_back(it.txn);
        Hash32 tip = genesisBlock().cHash;
        std::vector<Block> chain{genesisBlock()};
        while (auto b = assembleBlocks(pending, tip, genesisIdentity(), 5)) {
            tip = b->cHash;
            chain.push_back(*b);
        }
        CHECK(chain.size() == 101);
        CHECK(pending.empty());
        CHECK(validateChain(chain).valid);
    }

    TEST_CASE("assembly keeps FIFO order and leaves the remainder") {
        auto eleven = txns(11);
        CHECK_FALSE(assembleBlocks(eleven, genesisBlock().cHash, genesisIdentity(), 1));
        CHECK(eleven.size() == 11);

        auto pending = txns(25);
        const auto first = pending.front();
        auto b = assembleBlocks(pending, genesisBlock().cHash, genesisIdentity(), 1);
        REQUIRE(b);
        CHECK(b->txnList.size() == 12);
        CHECK(b->txnList.front() == first);
        CHECK(b->pHash == genesisBlock().cHash);
        CHECK(blockWellFormed(*b));
        CHECK(pending.size() == 13);
        CHECK(pending.front().amount == 13);

        auto big = txns(40);
        auto b16 = assembleBlocks(big, genesisBlock().cHash, genesisIdentity(), 1, 16);
        CHECK(b16->txnList.size() == 16);
        CHECK_THROWS_AS(assembleBlocks(big, genesisBlock().cHash, genesisIdentity(), 1, 11), DeanError);
    }

    TEST_CASE("replay round trip") {
        WorkloadSpec spec;
        spec.totalTxns = 200;
        const auto items = generate(spec, topo());
        std::stringstream ss;
        writeReplay(ss, items);
        const auto back = readReplay(ss);
        REQUIRE(back.size() == items.size());
        for (std::size_t i = 0; i < items.size(); ++i) {
            CHECK(back[i].txn == items[i].txn);
            CHECK(back[i].issueAt == items[i].issueAt);
            CHECK(back[i].sensor == items[i].sensor);
            CHECK(back[i].key == items[i].key);
            CHECK(back[i].op == items[i].op);
        }
    }

    TEST_CASE("replay rejects bad input") {
        std::stringstream junk("{not json\n");
        CHECK_THROWS_AS(readReplay(junk), DeanError);

        WorkloadSpec spec;
        spec.totalTxns = 1;
        std::stringstream ss;
        writeReplay(ss, generate(spec, topo()));
        auto line = ss.str();
        // Change the amount without fixing the id.
        const auto pos = line.find("\"amount\":");
        REQUIRE(pos != std::string::npos);
        line.insert(pos + 9, "9");
        std::stringstream tampered(line);
        CHECK_THROWS_AS(readReplay(tampered), DeanError);
    }

    TEST_CASE("spec validation") {
        WorkloadSpec s;
        CHECK_NOTHROW(s.validate());
        auto bad = s;
        bad.txnRatePerSensor = 0;
        CHECK_THROWS_AS(bad.validate(), DeanError);
        bad = s;
        bad.txnRatePerSensor = 20000;
        CHECK_THROWS_AS(bad.validate(), DeanError);
        bad = s;
        bad.txnsPerBlock = 4;
        CHECK_THROWS_AS(bad.validate(), DeanError);
        bad = s;
        bad.keySpace = 0;
        CHECK_THROWS_AS(bad.validate(), DeanError);
        bad = s;
        bad.readWriteMix = 1.5;
        CHECK_THROWS_AS(generate(bad, topo()), DeanError);
    }
}
