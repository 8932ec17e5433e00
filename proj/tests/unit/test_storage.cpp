#include <doctest.h>

#include "dean/experiments/experiments.hpp"
#include "dean/storage/memory_balance.hpp"
#include "fixture.hpp"

using namespace dean;
using namespace dean::storage;
using test::Net;

namespace {

/// Appends `n` blocks to the node's chain.
void grow(consensus::NodeState& s, std::size_t n, std::uint64_t salt = 1) {
    for (std::size_t i = 0; i < n; ++i) {
        s.appendBlock(std::make_shared<const Block>(
            test::childBlock(s.tipHash(), static_cast<SimMillis>(s.chain.size()) * 1000, salt * 100 + i,
                             test::edgeId(50))));
    }
}

std::map<NodeId, NeighborInfo> roomy(const Net& net, std::size_t except, std::int64_t freeSlots = 100) {
    std::map<NodeId, NeighborInfo> out;
    for (std::size_t i = 0; i < net.ids.size(); ++i) {
        if (i != except) out[net.ids[i]] = NeighborInfo{DiskGauge{freeSlots, 0}, net.regs[i].loc};
    }
    return out;
}

BlockRef flagged(const Block& b) {
    Block c = b;
    c.relocationFlag = true;
    return std::make_shared<const Block>(std::move(c));
}

}  // namespace

TEST_SUITE("storage") {
    TEST_CASE("disk gauge threshold is exact at 51%") {
        CHECK_FALSE(DiskGauge::overThreshold(50, 100));
        CHECK(DiskGauge::overThreshold(51, 100));
        CHECK_FALSE(DiskGauge::overThreshold(5, 10));
        CHECK(DiskGauge::overThreshold(6, 10));
        CHECK_FALSE(DiskGauge::overThreshold(10, 20));
        CHECK(DiskGauge::overThreshold(11, 21));
        CHECK((DiskGauge{10, 6}.free() == 4));
    }

    TEST_CASE("6 of 10 slots used: one block goes to the nearest neighbour") {
        Net net(4, 10);
        auto& s = net.nodes[0];
        grow(s, 5);
        REQUIRE(s.usedSlots() == 6);
        auto plan = planDissemination(s, roomy(net, 0));
        REQUIRE(plan);
        REQUIRE(plan.value().size() == 1);
        CHECK(plan.value()[0].cHash == genesisBlock().cHash);
        CHECK(plan.value()[0].holder == net.ids[1]);

        consensus::Outbox out;
        auto sent = disseminateOldest(s, roomy(net, 0), 100, out);
        CHECK(sent.value() == 1);
        CHECK(test::countPayload<consensus::RelocateBlock>(out) == 1);
        const auto& m = std::get<consensus::RelocateBlock>(out.messages[0].payload);
        CHECK(m.block->relocationFlag);

        auto ack = receiveRelocatedBlock(net.nodes[1], m.block, s.id, 250);
        REQUIRE(ack);
        auto t = finalizeDissemination(s, ack.value(), net.ids[1]);
        REQUIRE(t);
        CHECK(s.usedSlots() == 5);
        CHECK(isHollow(*s.entry(genesisBlock().cHash)));
    }

    TEST_CASE("5 of 10 slots used: nothing moves") {
        Net net(4, 10);
        grow(net.nodes[0], 4);
        auto plan = planDissemination(net.nodes[0], roomy(net, 0));
        REQUIRE(plan);
        CHECK(plan.value().empty());
    }

    TEST_CASE("tip stays full and the plan stops below the threshold") {
        Net net(4, 10);
        auto& s = net.nodes[0];
        grow(s, 9);
        auto plan = planDissemination(s, roomy(net, 0)).value();
        CHECK(plan.size() == 5);
        for (const auto& r : plan) CHECK(r.cHash != s.tipHash());
    }

    TEST_CASE("rList holders are excluded; nobody left means NoEligibleNeighbor") {
        Net net(2, 10);
        auto& s = net.nodes[0];
        grow(s, 1);
        // Genesis is the only candidate; pretend the one neighbour already holds it.
        Block g = genesisBlock();
        g.rList.push_back(RelocationPointer{net.ids[1], hashBytes("x")});
        s.replaceEntry(g.cHash, std::make_shared<const Block>(g));
        s.diskCapacity = 2;
        auto plan = planDissemination(s, roomy(net, 0));
        CHECK_FALSE(plan);
        CHECK(plan.code() == ErrorCode::NoEligibleNeighbor);

        consensus::Outbox out;
        const auto before = s.usedSlots();
        CHECK_FALSE(disseminateOldest(s, roomy(net, 0), 1, out));
        CHECK(test::hasNote(out, "capacity-alarm"));
        CHECK(s.usedSlots() == before);
        CHECK(s.relocating.empty());
    }

    TEST_CASE("full neighbours are skipped") {
        Net net(3, 10);
        auto& s = net.nodes[0];
        grow(s, 5);
        auto ns = roomy(net, 0);
        ns[net.ids[1]].gauge = DiskGauge{10, 10};
        auto plan = planDissemination(s, ns).value();
        REQUIRE(plan.size() == 1);
        CHECK(plan[0].holder == net.ids[2]);
    }

    TEST_CASE("relocated hash matches a hand-built digest") {
        REQUIRE(sodium_init() >= 0);
        Net net(3);
        const auto b = flagged(test::childBlock(genesisBlock().cHash, 5, 3, net.ids[0]));
        auto ack = receiveRelocatedBlock(net.nodes[1], b, net.ids[0], 4321);
        REQUIRE(ack);
        std::vector<std::uint8_t> pre;
        test::putHash(pre, b->cHash);
        test::putNode(pre, net.ids[1]);
        test::put64(pre, 4321);
        CHECK(ack->relocatedHash == test::sodiumSha256(pre));
        CHECK(ack->accepted);
        CHECK(net.nodes[1].sideChain.size() == 1);
        CHECK(findStoredBlock(net.nodes[1], b->cHash) == b);
    }

    TEST_CASE("holder refusals") {
        Net net(3, 3);
        auto& h = net.nodes[1];
        const Block plain = test::childBlock(genesisBlock().cHash, 5, 3, net.ids[0]);
        CHECK(receiveRelocatedBlock(h, std::make_shared<const Block>(plain), net.ids[0], 1).code() ==
              ErrorCode::NotRelocation);

        Block forged = plain;
        forged.relocationFlag = true;
        forged.txnList[3].amount += 1;
        CHECK(receiveRelocatedBlock(h, std::make_shared<const Block>(forged), net.ids[0], 3).code() ==
              ErrorCode::BadSourceHash);
        CHECK(h.sideChain.empty());

        const auto b = flagged(plain);
        REQUIRE(receiveRelocatedBlock(h, b, net.ids[0], 1));
        CHECK(receiveRelocatedBlock(h, b, net.ids[0], 2).code() == ErrorCode::DuplicateSideBlock);

        // Capacity 3: genesis plus one side block plus one more fills it.
        REQUIRE(receiveRelocatedBlock(h, flagged(test::childBlock(genesisBlock().cHash, 6, 4, net.ids[0])),
                                      net.ids[0], 4));
        CHECK(receiveRelocatedBlock(h, flagged(test::childBlock(genesisBlock().cHash, 7, 5, net.ids[0])),
                                    net.ids[0], 5)
                  .code() == ErrorCode::NoSpace);
    }

    TEST_CASE("finalize pays half a coin and hollows the block") {
        Net net(3, 10);
        auto& s = net.nodes[0];
        auto& h = net.nodes[1];
        s.halfCoins = 1;
        grow(s, 2);
        const auto target = s.chain[1];
        const auto cHash = entryHash(target);
        auto ack = receiveRelocatedBlock(h, flagged(*fullBlock(target)), s.id, 77).value();
        auto t = finalizeDissemination(s, ack, h.id).value();
        REQUIRE(t.has_value());
        CHECK(t->halfCoins == 1);
        applyTransfer(s, h, *t);
        CHECK(s.halfCoins == 0);
        CHECK(h.halfCoins == 1);
        const auto& hollow = std::get<HollowBlock>(*s.entry(cHash));
        CHECK(hollow.cHash == cHash);
        CHECK(hollow.rList.size() == 1);
        CHECK(hollow.rList[0].holder == h.id);
        CHECK(validateStoredChain(s.chain).valid);

        // A broke sender still relocates, it just cannot pay.
        auto ack2 = receiveRelocatedBlock(h, flagged(*fullBlock(s.chain[0])), s.id, 78).value();
        auto t2 = finalizeDissemination(s, ack2, h.id).value();
        CHECK_FALSE(t2.has_value());
    }

    TEST_CASE("bad acks leave the block full") {
        Net net(3, 10);
        auto& s = net.nodes[0];
        grow(s, 1);
        const auto cHash = entryHash(s.chain[1]);
        auto ack = receiveRelocatedBlock(net.nodes[1], flagged(*fullBlock(s.chain[1])), s.id, 5).value();
        auto wrongHolder = finalizeDissemination(s, ack, net.ids[2]);
        CHECK(wrongHolder.code() == ErrorCode::BadAck);
        auto tampered = ack;
        tampered.receivedAt += 1;
        CHECK(finalizeDissemination(s, tampered, net.ids[1]).code() == ErrorCode::BadAck);
        CHECK_FALSE(isHollow(*s.entry(cHash)));
    }

    TEST_CASE("recovery walks the pointers in order") {
        Net net(4, 10);
        auto& s = net.nodes[0];
        grow(s, 2);
        const Block original = *fullBlock(s.chain[1]);
        auto a1 = receiveRelocatedBlock(net.nodes[1], flagged(original), s.id, 5).value();
        finalizeDissemination(s, a1, net.ids[1]).value();
        // Second holder recorded by hand so that both pointers exist.
        auto a2 = receiveRelocatedBlock(net.nodes[2], flagged(original), s.id, 6).value();
        s.hollowPointers[original.cHash].push_back(RelocationPointer{net.ids[2], a2.relocatedHash});

        std::vector<NodeId> asked;
        auto fetch = [&](const NodeId& who, const Hash32& h) -> BlockRef {
            asked.push_back(who);
            return findStoredBlock(net.nodes[net.indexOf(who)], h);
        };
        auto got = recoverBlock(s, original.cHash, fetch);
        REQUIRE(got);
        CHECK(got->cHash == original.cHash);
        CHECK(computeBlockHash(got.value()) == original.cHash);
        CHECK_FALSE(got->relocationFlag);
        CHECK(asked.size() == 1);

        // First holder loses it; the second one answers.
        net.nodes[1].sideChain.clear();
        net.nodes[1].sideIndex.clear();
        asked.clear();
        auto again = recoverBlock(s, original.cHash, fetch);
        REQUIRE(again);
        CHECK(asked.size() == 2);

        // A holder returning a doctored copy is skipped.
        net.nodes[2].sideChain.clear();
        net.nodes[2].sideIndex.clear();
        auto liar = [&](const NodeId&, const Hash32&) -> BlockRef {
            Block b = original;
            b.txnList[0].amount += 1;
            return std::make_shared<const Block>(b);
        };
        CHECK(recoverBlock(s, original.cHash, liar).code() == ErrorCode::Unrecoverable);
        CHECK(recoverBlock(s, original.cHash, fetch).code() == ErrorCode::Unrecoverable);
        CHECK(recoverBlock(s, hashBytes("never stored"), fetch).code() == ErrorCode::Unrecoverable);
    }

    TEST_CASE("hollow headers") {
        const Block b = test::childBlock(genesisBlock().cHash, 5, 3, test::edgeId(1));
        CHECK_THROWS_AS(hollowOut(b, {}), DeanError);
        const auto h = hollowOut(b, {RelocationPointer{test::edgeId(2), hashBytes("r")}});
        CHECK(h.cHash == b.cHash);
        CHECK(h.pHash == b.pHash);
        CHECK(h.timestamp == b.timestamp);
        CHECK(HollowBlock::payloadErased);

        std::vector<ChainEntry> chain{genesisRef(), h};
        CHECK(validateStoredChain(chain).valid);
        auto broken = h;
        broken.rList.clear();
        std::vector<ChainEntry> bad{genesisRef(), broken};
        CHECK(validateStoredChain(bad).firstBadIndex == std::optional<std::size_t>(1));
        auto relinked = h;
        relinked.pHash = hashBytes("elsewhere");
        std::vector<ChainEntry> bad2{genesisRef(), relinked};
        CHECK_FALSE(validateStoredChain(bad2).valid);
    }

    TEST_CASE("memory balance over 100 blocks conserves coins and recovers everything") {
        experiments::ExperimentConfig cfg;
        experiments::MemoryBalanceSpec spec;
        spec.blocks = 100;
        spec.seed = 5;
        const auto r = experiments::runMemoryBalance(cfg, spec);
        for (const auto& v : r.verdicts) {
            INFO(v.rule << ": " << v.detail);
            CHECK(v.pass);
        }
    }
}
