#include <doctest.h>

#include <random>

#include "dean/core/atw.hpp"
#include "dean/core/error.hpp"
#include "fixture.hpp"

using namespace dean;
using dean::test::linkedChain;

TEST_SUITE("core") {
    TEST_CASE("sha-256 standard vectors") {
        CHECK(hashBytes("").hex() == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
        CHECK(hashBytes("abc").hex() == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    TEST_CASE("sha-256 agrees with libsodium on random 1 KiB payloads") {
        REQUIRE(sodium_init() >= 0);
        std::mt19937_64 rng(7);
        for (int round = 0; round < 16; ++round) {
            std::vector<std::uint8_t> payload(1024);
            for (auto& b : payload) b = static_cast<std::uint8_t>(rng());
            CHECK(hashBytes(payload) == test::sodiumSha256(payload));
        }
    }

    TEST_CASE("hash hex round trip and ordering") {
        const auto h = hashBytes("x");
        CHECK(Hash32::fromHex(h.hex()) == h);
        CHECK(Hash32::zero().isZero());
        CHECK_FALSE(h.isZero());
        CHECK(h.shortHex().size() == 12);
    }

    TEST_CASE("canonical encoding is big-endian with count-prefixed lists") {
        ByteWriter w;
        w.u64(0x0102030405060708ULL);
        w.i64(-1);
        const std::vector<std::uint8_t> expect{1, 2, 3, 4, 5, 6, 7, 8, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff};
        CHECK(w.bytes() == expect);

        ByteWriter n;
        const NodeId id{hashBytes("n"), NodeKind::Sensor};
        n.nodeId(id);
        std::vector<std::uint8_t> manual;
        test::putNode(manual, id);
        CHECK(n.bytes() == manual);
        CHECK(n.bytes().size() == 40);
        CHECK(n.bytes().back() == 1);
    }

    TEST_CASE("block hash preimage built by hand") {
        const Block b = test::childBlock(genesisBlock().cHash, 4242, 9, test::edgeId(3));
        std::vector<std::uint8_t> pre;
        test::putHash(pre, b.pHash);
        test::put64(pre, 4242);
        test::put64(pre, b.txnList.size());
        for (const auto& t : b.txnList) {
            std::vector<std::uint8_t> body;
            test::put64(body, static_cast<std::uint64_t>(t.kind));
            test::putNode(body, t.sender);
            test::putNode(body, t.receiver);
            test::put64(body, t.amount);
            test::put64(body, static_cast<std::uint64_t>(t.geo.x));
            test::put64(body, static_cast<std::uint64_t>(t.geo.y));
            test::put64(body, static_cast<std::uint64_t>(t.createdAt));
            CHECK(test::sodiumSha256(body) == t.txnId);
            test::putHash(pre, t.txnId);
            pre.insert(pre.end(), body.begin(), body.end());
        }
        test::putNode(pre, b.creator);
        CHECK(test::sodiumSha256(pre) == b.cHash);
        CHECK(canonicalBlockBody(b) == pre);
    }

    TEST_CASE("genesis golden hash") {
        // Pinned from an independent encoder (Python hashlib over the documented layout).
        CHECK(genesisBlock().cHash.hex() == "a8691ba9760d912a9bfaa741520b9d4616b9b349b3c8f9fcd550601075bfe8c6");
        CHECK(genesisBlock().pHash.isZero());
        CHECK(genesisBlock().txnList.size() == kMinTxnsPerBlock);
        CHECK(blockWellFormed(genesisBlock()));
    }

    TEST_CASE("mutating a transaction changes the block hash") {
        Block b = genesisBlock();
        b.txnList[3].amount += 1;
        CHECK(computeBlockHash(b) != genesisBlock().cHash);
        CHECK_FALSE(blockSelfConsistent(b));
    }

    TEST_CASE("unhashed metadata leaves the block hash alone") {
        Block b = genesisBlock();
        b.rList.push_back(RelocationPointer{test::edgeId(1), hashBytes("r")});
        b.tHash = hashBytes("t");
        b.relocationFlag = true;
        CHECK(computeBlockHash(b) == genesisBlock().cHash);
        CHECK(blockSelfConsistent(b));
    }

    TEST_CASE("empty block cannot be hashed") {
        Block b;
        try {
            (void)computeBlockHash(b);
            FAIL("expected EmptyBlock");
        } catch (const DeanError& e) {
            CHECK(e.code() == ErrorCode::EmptyBlock);
        }
    }

    TEST_CASE("short blocks fail the well-formedness check") {
        Block b = test::childBlock(genesisBlock().cHash, 1, 1, test::edgeId(0));
        b.txnList.pop_back();
        b = sealBlock(std::move(b));
        CHECK(computeBlockHash(b) == b.cHash);
        CHECK_FALSE(blockSelfConsistent(b));
        CHECK_FALSE(blockWellFormed(b));
    }

    TEST_CASE("configuration transactions need an edge sender") {
        const NodeId sensor{hashBytes("s"), NodeKind::Sensor};
        CHECK_FALSE(transactionWellFormed(makeTransaction(TxnKind::Configuration, sensor, test::edgeId(1), 1, {}, 0)));
        CHECK(transactionWellFormed(makeTransaction(TxnKind::Regular, sensor, test::edgeId(1), 1, {}, 0)));
        auto t = makeTransaction(TxnKind::Regular, sensor, test::edgeId(1), 1, {}, 0);
        t.amount = 2;
        CHECK_FALSE(transactionWellFormed(t));
    }

    TEST_CASE("validateChain examples") {
        CHECK(validateChain(std::span<const Block>()).valid);
        auto chain = linkedChain(3);
        CHECK(validateChain(std::span<const Block>(chain)).valid);
        chain[1].txnList[0].amount ^= 1;
        const auto r = validateChain(std::span<const Block>(chain));
        CHECK_FALSE(r.valid);
        REQUIRE(r.firstBadIndex.has_value());
        CHECK(*r.firstBadIndex == 1);
    }

    TEST_CASE("validateChain catches a broken link") {
        auto chain = linkedChain(4);
        chain[2] = test::childBlock(hashBytes("elsewhere"), 2000, 77, test::edgeId(0));
        const auto r = validateChain(std::span<const Block>(chain));
        CHECK_FALSE(r.valid);
        CHECK(r.firstBadIndex.value() == 2);
    }

    TEST_CASE("tamper fuzz: any single mutation is detected at its index") {
        std::mt19937_64 rng(2024);
        const auto clean = linkedChain(8, 5);
        for (int round = 0; round < 400; ++round) {
            auto chain = clean;
            const auto i = static_cast<std::size_t>(rng() % chain.size());
            auto& b = chain[i];
            switch (rng() % 7) {
                case 0: b.txnList[rng() % b.txnList.size()].amount += 1 + rng() % 5; break;
                case 1: b.timestamp += 1; break;
                case 2: b.pHash.bytes[rng() % 32] ^= 0x10; break;
                case 3: b.cHash.bytes[rng() % 32] ^= 0x01; break;
                case 4: b.creator = test::edgeId(100 + rng() % 5); break;
                case 5: b.txnList.erase(b.txnList.begin() + static_cast<long>(rng() % b.txnList.size())); break;
                default: std::swap(b.txnList[0], b.txnList[1 + rng() % (b.txnList.size() - 1)]); break;
            }
            const auto r = validateChain(std::span<const Block>(chain));
            CHECK_FALSE(r.valid);
            CHECK(r.firstBadIndex.value() == i);
        }
    }

    TEST_CASE("atwScore examples") {
        AtwRecord full;
        full.nodeId = test::edgeId(0);
        for (int i = 1; i <= 6; ++i) full.adj.insert(test::edgeId(static_cast<std::uint64_t>(i)));
        full.geoTimer = kGeoSaturationMs;
        full.timestamp = kGeoSaturationMs;
        full.disk = AtwScale{}.diskReferenceSlots;
        CHECK(atwScore(full, AtwWeights{}, 6) == doctest::Approx(1.0));

        AtwRecord empty;
        empty.nodeId = test::edgeId(0);
        CHECK(atwScore(empty, AtwWeights{}, 6) == doctest::Approx(0.0));

        AtwRecord six = empty;
        for (int i = 1; i <= 6; ++i) six.adj.insert(test::edgeId(static_cast<std::uint64_t>(i)));
        CHECK(atwScore(six, AtwWeights{0.4, 0.2, 0.2, 0.2}, 10) == doctest::Approx(0.24));
    }

    TEST_CASE("atwScore rejects malformed weights") {
        AtwRecord r;
        CHECK_THROWS_AS((void)atwScore(r, AtwWeights{0.5, 0.5, 0.5, 0.5}, 4), DeanError);
        CHECK_THROWS_AS((void)atwScore(r, AtwWeights{1.2, -0.2, 0.0, 0.0}, 4), DeanError);
    }

    TEST_CASE("atwScore stays in [0, 1] for out-of-range inputs") {
        std::mt19937_64 rng(3);
        for (int i = 0; i < 200; ++i) {
            AtwRecord r;
            r.timestamp = static_cast<SimMillis>(rng() % (4 * kGeoSaturationMs)) - kGeoSaturationMs;
            r.geoTimer = static_cast<SimMillis>(rng() % (4 * kGeoSaturationMs));
            r.disk = static_cast<std::int64_t>(rng() % 500) - 100;
            for (std::uint64_t k = 0; k < rng() % 12; ++k) r.adj.insert(test::edgeId(k + 1));
            const double s = atwScore(r, AtwWeights{}, 5);
            CHECK(s >= 0.0);
            CHECK(s <= 1.0);
        }
    }

    TEST_CASE("argmax is invariant under positive weight scaling") {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int round = 0; round < 300; ++round) {
            std::vector<AtwRecord> pop(2 + rng() % 8);
            for (std::size_t i = 0; i < pop.size(); ++i) {
                auto& r = pop[i];
                r.nodeId = test::edgeId(i);
                for (std::uint64_t k = 0; k < rng() % pop.size(); ++k) r.adj.insert(test::edgeId(50 + k));
                r.timestamp = static_cast<SimMillis>(rng() % kGeoSaturationMs);
                r.geoTimer = static_cast<SimMillis>(rng() % kGeoSaturationMs);
                r.disk = static_cast<std::int64_t>(rng() % 100);
                if (i > 0 && rng() % 4 == 0) {
                    r = pop[i - 1];
                    r.nodeId = test::edgeId(i);
                }
            }
            AtwWeights w{u(rng), u(rng), u(rng), u(rng)};
            const double total = w.sum();
            w = w.scaled(1.0 / total);
            const auto base = atwArgmax(std::span<const AtwRecord>(pop), w, pop.size() - 1);
            for (double factor : {1e-3, 0.5, 3.0, 1e4}) {
                CHECK(atwArgmax(std::span<const AtwRecord>(pop), w.scaled(factor), pop.size() - 1) == base);
            }
        }
    }

    TEST_CASE("identical maximal records tie") {
        std::vector<AtwRecord> pop(3);
        for (std::size_t i = 0; i < 3; ++i) {
            pop[i].nodeId = test::edgeId(i);
            pop[i].timestamp = 1000;
        }
        pop[2].timestamp = 10;
        const auto top = atwArgmax(std::span<const AtwRecord>(pop), AtwWeights{}, 2);
        CHECK(top.size() == 2);
    }

    TEST_CASE("geo timer restarts outside the radius") {
        AtwRecord r;
        GeoPoint anchor{0, 0};
        r.loc = anchor;
        advanceTimers(r, 5000);
        CHECK(r.geoTimer == 5000);
        moveNode(r, anchor, GeoPoint{kGeoRadiusMeters, 0});
        CHECK(r.geoTimer == 5000);
        moveNode(r, anchor, GeoPoint{kGeoRadiusMeters + 1, 0});
        CHECK(r.geoTimer == 0);
        CHECK(anchor == GeoPoint{kGeoRadiusMeters + 1, 0});
        CHECK(r.timestamp == 5000);
    }

    TEST_CASE("Expected carries a failure code") {
        Expected<int> bad(Failure{ErrorCode::NoSpace, "full"});
        CHECK_FALSE(bad);
        CHECK(bad.code() == ErrorCode::NoSpace);
        CHECK_THROWS_AS((void)bad.value(), DeanError);
        Expected<int> good(3);
        CHECK(good.value() == 3);
        CHECK(errorName(ErrorCode::Unrecoverable) == "Unrecoverable");
    }
}
