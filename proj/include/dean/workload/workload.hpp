#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <vector>

#include "dean/core/types.hpp"
#include "dean/sim/topology.hpp"

namespace dean::workload {

struct WorkloadSpec {
    /// Desk-scale default.
    std::uint64_t totalTxns = 28000;
    /// Per sensor, per simulated second.
    double txnRatePerSensor = 1.0;
    std::size_t txnsPerBlock = kMinTxnsPerBlock;
    std::uint64_t keySpace = 10000;
    /// Fraction of reads; the rest are updates.
    double readWriteMix = 0.5;
    std::uint64_t seed = 1;
    /// Nothing is issued before this time (lets the network bootstrap first).
    SimMillis startAt = 0;

    /// Throws DeanError(BadConfig) on a rate outside (0, 10000], a block size under the
    /// minimum, an empty key space or a mix outside [0, 1].
    void validate() const;
};

enum class Op : std::uint8_t { Read, Update };

/// One YCSB-style request. The key and operation ride alongside the transaction; the
/// ledger only sees the transaction itself.
struct WorkloadItem {
    Transaction txn;
    SimMillis issueAt = 0;
    NodeId sensor;
    std::uint64_t key = 0;
    Op op = Op::Read;
};

/// Deterministic stream ordered by issue time. Sensor i issues every 1000/rate ms from a
/// seeded phase; receivers are uniform over edge nodes, amounts uniform in [1, 1000].
std::vector<WorkloadItem> generate(const WorkloadSpec& spec, const sim::Topology& topology);

/// Packs the first txnsPerBlock pending transactions (FIFO) into a sealed block on top of
/// tipHash. Nothing happens while fewer are pending.
std::optional<Block> assembleBlocks(std::deque<Transaction>& pending, const Hash32& tipHash, const NodeId& creator,
                                    SimMillis now, std::size_t txnsPerBlock = kMinTxnsPerBlock);

/// JSONL replay file: one object per item, hashes and ids in hex.
void writeReplay(std::ostream& os, const std::vector<WorkloadItem>& items);
/// Throws DeanError(BadFormat) on malformed lines or a txnId that does not match its body.
std::vector<WorkloadItem> readReplay(std::istream& is);

}  // namespace dean::workload
