#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "dean/core/chain.hpp"
#include "dean/core/types.hpp"

namespace dean::storage {

/// Header of a block whose payload was handed to other nodes. Chain links still
/// validate on the preserved hashes; the payload comes back through rList.
struct HollowBlock {
    Hash32 pHash;
    Hash32 cHash;
    Hash32 tHash;
    SimMillis timestamp = 0;
    NodeId creator;
    std::vector<RelocationPointer> rList;

    static constexpr bool payloadErased = true;
    bool operator==(const HollowBlock&) const = default;
};

/// Throws DeanError(Unrecoverable) when rList is empty: a hollow block without a
/// pointer could never be recovered.
HollowBlock hollowOut(const Block& block, std::vector<RelocationPointer> rList);

/// One slot of a node's chain: either the full block or its hollow header.
using ChainEntry = std::variant<BlockRef, HollowBlock>;

const Hash32& entryHash(const ChainEntry& e);
const Hash32& entryParent(const ChainEntry& e);
SimMillis entryTimestamp(const ChainEntry& e);
bool isHollow(const ChainEntry& e);
/// Null for hollow entries.
const BlockRef& fullBlock(const ChainEntry& e);

/// validateChain over mixed entries: full blocks are checked completely, hollow ones on
/// their header links (and must carry at least one pointer).
ValidityReport validateStoredChain(std::span<const ChainEntry> chain);

/// Block-slot accounting. Hollow headers occupy no payload slot.
struct DiskGauge {
    std::int64_t capacity = 0;
    std::int64_t used = 0;

    std::int64_t free() const { return capacity - used; }
    /// Occupancy at or above 51% of capacity, in exact integer arithmetic.
    bool overThreshold() const { return used * 100 >= 51 * capacity; }
    static bool overThreshold(std::int64_t used, std::int64_t capacity) { return used * 100 >= 51 * capacity; }
};

}  // namespace dean::storage
