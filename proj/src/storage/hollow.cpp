#include "dean/storage/hollow.hpp"

#include "dean/core/error.hpp"

namespace dean::storage {

HollowBlock hollowOut(const Block& block, std::vector<RelocationPointer> rList) {
    if (rList.empty()) throw DeanError(ErrorCode::Unrecoverable, "hollow block needs at least one pointer");
    return HollowBlock{block.pHash, block.cHash, block.tHash, block.timestamp, block.creator, std::move(rList)};
}

namespace {

struct HashOf {
    const Hash32& operator()(const BlockRef& b) const { return b->cHash; }
    const Hash32& operator()(const HollowBlock& h) const { return h.cHash; }
};

struct ParentOf {
    const Hash32& operator()(const BlockRef& b) const { return b->pHash; }
    const Hash32& operator()(const HollowBlock& h) const { return h.pHash; }
};

}  // namespace

const Hash32& entryHash(const ChainEntry& e) { return std::visit(HashOf{}, e); }
const Hash32& entryParent(const ChainEntry& e) { return std::visit(ParentOf{}, e); }

SimMillis entryTimestamp(const ChainEntry& e) {
    if (const auto* b = std::get_if<BlockRef>(&e)) return (*b)->timestamp;
    return std::get<HollowBlock>(e).timestamp;
}

bool isHollow(const ChainEntry& e) { return std::holds_alternative<HollowBlock>(e); }

const BlockRef& fullBlock(const ChainEntry& e) {
    static const BlockRef none;
    if (const auto* b = std::get_if<BlockRef>(&e)) return *b;
    return none;
}

ValidityReport validateStoredChain(std::span<const ChainEntry> chain) {
    for (std::size_t i = 0; i < chain.size(); ++i) {
        const auto& e = chain[i];
        const bool linked = i == 0 || entryParent(e) == entryHash(chain[i - 1]);
        bool sound = false;
        if (const auto* b = std::get_if<BlockRef>(&e)) {
            sound = *b && blockSelfConsistent(**b);
        } else {
            sound = !std::get<HollowBlock>(e).rList.empty();
        }
        if (!linked || !sound) return ValidityReport{false, i};
    }
    return ValidityReport{};
}

}  // namespace dean::storage
