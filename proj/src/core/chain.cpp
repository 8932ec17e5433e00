#include "dean/core/chain.hpp"

#include <algorithm>

#include "dean/core/codec.hpp"
#include "dean/core/error.hpp"

namespace dean {

Hash32 computeBlockHash(const Block& block) {
    if (block.txnList.empty()) throw DeanError(ErrorCode::EmptyBlock, "block has no transactions");
    return hashBytes(canonicalBlockBody(block));
}

Block sealBlock(Block block) {
    block.cHash = computeBlockHash(block);
    return block;
}

bool blockSelfConsistent(const Block& block) {
    if (block.txnList.size() < kMinTxnsPerBlock) return false;
    return computeBlockHash(block) == block.cHash;
}

bool blockWellFormed(const Block& block) {
    if (!blockSelfConsistent(block)) return false;
    return std::all_of(block.txnList.begin(), block.txnList.end(), transactionWellFormed);
}

namespace {

template <class Get>
ValidityReport validateImpl(std::size_t n, Get&& at) {
    for (std::size_t i = 0; i < n; ++i) {
        const Block& b = at(i);
        const bool linked = i == 0 || b.pHash == at(i - 1).cHash;
        if (!linked || !blockSelfConsistent(b)) return ValidityReport{false, i};
    }
    return ValidityReport{};
}

}  // namespace

ValidityReport validateChain(std::span<const Block> chain) {
    return validateImpl(chain.size(), [&](std::size_t i) -> const Block& { return chain[i]; });
}

ValidityReport validateChain(std::span<const BlockRef> chain) {
    return validateImpl(chain.size(), [&](std::size_t i) -> const Block& { return *chain[i]; });
}

NodeId genesisIdentity() { return NodeId{hashBytes("dean/genesis/identity"), NodeKind::Edge}; }

namespace {

Block buildGenesis() {
    const NodeId issuer = genesisIdentity();
    const NodeId sink{hashBytes("dean/genesis/sink"), NodeKind::Edge};
    Block b;
    b.pHash = Hash32::zero();
    b.timestamp = 0;
    b.creator = issuer;
    for (std::uint64_t i = 0; i < kMinTxnsPerBlock; ++i) {
        b.txnList.push_back(makeTransaction(TxnKind::Configuration, issuer, sink, i, GeoPoint{0, 0}, 0));
    }
    return sealBlock(std::move(b));
}

}  // namespace

const Block& genesisBlock() {
    static const Block genesis = buildGenesis();
    return genesis;
}

BlockRef genesisRef() {
    static const BlockRef ref = std::make_shared<const Block>(genesisBlock());
    return ref;
}

}  // namespace dean
