#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "dean/core/types.hpp"

namespace dean {

/// cHash over (pHash, timestamp, txnList, creator). rList, tHash and relocationFlag are
/// deliberately outside the preimage. Throws DeanError(EmptyBlock) for an empty txnList.
Hash32 computeBlockHash(const Block& block);

/// Returns `block` with cHash filled in.
Block sealBlock(Block block);

/// True when the stored cHash matches the content and the block carries enough transactions.
bool blockSelfConsistent(const Block& block);

/// blockSelfConsistent plus per-transaction structural checks.
bool blockWellFormed(const Block& block);

struct ValidityReport {
    bool valid = true;
    std::optional<std::size_t> firstBadIndex;
};

/// Links, hashes and minimum transaction counts over a whole chain. The hash and
/// length checks apply to every index; the link check to every index after the first.
ValidityReport validateChain(std::span<const Block> chain);
ValidityReport validateChain(std::span<const BlockRef> chain);

/// The fixed genesis block every node starts from: twelve seed transactions between two
/// well-known identities, timestamp 0, pHash all zeros.
const Block& genesisBlock();
BlockRef genesisRef();
NodeId genesisIdentity();

}  // namespace dean
