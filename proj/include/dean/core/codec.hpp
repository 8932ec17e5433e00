#pragma once

// Canonical byte layout used for every hash in the protocol:
//   - integers (including enums and signed values) as 8-byte big-endian two's complement
//   - hashes as their raw 32 bytes
//   - NodeId as digest (32 raw bytes) followed by kind (8-byte integer)
//   - GeoPoint as x then y (8-byte integers, meters)
//   - lists as an 8-byte big-endian element count followed by the elements
// Fields are written in declaration order. docs/canonical-encoding.md carries the
// same table with a worked example; the two must stay in sync.

#include <cstdint>
#include <span>
#include <vector>

#include "dean/core/types.hpp"

namespace dean {

class ByteWriter {
public:
    void u64(std::uint64_t v);
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void hash(const Hash32& h);
    void nodeId(const NodeId& id);
    void geo(GeoPoint p);
    void count(std::size_t n) { u64(static_cast<std::uint64_t>(n)); }
    void raw(std::span<const std::uint8_t> bytes);

    const std::vector<std::uint8_t>& bytes() const { return buf_; }
    Hash32 digest() const { return hashBytes(buf_); }

private:
    std::vector<std::uint8_t> buf_;
};

/// Every transaction field except txnId (the preimage of txnId).
void encodeTransactionBody(ByteWriter& w, const Transaction& txn);
/// txnId followed by the body.
void encodeTransaction(ByteWriter& w, const Transaction& txn);

/// pHash, timestamp, txnList, creator: the preimage of cHash.
std::vector<std::uint8_t> canonicalBlockBody(const Block& block);

}  // namespace dean
