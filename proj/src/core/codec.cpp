#include "dean/core/codec.hpp"

namespace dean {

void ByteWriter::u64(std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) buf_.push_back(static_cast<std::uint8_t>(v >> shift));
}

void ByteWriter::hash(const Hash32& h) { buf_.insert(buf_.end(), h.bytes.begin(), h.bytes.end()); }

void ByteWriter::nodeId(const NodeId& id) {
    hash(id.digest);
    u64(static_cast<std::uint64_t>(id.kind));
}

void ByteWriter::geo(GeoPoint p) {
    i64(p.x);
    i64(p.y);
}

void ByteWriter::raw(std::span<const std::uint8_t> bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }

void encodeTransactionBody(ByteWriter& w, const Transaction& txn) {
    w.u64(static_cast<std::uint64_t>(txn.kind));
    w.nodeId(txn.sender);
    w.nodeId(txn.receiver);
    w.u64(txn.amount);
    w.geo(txn.geo);
    w.i64(txn.createdAt);
}

void encodeTransaction(ByteWriter& w, const Transaction& txn) {
    w.hash(txn.txnId);
    encodeTransactionBody(w, txn);
}

std::vector<std::uint8_t> canonicalBlockBody(const Block& block) {
    ByteWriter w;
    w.hash(block.pHash);
    w.i64(block.timestamp);
    w.count(block.txnList.size());
    for (const auto& txn : block.txnList) encodeTransaction(w, txn);
    w.nodeId(block.creator);
    return w.bytes();
}

}  // namespace dean
