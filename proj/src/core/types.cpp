#include "dean/core/types.hpp"

#include "dean/core/codec.hpp"

namespace dean {

Transaction makeTransaction(TxnKind kind, NodeId sender, NodeId receiver, std::uint64_t amount, GeoPoint geo,
                            SimMillis createdAt) {
    Transaction txn{Hash32{}, kind, sender, receiver, amount, geo, createdAt};
    ByteWriter w;
    encodeTransactionBody(w, txn);
    txn.txnId = w.digest();
    return txn;
}

bool transactionWellFormed(const Transaction& txn) {
    if (txn.kind == TxnKind::Configuration && txn.sender.kind != NodeKind::Edge) return false;
    ByteWriter w;
    encodeTransactionBody(w, txn);
    return w.digest() == txn.txnId;
}

void moveNode(AtwRecord& rec, GeoPoint& anchor, GeoPoint to) {
    rec.loc = to;
    if (squaredDistance(anchor, to) > kGeoRadiusMeters * kGeoRadiusMeters) {
        anchor = to;
        rec.geoTimer = 0;
    }
}

void advanceTimers(AtwRecord& rec, SimMillis elapsed) {
    if (elapsed <= 0) return;
    rec.timestamp += elapsed;
    rec.geoTimer += elapsed;
}

}  // namespace dean
