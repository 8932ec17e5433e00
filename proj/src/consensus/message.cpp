#include "dean/consensus/message.hpp"

#include "dean/core/codec.hpp"

namespace dean::consensus {

std::string_view messageKindName(MessageKind kind) {
    switch (kind) {
        case MessageKind::BlockProposal: return "BlockProposal";
        case MessageKind::ValidationDecision: return "ValidationDecision";
        case MessageKind::AtwShare: return "AtwShare";
        case MessageKind::JoinRequest: return "JoinRequest";
        case MessageKind::JoinChallenge: return "JoinChallenge";
        case MessageKind::JoinResult: return "JoinResult";
        case MessageKind::LeaderBroadcast: return "LeaderBroadcast";
        case MessageKind::RelocateBlock: return "RelocateBlock";
        case MessageKind::RelocateAck: return "RelocateAck";
        case MessageKind::RecoveryRequest: return "RecoveryRequest";
        case MessageKind::RecoveryReply: return "RecoveryReply";
        case MessageKind::FaultyAnnouncement: return "FaultyAnnouncement";
        case MessageKind::TxnSubmit: return "TxnSubmit";
    }
    return "?";
}

NodeId identityOf(const Registration& reg) {
    ByteWriter w;
    w.u64(static_cast<std::uint64_t>(reg.kind));
    w.u64(reg.serial);
    w.geo(reg.loc);
    w.i64(reg.deployedAt);
    w.u64(reg.salt);
    return NodeId{w.digest(), reg.kind};
}

namespace {

void keyOf(ByteWriter& w, const BlockProposal& p) {
    w.hash(p.block ? p.block->cHash : Hash32{});
    w.u64(static_cast<std::uint64_t>(p.mode));
    w.hash(p.tHash);
}
void keyOf(ByteWriter& w, const ValidationDecision& d) {
    w.hash(d.cHash);
    w.u64(d.verdict ? 1 : 0);
    w.u64(d.replicaAck ? 1 : 0);
}
void keyOf(ByteWriter& w, const AtwShare& s) {
    if (!s.record) return;
    const auto& r = *s.record;
    w.nodeId(r.nodeId);
    w.i64(r.timestamp);
    w.i64(r.geoTimer);
    w.geo(r.loc);
    w.count(r.adj.size());
    w.u64(r.mList);
    w.u64(r.bList);
    w.i64(r.disk);
}
void keyOf(ByteWriter& w, const JoinRequest& j) {
    w.nodeId(j.candidate);
    w.i64(j.feeHalfCoins);
}
void keyOf(ByteWriter& w, const JoinChallenge& c) { w.hash(c.block ? c.block->cHash : Hash32{}); }
void keyOf(ByteWriter& w, const JoinResult& r) {
    w.hash(r.cHash);
    w.u64(r.verdict ? 1 : 0);
}
void keyOf(ByteWriter& w, const LeaderBroadcast& b) {
    w.u64(static_cast<std::uint64_t>(b.kind));
    w.nodeId(b.subject);
    w.count(b.chainSnapshot.size());
    w.count(b.members.size());
}
void keyOf(ByteWriter& w, const RelocateBlock& r) { w.hash(r.block ? r.block->cHash : Hash32{}); }
void keyOf(ByteWriter& w, const RelocateAck& a) {
    w.hash(a.cHash);
    w.nodeId(a.holder);
    w.hash(a.relocatedHash);
    w.i64(a.receivedAt);
    w.u64(a.accepted ? 1 : 0);
}
void keyOf(ByteWriter& w, const RecoveryRequest& r) { w.hash(r.cHash); }
void keyOf(ByteWriter& w, const RecoveryReply& r) {
    w.hash(r.cHash);
    w.u64(r.block ? 1 : 0);
}
void keyOf(ByteWriter& w, const FaultyAnnouncement& f) { w.nodeId(f.subject); }
void keyOf(ByteWriter& w, const TxnSubmit& t) { w.hash(t.txn.txnId); }

}  // namespace

Hash32 payloadDigest(const Message& msg) {
    ByteWriter w;
    w.u64(static_cast<std::uint64_t>(msg.kind()));
    w.nodeId(msg.from);
    w.nodeId(msg.to);
    w.i64(msg.sentAt);
    std::visit([&](const auto& p) { keyOf(w, p); }, msg.payload);
    return w.digest();
}

}  // namespace dean::consensus
