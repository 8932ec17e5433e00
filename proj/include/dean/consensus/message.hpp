#pragma once

#include <memory>
#include <string_view>
#include <variant>
#include <vector>

#include "dean/core/error.hpp"
#include "dean/core/types.hpp"

namespace dean::consensus {

enum class MessageKind : std::uint8_t {
    BlockProposal,
    ValidationDecision,
    AtwShare,
    JoinRequest,
    JoinChallenge,
    JoinResult,
    LeaderBroadcast,
    RelocateBlock,
    RelocateAck,
    RecoveryRequest,
    RecoveryReply,
    FaultyAnnouncement,
    TxnSubmit,
};

std::string_view messageKindName(MessageKind kind);

/// How a proposed block reached the receiver.
enum class ProposalMode : std::uint8_t {
    /// Build-network phase: every edge validates and shares its decision.
    Bootstrap,
    /// The network queue offering a block to a leader for mining.
    Offer,
    /// A leader replicating a validated block to its adjacency.
    Replicate,
};

struct BlockProposal {
    BlockRef block;
    ProposalMode mode = ProposalMode::Bootstrap;
    Hash32 tHash;
};

/// Verdict on one block, identified by cHash only (receivers already saw the block).
struct ValidationDecision {
    Hash32 cHash;
    bool verdict = false;
    /// True for a replica's answer to a leader, false for a build-network decision.
    bool replicaAck = false;
};

struct AtwShare {
    std::shared_ptr<const AtwRecord> record;
};

/// What a node registered with; its digest is the node's public identity.
struct Registration {
    NodeKind kind = NodeKind::Edge;
    std::uint64_t serial = 0;
    GeoPoint loc;
    SimMillis deployedAt = 0;
    std::uint64_t salt = 0;
};

NodeId identityOf(const Registration& reg);

struct JoinRequest {
    NodeId candidate;
    Registration registration;
    /// Escrowed joining fee in half-coins.
    std::int64_t feeHalfCoins = 0;
};

struct JoinChallenge {
    BlockRef block;
};

struct JoinResult {
    Hash32 cHash;
    bool verdict = false;
};

enum class BroadcastKind : std::uint8_t { LeaderElected, LeaderStepDown, NodeApproved };

struct LeaderBroadcast {
    BroadcastKind kind = BroadcastKind::LeaderElected;
    NodeId subject;
    /// Only on the copy sent to a freshly approved node: the leader's chain and membership.
    std::vector<BlockRef> chainSnapshot;
    std::vector<NodeId> members;
};

struct RelocateBlock {
    BlockRef block;
};

struct RelocateAck {
    Hash32 cHash;
    NodeId holder;
    Hash32 relocatedHash;
    SimMillis receivedAt = 0;
    bool accepted = false;
    ErrorCode reason = ErrorCode::NoSpace;
};

struct RecoveryRequest {
    Hash32 cHash;
};

struct RecoveryReply {
    Hash32 cHash;
    /// Null when the holder has nothing for that hash.
    BlockRef block;
};

struct FaultyAnnouncement {
    NodeId subject;
};

struct TxnSubmit {
    Transaction txn;
};

using Payload = std::variant<BlockProposal, ValidationDecision, AtwShare, JoinRequest, JoinChallenge, JoinResult,
                             LeaderBroadcast, RelocateBlock, RelocateAck, RecoveryRequest, RecoveryReply,
                             FaultyAnnouncement, TxnSubmit>;

struct Message {
    NodeId from;
    NodeId to;
    Payload payload;
    SimMillis sentAt = 0;

    MessageKind kind() const { return static_cast<MessageKind>(payload.index()); }
};

/// Digest of a message's identifying content: kind, endpoints, send time and a
/// kind-specific key (block hash, subject, record summary).
Hash32 payloadDigest(const Message& msg);

}  // namespace dean::consensus
