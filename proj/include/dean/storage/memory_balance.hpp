#pragma once

#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "dean/consensus/protocol.hpp"
#include "dean/storage/hollow.hpp"

namespace dean::storage {

using consensus::Context;
using consensus::NodeState;
using consensus::Outbox;
using consensus::Transfer;

/// What a node knows about a neighbour when choosing where to send a block.
struct NeighborInfo {
    DiskGauge gauge;
    GeoPoint loc;
};

/// Neighbour view built from the node's gossip table: non-faulty adjacency peers, free
/// slots reduced by the relocations already on their way to each of them.
std::map<NodeId, NeighborInfo> neighborsFromGossip(const NodeState& state);

struct Relocation {
    Hash32 cHash;
    NodeId holder;
};

/// Full chain blocks, oldest first, paired with the nearest neighbour that has a free
/// slot and is not already in the block's rList. Blocks already on their way somewhere
/// and the tip (the next block's parent) are skipped. Stops once projected occupancy
/// drops below 51%. NoEligibleNeighbor if the trigger holds but nothing can move.
Expected<std::vector<Relocation>> planDissemination(const NodeState& state,
                                                    const std::map<NodeId, NeighborInfo>& neighbors);

/// Executes the plan: flags each copy for a side chain and sends RelocateBlock. Returns
/// the number of blocks sent; 0 when below the trigger. On NoEligibleNeighbor the state is
/// unchanged and a capacity-alarm note is written.
Expected<std::size_t> disseminateOldest(NodeState& state, const std::map<NodeId, NeighborInfo>& neighbors,
                                        SimMillis now, Outbox& out);

/// Runs dissemination against the gossip view when the node is over the trigger.
void maybeDisseminate(NodeState& state, Context& ctx, Outbox& out);

/// hash(cHash || holder || receivedAt).
Hash32 computeRelocatedHash(const Hash32& cHash, const NodeId& holder, SimMillis receivedAt);

/// Holder side: stores a relocated block in the side chain and returns the ack.
/// NotRelocation, DuplicateSideBlock, BadSourceHash or NoSpace otherwise.
Expected<consensus::RelocateAck> receiveRelocatedBlock(NodeState& holder, const BlockRef& block,
                                                       const NodeId& source, SimMillis now);

/// Sender side: checks the ack, keeps the pointer and hollows the block out. The returned
/// transfer (half a coin to the holder) is empty when the sender cannot pay.
/// BadAck leaves the block full.
Expected<std::optional<Transfer>> finalizeDissemination(NodeState& sender, const consensus::RelocateAck& ack,
                                                        const NodeId& holder);

/// Moves half-coins between two nodes; both balances change in one step.
void applyTransfer(NodeState& from, NodeState& to, const Transfer& t);

/// Looks a block up by cHash in the chain (full entries) or the side chain.
BlockRef findStoredBlock(const NodeState& state, const Hash32& cHash);

/// Fetches a stored block from a holder. Null when the holder is unreachable or lacks it.
using BlockFetcher = std::function<BlockRef(const NodeId& holder, const Hash32& cHash)>;

/// Synchronous recovery: rList holders are asked in order and the first reply that
/// re-hashes to cHash wins. The result carries the original body with empty metadata.
/// Unrecoverable if the requester holds no hollow entry for cHash or no holder delivers.
Expected<Block> recoverBlock(const NodeState& requester, const Hash32& cHash, const BlockFetcher& fetch);

// Message-driven fetches, used for hollow parents and for catching up on missed blocks.

void startFetch(NodeState& state, const Hash32& cHash, consensus::RecoverySession::Purpose purpose,
                std::vector<NodeId> targets, Context& ctx, Outbox& out);
void onRecoveryRequest(NodeState& holder, const NodeId& from, const consensus::RecoveryRequest& req, Context& ctx,
                       Outbox& out);
void onRecoveryReply(NodeState& state, const NodeId& from, const consensus::RecoveryReply& reply, Context& ctx,
                     Outbox& out);
void onFetchDeadline(NodeState& state, std::uint64_t token, Context& ctx, Outbox& out);

void onRelocateBlock(NodeState& holder, const NodeId& from, const consensus::RelocateBlock& msg, Context& ctx,
                     Outbox& out);
void onRelocateAck(NodeState& sender, const NodeId& from, const consensus::RelocateAck& ack, Context& ctx,
                   Outbox& out);

}  // namespace dean::storage
