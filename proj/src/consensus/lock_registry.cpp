#include "dean/consensus/lock_registry.hpp"

namespace dean::consensus {

LockRegistry::Attempt LockRegistry::tryAcquire(const Hash32& cHash, const NodeId& requester, SimMillis now) {
    auto [it, inserted] = locks_.try_emplace(cHash, LockEntry{requester, now, nextEpoch_});
    if (inserted) ++nextEpoch_;
    return Attempt{inserted, it->second};
}

bool LockRegistry::release(const Hash32& cHash, const NodeId& holder, std::uint64_t epoch) {
    auto it = locks_.find(cHash);
    if (it == locks_.end() || it->second.holder != holder || it->second.epoch != epoch) return false;
    locks_.erase(it);
    return true;
}

std::optional<LockEntry> LockRegistry::holderOf(const Hash32& cHash) const {
    auto it = locks_.find(cHash);
    if (it == locks_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::pair<Hash32, LockEntry>> LockRegistry::heldBy(const NodeId& node) const {
    std::vector<std::pair<Hash32, LockEntry>> out;
    for (const auto& [hash, entry] : locks_) {
        if (entry.holder == node) out.emplace_back(hash, entry);
    }
    return out;
}

}  // namespace dean::consensus
