#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "dean/core/types.hpp"

namespace dean::consensus {

struct LockEntry {
    NodeId holder;
    SimMillis since = 0;
    std::uint64_t epoch = 0;
};

/// Simulator-scoped block lock table. Events are processed one at a time in a total
/// order, so the first acquire to be processed wins.
class LockRegistry {
public:
    struct Attempt {
        bool granted = false;
        /// The new lock when granted, otherwise the existing one.
        LockEntry entry;
    };

    Attempt tryAcquire(const Hash32& cHash, const NodeId& requester, SimMillis now);

    /// Releases only if `holder` still holds the lock with `epoch`.
    bool release(const Hash32& cHash, const NodeId& holder, std::uint64_t epoch);

    std::optional<LockEntry> holderOf(const Hash32& cHash) const;
    std::vector<std::pair<Hash32, LockEntry>> heldBy(const NodeId& node) const;
    std::size_t size() const { return locks_.size(); }

private:
    std::map<Hash32, LockEntry> locks_;
    std::uint64_t nextEpoch_ = 1;
};

}  // namespace dean::consensus
