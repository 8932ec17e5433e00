#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dean/core/types.hpp"

namespace dean::sim {

inline constexpr const char* kTraceSchema = "dean-trace/1";

/// One processed event or one protocol note.
struct TraceRecord {
    SimMillis simTime = 0;
    NodeId nodeId;
    std::string eventKind;
    Hash32 payloadDigest;

    bool operator==(const TraceRecord&) const = default;
};

std::string toJsonLine(const TraceRecord& r);
/// Throws DeanError(BadFormat).
TraceRecord parseTraceLine(const std::string& line);

/// Streaming consumer of a trace. Observers are value types so that a world snapshot can
/// carry copies of them.
class TraceObserver {
public:
    virtual ~TraceObserver() = default;
    virtual void onHeader(const nlohmann::json& header) { (void)header; }
    virtual void onRecord(const TraceRecord& r) = 0;
    virtual std::shared_ptr<TraceObserver> clone() const = 0;
};

class JsonlTraceWriter : public TraceObserver {
public:
    explicit JsonlTraceWriter(std::shared_ptr<std::ostream> os) : os_(std::move(os)) {}
    void onHeader(const nlohmann::json& header) override;
    void onRecord(const TraceRecord& r) override;
    /// Clones share the stream; forked worlds must install their own writer.
    std::shared_ptr<TraceObserver> clone() const override { return std::make_shared<JsonlTraceWriter>(*this); }

private:
    std::shared_ptr<std::ostream> os_;
};

/// Keeps only a running digest of the JSONL bytes the full trace would contain.
class DigestTraceSink : public TraceObserver {
public:
    void onHeader(const nlohmann::json& header) override;
    void onRecord(const TraceRecord& r) override;
    std::shared_ptr<TraceObserver> clone() const override { return std::make_shared<DigestTraceSink>(*this); }

    const Hash32& digest() const { return digest_; }
    std::uint64_t records() const { return records_; }

private:
    void absorb(const std::string& line);
    Hash32 digest_;
    std::uint64_t records_ = 0;
};

class MemoryTrace : public TraceObserver {
public:
    void onHeader(const nlohmann::json& header) override { header_ = header; }
    void onRecord(const TraceRecord& r) override { records_.push_back(r); }
    std::shared_ptr<TraceObserver> clone() const override { return std::make_shared<MemoryTrace>(*this); }

    const nlohmann::json& header() const { return header_; }
    const std::vector<TraceRecord>& records() const { return records_; }

private:
    nlohmann::json header_;
    std::vector<TraceRecord> records_;
};

/// At every instant each block hash is locked by at most one node. Reads "lock" and
/// "release" notes.
class LockExclusivityChecker : public TraceObserver {
public:
    void onRecord(const TraceRecord& r) override;
    std::shared_ptr<TraceObserver> clone() const override { return std::make_shared<LockExclusivityChecker>(*this); }

    std::uint64_t locksSeen() const { return locksSeen_; }
    const std::vector<std::string>& violations() const { return violations_; }
    bool ok() const { return violations_.empty(); }

private:
    std::map<Hash32, NodeId> holders_;
    std::uint64_t locksSeen_ = 0;
    std::vector<std::string> violations_;
};

/// Classifies every block that entered mining as committed or aborted-and-requeued.
/// Flags: attempts still open at the end (partial), blocks committed twice, and blocks
/// left aborted although a quorum (from the header's edgeCount) persisted them.
class LivenessClassifier : public TraceObserver {
public:
    struct Summary {
        std::uint64_t committed = 0;
        std::uint64_t aborted = 0;
        std::uint64_t partial = 0;
        std::uint64_t abortEvents = 0;
        std::vector<std::string> violations;
        bool ok() const { return violations.empty() && partial == 0; }
    };

    void onHeader(const nlohmann::json& header) override;
    void onRecord(const TraceRecord& r) override;
    std::shared_ptr<TraceObserver> clone() const override { return std::make_shared<LivenessClassifier>(*this); }

    void setQuorum(std::size_t q) { quorum_ = q; }
    Summary summarize() const;

private:
    struct BlockStatus {
        std::uint64_t commits = 0;
        std::uint64_t openAttempts = 0;
        bool requeuedAfterAbort = false;
        bool everLocked = false;
        std::set<NodeId> holders;
    };
    std::size_t quorum_ = 1;
    std::map<Hash32, BlockStatus> blocks_;
    std::set<std::pair<Hash32, NodeId>> open_;
    std::uint64_t abortEvents_ = 0;
};

/// Reads a whole JSONL trace (header first) into an observer.
void replayTrace(std::istream& is, TraceObserver& observer);

}  // namespace dean::sim
