#include "dean/sim/trace.hpp"

#include <istream>

#include "dean/core/error.hpp"

namespace dean::sim {

using nlohmann::json;

std::string toJsonLine(const TraceRecord& r) {
    // Field order is fixed by hand so the bytes do not depend on the JSON library.
    std::string s;
    s.reserve(200);
    s += "{\"simTime\":";
    s += std::to_string(r.simTime);
    s += ",\"nodeId\":\"";
    s += r.nodeId.hex();
    s += "\",\"eventKind\":\"";
    s += r.eventKind;
    s += "\",\"payloadDigest\":\"";
    s += r.payloadDigest.hex();
    s += "\"}";
    return s;
}

TraceRecord parseTraceLine(const std::string& line) {
    try {
        const json j = json::parse(line);
        TraceRecord r;
        r.simTime = j.at("simTime").get<SimMillis>();
        r.nodeId = NodeId{Hash32::fromHex(j.at("nodeId").get<std::string>()), NodeKind::Edge};
        r.eventKind = j.at("eventKind").get<std::string>();
        r.payloadDigest = Hash32::fromHex(j.at("payloadDigest").get<std::string>());
        return r;
    } catch (const json::exception& e) {
        throw DeanError(ErrorCode::BadFormat, std::string("trace line: ") + e.what());
    }
}

void JsonlTraceWriter::onHeader(const json& header) { *os_ << header.dump() << '\n'; }

void JsonlTraceWriter::onRecord(const TraceRecord& r) { *os_ << toJsonLine(r) << '\n'; }

void DigestTraceSink::absorb(const std::string& line) {
    std::string buf(reinterpret_cast<const char*>(digest_.bytes.data()), digest_.bytes.size());
    buf += line;
    digest_ = hashBytes(buf);
}

void DigestTraceSink::onHeader(const json& header) { absorb(header.dump()); }

void DigestTraceSink::onRecord(const TraceRecord& r) {
    absorb(toJsonLine(r));
    ++records_;
}

void LockExclusivityChecker::onRecord(const TraceRecord& r) {
    if (r.eventKind == "lock") {
        ++locksSeen_;
        auto [it, inserted] = holders_.try_emplace(r.payloadDigest, r.nodeId);
        if (!inserted && it->second != r.nodeId) {
            violations_.push_back("t=" + std::to_string(r.simTime) + " block " + r.payloadDigest.shortHex() +
                                  " locked by " + r.nodeId.shortHex() + " while held by " + it->second.shortHex());
        }
        it->second = r.nodeId;
    } else if (r.eventKind == "release") {
        auto it = holders_.find(r.payloadDigest);
        if (it != holders_.end() && it->second == r.nodeId) holders_.erase(it);
    }
}

void LivenessClassifier::onHeader(const json& header) {
    if (header.contains("edgeCount")) {
        const auto n = header.at("edgeCount").get<std::size_t>();
        quorum_ = n / 2 + 1;
    }
}

void LivenessClassifier::onRecord(const TraceRecord& r) {
    const auto& k = r.eventKind;
    if (k == "persist") {
        blocks_[r.payloadDigest].holders.insert(r.nodeId);
        return;
    }
    if (k == "lock") {
        auto& b = blocks_[r.payloadDigest];
        b.everLocked = true;
        b.requeuedAfterAbort = false;
        if (open_.insert({r.payloadDigest, r.nodeId}).second) ++b.openAttempts;
        return;
    }
    auto close = [&] {
        auto& b = blocks_[r.payloadDigest];
        if (open_.erase({r.payloadDigest, r.nodeId}) && b.openAttempts > 0) --b.openAttempts;
        return std::ref(b);
    };
    if (k == "commit") {
        auto& b = close().get();
        b.commits += 1;
    } else if (k.rfind("abort", 0) == 0 || k == "lease-expired") {
        close();
        ++abortEvents_;
    } else if (k == "commit-lost") {
        close();
    } else if (k == "requeue") {
        blocks_[r.payloadDigest].requeuedAfterAbort = true;
    }
}

LivenessClassifier::Summary LivenessClassifier::summarize() const {
    Summary s;
    s.abortEvents = abortEvents_;
    for (const auto& [hash, b] : blocks_) {
        if (!b.everLocked && b.commits == 0) continue;
        if (b.commits > 1) s.violations.push_back("block " + hash.shortHex() + " committed twice");
        if (b.openAttempts > 0) {
            ++s.partial;
            s.violations.push_back("block " + hash.shortHex() + " has an unresolved mining attempt");
        } else if (b.commits >= 1) {
            ++s.committed;
        } else if (b.requeuedAfterAbort) {
            ++s.aborted;
            if (b.holders.size() >= quorum_) {
                s.violations.push_back("block " + hash.shortHex() + " aborted although a quorum persisted it");
            }
        } else {
            ++s.partial;
            s.violations.push_back("block " + hash.shortHex() + " aborted without requeue");
        }
    }
    return s;
}

void replayTrace(std::istream& is, TraceObserver& observer) {
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            try {
                observer.onHeader(json::parse(line));
            } catch (const json::exception& e) {
                throw DeanError(ErrorCode::BadFormat, std::string("trace header: ") + e.what());
            }
            continue;
        }
        observer.onRecord(parseTraceLine(line));
    }
}

}  // namespace dean::sim
