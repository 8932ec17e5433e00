#include "dean/workload/workload.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <queue>
#include <string>

#include <json.hpp>

#include "dean/core/chain.hpp"
#include "dean/core/error.hpp"
#include "dean/sim/rng.hpp"

namespace dean::workload {

void WorkloadSpec::validate() const {
    auto fail = [](const char* what) { throw DeanError(ErrorCode::BadConfig, what); };
    if (!(txnRatePerSensor > 0) || txnRatePerSensor > 10000) fail("txnRatePerSensor must be in (0, 10000]");
    if (txnsPerBlock < kMinTxnsPerBlock) fail("txnsPerBlock below the block minimum");
    if (keySpace == 0) fail("keySpace must be positive");
    if (!(readWriteMix >= 0 && readWriteMix <= 1)) fail("readWriteMix must be in [0, 1]");
}

std::vector<WorkloadItem> generate(const WorkloadSpec& spec, const sim::Topology& topology) {
    spec.validate();
    std::vector<WorkloadItem> items;
    if (spec.totalTxns == 0 || topology.sensorNodes.empty()) return items;

    sim::Rng rng(spec.seed);
    const double period = 1000.0 / spec.txnRatePerSensor;
    const auto edges = topology.edgeIds();

    struct Next {
        double at;
        std::size_t sensor;
        bool operator>(const Next& o) const { return at != o.at ? at > o.at : sensor > o.sensor; }
    };
    std::priority_queue<Next, std::vector<Next>, std::greater<>> heap;
    for (std::size_t i = 0; i < topology.sensorNodes.size(); ++i) heap.push({rng.uniform() * period, i});

    items.reserve(spec.totalTxns);
    while (items.size() < spec.totalTxns) {
        const Next n = heap.top();
        heap.pop();
        heap.push({n.at + period, n.sensor});
        const auto& sensor = topology.sensorNodes[n.sensor];
        const SimMillis issueAt = spec.startAt + static_cast<SimMillis>(std::floor(n.at));
        const NodeId receiver = edges[rng.uniformInt(0, edges.size() - 1)];
        const std::uint64_t amount = rng.uniformInt(1, 1000);
        WorkloadItem item;
        item.txn = makeTransaction(TxnKind::Regular, sensor.id, receiver, amount, sensor.registration.loc, issueAt);
        item.issueAt = issueAt;
        item.sensor = sensor.id;
        item.key = rng.uniformInt(0, spec.keySpace - 1);
        item.op = rng.bernoulli(spec.readWriteMix) ? Op::Read : Op::Update;
        items.push_back(std::move(item));
    }
    return items;
}

std::optional<Block> assembleBlocks(std::deque<Transaction>& pending, const Hash32& tipHash, const NodeId& creator,
                                    SimMillis now, std::size_t txnsPerBlock) {
    if (txnsPerBlock < kMinTxnsPerBlock) throw DeanError(ErrorCode::BadConfig, "txnsPerBlock below the minimum");
    if (pending.size() < txnsPerBlock) return std::nullopt;
    Block b;
    b.pHash = tipHash;
    b.timestamp = now;
    b.creator = creator;
    b.txnList.assign(pending.begin(), pending.begin() + static_cast<std::ptrdiff_t>(txnsPerBlock));
    pending.erase(pending.begin(), pending.begin() + static_cast<std::ptrdiff_t>(txnsPerBlock));
    return sealBlock(std::move(b));
}

namespace {

using nlohmann::json;

json nodeJson(const NodeId& id) { return json{{"digest", id.hex()}, {"kind", static_cast<int>(id.kind)}}; }

NodeId nodeFrom(const json& j) {
    const int kind = j.at("kind").get<int>();
    if (kind != 0 && kind != 1) throw DeanError(ErrorCode::BadFormat, "node kind must be 0 or 1");
    return NodeId{Hash32::fromHex(j.at("digest").get<std::string>()), static_cast<NodeKind>(kind)};
}

}  // namespace

void writeReplay(std::ostream& os, const std::vector<WorkloadItem>& items) {
    for (const auto& it : items) {
        const auto& t = it.txn;
        json j{{"txnId", t.txnId.hex()},
               {"kind", static_cast<int>(t.kind)},
               {"sender", nodeJson(t.sender)},
               {"receiver", nodeJson(t.receiver)},
               {"amount", t.amount},
               {"geo", {t.geo.x, t.geo.y}},
               {"createdAt", t.createdAt},
               {"issueAt", it.issueAt},
               {"sensor", nodeJson(it.sensor)},
               {"key", it.key},
               {"op", it.op == Op::Read ? "read" : "update"}};
        os << j.dump() << '\n';
    }
}

std::vector<WorkloadItem> readReplay(std::istream& is) {
    std::vector<WorkloadItem> items;
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(is, line)) {
        ++lineNo;
        if (line.empty()) continue;
        try {
            const json j = json::parse(line);
            WorkloadItem it;
            const int kind = j.at("kind").get<int>();
            if (kind != 0 && kind != 1) throw DeanError(ErrorCode::BadFormat, "txn kind must be 0 or 1");
            const auto& geo = j.at("geo");
            it.txn = makeTransaction(static_cast<TxnKind>(kind), nodeFrom(j.at("sender")), nodeFrom(j.at("receiver")),
                                     j.at("amount").get<std::uint64_t>(),
                                     GeoPoint{geo.at(0).get<std::int64_t>(), geo.at(1).get<std::int64_t>()},
                                     j.at("createdAt").get<SimMillis>());
            if (it.txn.txnId != Hash32::fromHex(j.at("txnId").get<std::string>()))
                throw DeanError(ErrorCode::BadFormat, "txnId does not match the transaction body");
            it.issueAt = j.at("issueAt").get<SimMillis>();
            it.sensor = nodeFrom(j.at("sensor"));
            it.key = j.at("key").get<std::uint64_t>();
            const auto op = j.at("op").get<std::string>();
            if (op != "read" && op != "update") throw DeanError(ErrorCode::BadFormat, "op must be read or update");
            it.op = op == "read" ? Op::Read : Op::Update;
            items.push_back(std::move(it));
        } catch (const json::exception& e) {
            throw DeanError(ErrorCode::BadFormat, "replay line " + std::to_string(lineNo) + ": " + e.what());
        }
    }
    return items;
}

}  // namespace dean::workload
