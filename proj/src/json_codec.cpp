#include "pocket/json_codec.hpp"
#include "pocket/errors.hpp"

using nlohmann::json;

namespace pocket {

json to_json(const TelemetryRecord& r) {
    return {{"timestamp", r.timestamp}, {"src", r.src.to_string()},   {"dst", r.dst.to_string()},
            {"host", r.host},           {"direction", to_string(r.direction)},
            {"bytes", r.bytes},         {"protocol", r.protocol},    {"kind", to_string(r.kind)}};
}

TelemetryRecord record_from_json(const json& j) {
    TelemetryRecord r;
    r.timestamp = j.at("timestamp").get<double>();
    auto src = Endpoint::parse(j.at("src").get<std::string>());
    auto dst = Endpoint::parse(j.at("dst").get<std::string>());
    if (!src || !dst) throw ValidationError("record: invalid endpoint text");
    r.src = *src;
    r.dst = *dst;
    r.host = j.at("host").get<std::string>();
    auto dir = direction_from_string(j.at("direction").get<std::string>());
    auto kind = record_kind_from_string(j.at("kind").get<std::string>());
    if (!dir || !kind) throw ValidationError("record: invalid direction or kind");
    r.direction = *dir;
    r.kind = *kind;
    r.bytes = j.at("bytes").get<uint64_t>();
    r.protocol = j.at("protocol").get<std::string>();
    return r;
}

json to_json(const Query& q) {
    return {{"kind", to_string(q.kind)}, {"params", q.params}, {"limit", q.limit}};
}

json to_json(const QueryResult& qr) {
    json records = json::array();
    for (const auto& r : qr.records) records.push_back(to_json(r));
    return {{"query", to_json(qr.query)},
            {"limit_applied", qr.limit_applied},
            {"at", qr.at},
            {"records", records}};
}

json to_json(const TelemetrySlice& slice) {
    json queries = json::array();
    for (const auto& qr : slice.queries_issued) queries.push_back(to_json(qr));
    return {{"queries_issued", queries}, {"budget_remaining", slice.budget_remaining}};
}

json to_json(const Trigger& t) {
    return {{"trigger_class", t.trigger_class},
            {"raised_at", t.raised_at},
            {"payload", t.payload},
            {"source_detector", t.source_detector}};
}

json to_json(const BlockEntry& b) {
    return {{"endpoint", b.endpoint.to_string()}, {"scope", b.scope}, {"applied_at", b.applied_at}};
}

json to_json(const ImpactRecord& impact) {
    json blocks = json::array();
    for (const auto& b : impact.blocks) blocks.push_back(to_json(b));
    return {{"infected_hosts", {{"count", impact.infected_hosts}, {"list", impact.infected}}},
            {"exfiltrated_files", {{"count", impact.exfiltrated_files}, {"list", impact.exfiltrated}}},
            {"blocks", blocks},
            {"contained", impact.contained}};
}

json to_json(const BackendTurn& turn) {
    json j;
    j["kind"] = turn.kind == BackendTurn::Kind::query_request ? "query_request" : "final_text";
    j["query"] = turn.query ? to_json(*turn.query) : json(nullptr);
    j["text"] = turn.text;
    j["latency_s"] = turn.latency_s;
    return j;
}

json to_json(const TranscriptEntry& entry) {
    return {{"sent", entry.sent}, {"turn", to_json(entry.turn)}, {"at", entry.at}};
}

json to_json(const SessionTranscript& transcript) {
    json turns = json::array();
    for (const auto& t : transcript.turns) turns.push_back(to_json(t));
    return {{"first_prompt_time", transcript.first_prompt_time},
            {"final_time", transcript.final_time},
            {"report_attempts", transcript.report_attempts},
            {"turns", turns}};
}

std::string results_message(const std::vector<TelemetryRecord>& records, uint32_t budget_remaining) {
    json j;
    json arr = json::array();
    for (const auto& r : records) arr.push_back(to_json(r));
    j["results"] = arr;
    j["budget_remaining"] = budget_remaining;
    return j.dump();
}

} // namespace pocket
