#include "pocket/telemetry.hpp"

#include <algorithm>

namespace pocket {

std::string to_string(Direction d) {
    switch (d) {
        case Direction::inbound: return "inbound";
        case Direction::outbound: return "outbound";
        case Direction::lateral: return "lateral";
    }
    return "unknown";
}

std::string to_string(RecordKind k) {
    switch (k) {
        case RecordKind::flow: return "flow";
        case RecordKind::alert: return "alert";
        case RecordKind::file_event: return "file_event";
    }
    return "unknown";
}

std::optional<Direction> direction_from_string(const std::string& s) {
    if (s == "inbound") return Direction::inbound;
    if (s == "outbound") return Direction::outbound;
    if (s == "lateral") return Direction::lateral;
    return std::nullopt;
}

std::optional<RecordKind> record_kind_from_string(const std::string& s) {
    if (s == "flow") return RecordKind::flow;
    if (s == "alert") return RecordKind::alert;
    if (s == "file_event") return RecordKind::file_event;
    return std::nullopt;
}

std::string to_string(QueryKind k) {
    switch (k) {
        case QueryKind::flows_by_host: return "flows_by_host";
        case QueryKind::flows_to_endpoint: return "flows_to_endpoint";
        case QueryKind::alerts_by_class: return "alerts_by_class";
        case QueryKind::outbound_volume_by_host: return "outbound_volume_by_host";
    }
    return "unknown";
}

std::optional<QueryKind> query_kind_from_string(const std::string& s) {
    if (s == "flows_by_host") return QueryKind::flows_by_host;
    if (s == "flows_to_endpoint") return QueryKind::flows_to_endpoint;
    if (s == "alerts_by_class") return QueryKind::alerts_by_class;
    if (s == "outbound_volume_by_host") return QueryKind::outbound_volume_by_host;
    return std::nullopt;
}

uint32_t clamp_limit(uint32_t requested, uint32_t cap) {
    if (requested == 0) return cap;
    return std::min(requested, cap);
}

EntitySet entity_set(const TelemetrySlice& slice) {
    EntitySet out;
    for (const auto& qr : slice.queries_issued) {
        for (const auto& rec : qr.records) {
            out.endpoints.insert(rec.src);
            out.endpoints.insert(rec.dst);
            if (!rec.host.empty()) out.hosts.insert(rec.host);
        }
    }
    return out;
}

std::optional<std::vector<TelemetryRecord>> execute_query(TelemetrySlice& slice, const Query& q,
                                                          const TelemetrySource& source,
                                                          uint32_t result_cap, double now) {
    if (slice.budget_remaining == 0) return std::nullopt;

    QueryResult qr;
    qr.query = q;
    qr.limit_applied = clamp_limit(q.limit, result_cap);
    qr.at = now;
    qr.records = source.query(q, now, qr.limit_applied);
    if (qr.records.size() > qr.limit_applied) qr.records.resize(qr.limit_applied);

    slice.budget_remaining -= 1;
    slice.queries_issued.push_back(qr);
    return slice.queries_issued.back().records;
}

} // namespace pocket
