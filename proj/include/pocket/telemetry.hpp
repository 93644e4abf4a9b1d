#pragma once
#include "pocket/endpoint.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace pocket {

enum class Direction { inbound, outbound, lateral };
enum class RecordKind { flow, alert, file_event };

std::string to_string(Direction d);
std::string to_string(RecordKind k);
std::optional<Direction> direction_from_string(const std::string& s);
std::optional<RecordKind> record_kind_from_string(const std::string& s);

struct TelemetryRecord {
    double timestamp = 0.0; // seconds since scenario start
    Endpoint src;
    Endpoint dst;
    std::string host;
    Direction direction = Direction::outbound;
    uint64_t bytes = 0;
    std::string protocol;
    RecordKind kind = RecordKind::flow;

    auto operator<=>(const TelemetryRecord&) const = default;
};

enum class QueryKind { flows_by_host, flows_to_endpoint, alerts_by_class, outbound_volume_by_host };

std::string to_string(QueryKind k);
std::optional<QueryKind> query_kind_from_string(const std::string& s);

struct Query {
    QueryKind kind = QueryKind::flows_by_host;
    std::map<std::string, std::string> params; // kind-specific filters
    uint32_t limit = 0;                        // 0 means "use the manifest result cap"

    auto operator<=>(const Query&) const = default;
};

struct QueryResult {
    Query query;
    uint32_t limit_applied = 0;
    double at = 0.0; // session clock when executed
    std::vector<TelemetryRecord> records;
};

// The bounded evidence a session actually observed. Append-only; the budget
// counts queries, not records.
struct TelemetrySlice {
    std::vector<QueryResult> queries_issued;
    uint32_t budget_remaining = 0;
};

// Entities observable in a slice: exactly what appears in result records
// (src, dst, host). Entities named only in query parameters never enter.
struct EntitySet {
    std::set<Endpoint> endpoints;
    std::set<std::string> hosts;

    bool contains(const Endpoint& e) const { return endpoints.count(e) > 0; }
    bool contains_host(const std::string& h) const { return hosts.count(h) > 0; }
};

// min(requested, cap), with 0 meaning "cap".
uint32_t clamp_limit(uint32_t requested, uint32_t cap);

EntitySet entity_set(const TelemetrySlice& slice);

// Read-only view of the environment's telemetry. `now` bounds visibility to
// events that have already happened on the scenario clock.
class TelemetrySource {
public:
    virtual ~TelemetrySource() = default;
    virtual std::vector<TelemetryRecord> query(const Query& q, double now, uint32_t limit) const = 0;
};

// Runs one query under the session budget and result cap. Returns nullopt
// when the budget is already exhausted (the session must terminate with
// outcome budget_exhaust); otherwise appends to the slice and decrements.
std::optional<std::vector<TelemetryRecord>> execute_query(TelemetrySlice& slice, const Query& q,
                                                          const TelemetrySource& source,
                                                          uint32_t result_cap, double now);

} // namespace pocket
