#pragma once
#include "pocket/arena.hpp"
#include "pocket/backend.hpp"
#include "pocket/telemetry.hpp"
#include "pocket/trigger.hpp"

#include "json.hpp"

namespace pocket {

// Stable wire/trace shapes. Field names are part of the trace format and
// must not drift: recorded trials are recomputed from these bytes.
nlohmann::json to_json(const TelemetryRecord& r);
TelemetryRecord record_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Query& q);
nlohmann::json to_json(const QueryResult& qr);
nlohmann::json to_json(const TelemetrySlice& slice);

nlohmann::json to_json(const Trigger& t);
nlohmann::json to_json(const BlockEntry& b);
nlohmann::json to_json(const ImpactRecord& impact);

nlohmann::json to_json(const BackendTurn& turn);
nlohmann::json to_json(const TranscriptEntry& entry);
nlohmann::json to_json(const SessionTranscript& transcript);

// The message handed back to the model after a query runs.
std::string results_message(const std::vector<TelemetryRecord>& records, uint32_t budget_remaining);

} // namespace pocket
