#pragma once
#include "pocket/agent_package.hpp"
#include "pocket/telemetry.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace pocket {

// The six-way verdict the boundary assigns to every session. Exhaustive:
// each session gets exactly one.
enum class OutcomeClass {
    valid_block,
    no_action,
    schema_fail,
    unsupported_action,
    ungrounded,
    budget_exhaust,
};

constexpr size_t kOutcomeCount = 6;

std::string to_string(OutcomeClass o);
std::optional<OutcomeClass> outcome_from_string(const std::string& s);

enum class GroundingMode { runtime, post_hoc };

std::string to_string(GroundingMode m);
std::optional<GroundingMode> grounding_mode_from_string(const std::string& s);

struct Reason {
    std::string code;
    std::string text;
};

// A report that survived extraction and structural validation. Fields hold
// the schema-declared values; anything extra in the object is preserved in
// raw_text but ignored for admission.
struct TypedReport {
    std::string raw_text;
    std::map<std::string, nlohmann::json> fields;
    std::string action;
    std::vector<Endpoint> endpoint_targets;
    std::vector<std::string> host_targets;
    bool confirmed = false;
};

struct BoundaryDecision {
    OutcomeClass outcome = OutcomeClass::schema_fail;
    Reason reason;
    std::optional<TypedReport> report;       // valid_block and no_action
    std::optional<std::string> rejected_text; // all rejections
    GroundingMode grounding_mode = GroundingMode::runtime;
    std::optional<bool> grounding_flag; // evaluated for every structurally valid report
};

// Pulls the candidate report out of model text: the parsed object inside
// the last well-formed ```json fence; surrounding prose is ignored.
// Reason codes: missing_delimiter (no fence at all), malformed_json (fences
// present but none parses to a JSON object).
std::variant<nlohmann::json, Reason> extract_report(const std::string& model_text);

// Structural check against the manifest schema: every required field
// present with its declared kind, the built-in "action" key present as
// text, and the confirmation field read into `confirmed`. Strict typing:
// "true" is not a boolean, 3.0 is not a count.
std::variant<TypedReport, Reason> check_structure(const nlohmann::json& obj,
                                                  const std::vector<FieldSpec>& schema,
                                                  const std::string& confirmation_field,
                                                  std::string raw_text);

// Exact, case-sensitive catalog membership.
std::optional<Reason> check_action(const TypedReport& report, const std::set<std::string>& catalog);

// Every report entity must appear in the session's observed entities;
// endpoint and host entities are checked independently. A confirmed action
// report with no endpoint target is ungrounded in both modes: there is
// nothing admissible to enforce.
std::optional<Reason> check_grounding(const TypedReport& report, const EntitySet& entities);

// The admission pipeline: extract -> structure -> allowlist -> confirmation
// -> grounding, first failure wins. post_hoc mode records the grounding
// verdict without letting it gate admission.
BoundaryDecision admit(const std::string& model_text, const Manifest& manifest,
                       const TelemetrySlice& slice, GroundingMode mode);

// Decision for a session that hit a budget before producing a valid report.
BoundaryDecision budget_exhaust_decision(const std::string& which_budget, GroundingMode mode);

nlohmann::json decision_to_json(const BoundaryDecision& d);

// Shared fence scanner: all ```json fences in order of appearance, each
// entry the parsed value or nullopt when unparseable.
struct FenceScan {
    size_t fence_count = 0;
    std::optional<nlohmann::json> last_object; // last fence parsing to an object
};
FenceScan scan_json_fences(const std::string& text);

} // namespace pocket
