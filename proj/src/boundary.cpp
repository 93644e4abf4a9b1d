#include "pocket/boundary.hpp"

#include <algorithm>

using nlohmann::json;

namespace pocket {

std::string to_string(OutcomeClass o) {
    switch (o) {
        case OutcomeClass::valid_block: return "valid_block";
        case OutcomeClass::no_action: return "no_action";
        case OutcomeClass::schema_fail: return "schema_fail";
        case OutcomeClass::unsupported_action: return "unsupported_action";
        case OutcomeClass::ungrounded: return "ungrounded";
        case OutcomeClass::budget_exhaust: return "budget_exhaust";
    }
    return "unknown";
}

std::optional<OutcomeClass> outcome_from_string(const std::string& s) {
    if (s == "valid_block") return OutcomeClass::valid_block;
    if (s == "no_action") return OutcomeClass::no_action;
    if (s == "schema_fail") return OutcomeClass::schema_fail;
    if (s == "unsupported_action") return OutcomeClass::unsupported_action;
    if (s == "ungrounded") return OutcomeClass::ungrounded;
    if (s == "budget_exhaust") return OutcomeClass::budget_exhaust;
    return std::nullopt;
}

std::string to_string(GroundingMode m) {
    return m == GroundingMode::runtime ? "runtime" : "post_hoc";
}

std::optional<GroundingMode> grounding_mode_from_string(const std::string& s) {
    if (s == "runtime") return GroundingMode::runtime;
    if (s == "post_hoc") return GroundingMode::post_hoc;
    return std::nullopt;
}

FenceScan scan_json_fences(const std::string& text) {
    static const std::string open = "```json";
    static const std::string close = "```";

    FenceScan scan;
    size_t pos = 0;
    while (true) {
        size_t start = text.find(open, pos);
        if (start == std::string::npos) break;
        size_t body = start + open.size();
        size_t end = text.find(close, body);
        if (end == std::string::npos) {
            // Unterminated fence still counts as a delimiter attempt.
            scan.fence_count += 1;
            break;
        }
        scan.fence_count += 1;
        std::string content = text.substr(body, end - body);
        json parsed = json::parse(content, nullptr, false);
        if (!parsed.is_discarded() && parsed.is_object()) scan.last_object = std::move(parsed);
        pos = end + close.size();
    }
    return scan;
}

std::variant<json, Reason> extract_report(const std::string& model_text) {
    FenceScan scan = scan_json_fences(model_text);
    if (scan.fence_count == 0)
        return Reason{"missing_delimiter", "no ```json fenced block in model output"};
    if (!scan.last_object)
        return Reason{"malformed_json", "no fenced block parses to a JSON object"};
    return *scan.last_object;
}

namespace {

bool is_nonneg_integer(const json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<int64_t>() >= 0);
}

// Kind-level value check; fills targets/typed state as a side effect.
bool value_matches_kind(const json& v, FieldKind kind, TypedReport& report) {
    switch (kind) {
        case FieldKind::boolean:
            return v.is_boolean();
        case FieldKind::text:
            return v.is_string();
        case FieldKind::count:
        case FieldKind::bytes:
            return is_nonneg_integer(v);
        case FieldKind::protocol_label:
            return v.is_string() && !v.get<std::string>().empty();
        case FieldKind::host_id:
            if (!v.is_string() || v.get<std::string>().empty()) return false;
            report.host_targets.push_back(v.get<std::string>());
            return true;
        case FieldKind::host_id_list: {
            if (!v.is_array()) return false;
            for (const auto& item : v) {
                if (!item.is_string() || item.get<std::string>().empty()) return false;
                report.host_targets.push_back(item.get<std::string>());
            }
            return true;
        }
        case FieldKind::endpoint: {
            if (!v.is_string()) return false;
            auto ep = Endpoint::parse(v.get<std::string>());
            if (!ep) return false;
            report.endpoint_targets.push_back(*ep);
            return true;
        }
        case FieldKind::endpoint_list: {
            if (!v.is_array()) return false;
            for (const auto& item : v) {
                if (!item.is_string()) return false;
                auto ep = Endpoint::parse(item.get<std::string>());
                if (!ep) return false;
                report.endpoint_targets.push_back(*ep);
            }
            return true;
        }
    }
    return false;
}

} // namespace

std::variant<TypedReport, Reason> check_structure(const json& obj,
                                                  const std::vector<FieldSpec>& schema,
                                                  const std::string& confirmation_field,
                                                  std::string raw_text) {
    if (!obj.is_object())
        return Reason{"malformed_json", "report candidate is not a JSON object"};

    TypedReport report;
    report.raw_text = std::move(raw_text);

    // "action" is a built-in required key of every report object.
    if (!obj.contains("action"))
        return Reason{"missing_field:action", "report lacks the 'action' key"};
    if (!obj.at("action").is_string())
        return Reason{"wrong_type:action", "'action' must be a string"};
    report.action = obj.at("action").get<std::string>();

    for (const auto& spec : schema) {
        if (!obj.contains(spec.name)) {
            if (spec.required)
                return Reason{"missing_field:" + spec.name,
                              "required field '" + spec.name + "' absent"};
            continue;
        }
        const json& v = obj.at(spec.name);
        if (!value_matches_kind(v, spec.kind, report))
            return Reason{"wrong_type:" + spec.name,
                          "field '" + spec.name + "' is not a " + to_string(spec.kind)};
        report.fields[spec.name] = v;
    }

    // A validated manifest declares the confirmation field required boolean;
    // stay total over unvalidated manifests anyway.
    auto conf = report.fields.find(confirmation_field);
    if (conf == report.fields.end())
        return Reason{"missing_field:" + confirmation_field,
                      "confirmation field '" + confirmation_field + "' absent"};
    if (!conf->second.is_boolean())
        return Reason{"wrong_type:" + confirmation_field,
                      "confirmation field '" + confirmation_field + "' must be a boolean"};
    report.confirmed = conf->second.get<bool>();
    return report;
}

std::optional<Reason> check_action(const TypedReport& report, const std::set<std::string>& catalog) {
    if (catalog.count(report.action) == 0)
        return Reason{"unsupported_action:" + report.action,
                      "requested action '" + report.action + "' is not in the manifest catalog"};
    return std::nullopt;
}

std::optional<Reason> check_grounding(const TypedReport& report, const EntitySet& entities) {
    std::vector<std::string> missing_endpoints;
    std::vector<std::string> missing_hosts;
    for (const auto& ep : report.endpoint_targets)
        if (!entities.contains(ep)) missing_endpoints.push_back(ep.to_string());
    for (const auto& h : report.host_targets)
        if (!entities.contains_host(h)) missing_hosts.push_back(h);

    if (report.confirmed && report.endpoint_targets.empty() && report.host_targets.empty())
        return Reason{"ungrounded:no_target", "action report names no target entity"};

    if (missing_endpoints.empty() && missing_hosts.empty()) return std::nullopt;

    std::string text = "entities absent from session telemetry:";
    for (const auto& e : missing_endpoints) text += " endpoint " + e;
    for (const auto& h : missing_hosts) text += " host " + h;
    return Reason{"ungrounded", text};
}

BoundaryDecision admit(const std::string& model_text, const Manifest& manifest,
                       const TelemetrySlice& slice, GroundingMode mode) {
    BoundaryDecision d;
    d.grounding_mode = mode;

    auto extracted = extract_report(model_text);
    if (std::holds_alternative<Reason>(extracted)) {
        d.outcome = OutcomeClass::schema_fail;
        d.reason = std::get<Reason>(extracted);
        d.rejected_text = model_text;
        return d;
    }

    auto structured = check_structure(std::get<json>(extracted), manifest.report_schema,
                                      manifest.confirmation_field, model_text);
    if (std::holds_alternative<Reason>(structured)) {
        d.outcome = OutcomeClass::schema_fail;
        d.reason = std::get<Reason>(structured);
        d.rejected_text = model_text;
        return d;
    }
    TypedReport report = std::get<TypedReport>(structured);

    if (auto bad_action = check_action(report, manifest.action_catalog)) {
        d.outcome = OutcomeClass::unsupported_action;
        d.reason = *bad_action;
        d.rejected_text = model_text;
        return d;
    }

    // Grounding verdict is recorded for every structurally valid report,
    // regardless of whether it gates this mode.
    EntitySet entities = entity_set(slice);
    auto grounding = check_grounding(report, entities);
    d.grounding_flag = !grounding.has_value();

    if (!report.confirmed) {
        d.outcome = OutcomeClass::no_action;
        d.reason = {"not_confirmed", "report is valid but does not confirm the attack"};
        d.report = std::move(report);
        return d;
    }

    // An empty-target action report is unenforceable in any mode.
    bool no_target = report.endpoint_targets.empty() && report.host_targets.empty();
    if (grounding && (mode == GroundingMode::runtime || no_target)) {
        d.outcome = OutcomeClass::ungrounded;
        d.reason = *grounding;
        d.rejected_text = model_text;
        return d;
    }

    d.outcome = OutcomeClass::valid_block;
    d.reason = {"admitted", "report passed structure, allowlist and confirmation gates"};
    d.report = std::move(report);
    return d;
}

BoundaryDecision budget_exhaust_decision(const std::string& which_budget, GroundingMode mode) {
    BoundaryDecision d;
    d.outcome = OutcomeClass::budget_exhaust;
    d.reason = {"budget_exhaust_" + which_budget,
                which_budget + " budget reached before a valid report"};
    d.grounding_mode = mode;
    return d;
}

json decision_to_json(const BoundaryDecision& d) {
    json j;
    j["outcome"] = to_string(d.outcome);
    j["reason_code"] = d.reason.code;
    j["reason_text"] = d.reason.text;
    j["grounding_mode"] = to_string(d.grounding_mode);
    j["grounding_flag"] = d.grounding_flag ? json(*d.grounding_flag) : json(nullptr);
    if (d.report) {
        json fields = json::object();
        for (const auto& [name, value] : d.report->fields) fields[name] = value;
        json targets = json::array();
        for (const auto& ep : d.report->endpoint_targets) targets.push_back(ep.to_string());
        for (const auto& h : d.report->host_targets) targets.push_back(h);
        j["report"] = {{"action", d.report->action},
                       {"confirmed", d.report->confirmed},
                       {"fields", fields},
                       {"targets", targets}};
    }
    if (d.rejected_text) j["rejected_text"] = *d.rejected_text;
    return j;
}

} // namespace pocket
