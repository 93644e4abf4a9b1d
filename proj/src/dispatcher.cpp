#include "pocket/dispatcher.hpp"
#include "pocket/errors.hpp"
#include "pocket/json_codec.hpp"

#include <algorithm>
#include <sstream>

namespace pocket {

std::string to_string(TerminationCause c) {
    switch (c) {
        case TerminationCause::report: return "report";
        case TerminationCause::budget_exhaust_query: return "budget_exhaust_query";
        case TerminationCause::budget_exhaust_wallclock: return "budget_exhaust_wallclock";
    }
    return "unknown";
}

std::string assemble_prompt(const AgentPackage& pkg, const Trigger& trigger) {
    const Manifest& m = pkg.manifest;
    std::ostringstream out;

    out << pkg.prompt;
    if (!pkg.prompt.empty() && pkg.prompt.back() != '\n') out << '\n';

    out << "\n## Deployment context\n";
    out << "trusted_subnets:";
    for (const auto& s : pkg.context.trusted_subnets) out << ' ' << s;
    out << '\n';
    out << "host_roles:\n";
    for (const auto& [host, role] : pkg.context.host_roles) out << "  " << host << ": " << role << '\n';
    out << "allowed_destinations:";
    for (const auto& d : pkg.context.allowed_destinations) out << ' ' << d.to_string();
    out << '\n';
    out << "expected_services:\n";
    for (const auto& svc : pkg.context.expected_services)
        out << "  " << svc.host_id << ' ' << svc.protocol << '/' << svc.port << '\n';
    if (!pkg.context.notes.empty()) out << "notes: " << pkg.context.notes << '\n';

    out << "\n## Trigger\n";
    out << "class: " << trigger.trigger_class << '\n';
    out << "detector: " << trigger.source_detector << '\n';
    for (const auto& [k, v] : trigger.payload) out << k << ": " << v << '\n';

    out << "\n## Report contract\n";
    out << "When your investigation concludes, emit exactly one fenced ```json object.\n";
    out << "It must carry the key \"action\" plus these fields:\n";
    for (const auto& f : m.report_schema)
        out << "  " << f.name << " (" << to_string(f.kind) << (f.required ? ", required" : ", optional")
            << ")\n";
    out << "The field " << m.confirmation_field << " states whether you confirm the attack.\n";

    out << "\n## Actions available\n";
    for (const auto& a : m.action_catalog) out << a << '\n';

    out << "\n## Evidence interface\n";
    out << "Request telemetry by replying with a fenced ```json object of the form\n";
    out << "{\"query\": {\"kind\": <kind>, \"params\": {...}, \"limit\": <n>}}.\n";
    out << "kinds: flows_by_host(host), flows_to_endpoint(endpoint), alerts_by_class(class), "
           "outbound_volume_by_host(host)\n";
    out << "query_budget: " << m.query_budget << ", result_cap: " << m.result_cap << '\n';

    return out.str();
}

void EnforcementPermit::consume() {
    if (spent_) throw ValidationError("enforcement permit already spent: at most one action per session");
    spent_ = true;
}

BlockEntry dispatch_action(const ActionRequest& req, Arena& arena, SimClock& clock,
                           EnforcementPermit& permit) {
    permit.consume();
    if (req.action != "network_block")
        throw ValidationError("enforcement adapter supports only network_block, got '" + req.action + "'");
    return arena.apply_block(req.target, req.scope, clock.now());
}

namespace {

std::string report_reason_text(const TypedReport& report, const std::vector<FieldSpec>& schema) {
    std::string reason;
    for (const auto& spec : schema) {
        if (spec.kind != FieldKind::text) continue;
        auto it = report.fields.find(spec.name);
        if (it == report.fields.end()) continue;
        if (!reason.empty()) reason += "; ";
        reason += it->second.get<std::string>();
    }
    return reason;
}

bool is_rejection(OutcomeClass o) {
    return o == OutcomeClass::schema_fail || o == OutcomeClass::unsupported_action ||
           o == OutcomeClass::ungrounded;
}

} // namespace

SessionResult run_session(const Trigger& trigger, const Registry& registry, Arena& arena,
                          Backend& backend, GroundingMode mode, SimClock& clock,
                          const SessionOptions& options) {
    const AgentPackage* pkg = registry.select_agent(trigger);
    if (pkg == nullptr)
        throw OrchestrationError("dispatch",
                                 "no compatible agent for trigger_class '" + trigger.trigger_class + "'");

    // Context facts bind lazily: host references must resolve in this
    // deployment's topology before the session runs.
    const Topology& topo = arena.scenario().topology;
    for (const auto& [host, role] : pkg->context.host_roles)
        if (!topo.host(host))
            throw OrchestrationError("context_bind",
                                     "context host '" + host + "' does not resolve in the topology");
    for (const auto& svc : pkg->context.expected_services)
        if (!topo.host(svc.host_id))
            throw OrchestrationError("context_bind", "context service host '" + svc.host_id +
                                                         "' does not resolve in the topology");

    const Manifest& m = pkg->manifest;
    SessionResult result;
    result.agent_id = m.agent_id;
    result.trigger = trigger;
    result.slice.budget_remaining = m.query_budget;

    clock.set(trigger.raised_at);
    SessionTranscript& transcript = result.transcript;
    transcript.first_prompt_time = clock.now();

    std::string message = assemble_prompt(*pkg, trigger);
    uint32_t attempts_left = std::max(1u, options.max_report_attempts);
    EnforcementPermit permit;

    std::optional<BoundaryDecision> decision;
    TerminationCause cause = TerminationCause::report;

    while (!decision) {
        // Wall-clock budget is checked before each backend call, query
        // budget before each query; the trace records which one fired.
        if (clock.now() - transcript.first_prompt_time >= m.wall_clock_budget_s) {
            decision = budget_exhaust_decision("wallclock", mode);
            cause = TerminationCause::budget_exhaust_wallclock;
            break;
        }

        std::string text;
        double before = clock.now();
        try {
            text = backend.next_text(message, clock);
        } catch (const ScriptExhausted&) {
            decision = budget_exhaust_decision("wallclock", mode);
            cause = TerminationCause::budget_exhaust_wallclock;
            break;
        }

        TurnParse parsed = parse_turn(std::move(text));
        parsed.turn.latency_s = clock.now() - before;
        transcript.turns.push_back({message, parsed.turn, clock.now()});

        if (parsed.turn.kind == BackendTurn::Kind::query_request) {
            if (parsed.query_problem) {
                message = "query rejected: " + *parsed.query_problem +
                          ". Issue a corrected fenced {\"query\": ...} object or emit the final report.";
                continue;
            }
            auto records =
                execute_query(result.slice, *parsed.turn.query, arena, m.result_cap, clock.now());
            if (!records) {
                decision = budget_exhaust_decision("query", mode);
                cause = TerminationCause::budget_exhaust_query;
                break;
            }
            message = results_message(*records, result.slice.budget_remaining);
            continue;
        }

        transcript.report_attempts += 1;
        BoundaryDecision d = admit(parsed.turn.text, m, result.slice, mode);
        if (is_rejection(d.outcome) && attempts_left > 1) {
            attempts_left -= 1;
            message = "report rejected: " + d.reason.code + " (" + d.reason.text +
                      "). Emit a corrected fenced report object.";
            continue;
        }
        decision = std::move(d);
        cause = TerminationCause::report;
    }

    transcript.final_time = clock.now();
    result.termination_cause = cause;
    result.decision = std::move(*decision);

    if (result.decision.outcome == OutcomeClass::valid_block) {
        const TypedReport& report = *result.decision.report;
        if (report.endpoint_targets.empty())
            throw ValidationError("admitted block report without an endpoint target"); // unreachable
        ActionRequest req;
        req.action = report.action;
        req.target = report.endpoint_targets.front();
        req.scope = "global";
        req.reason = report_reason_text(report, m.report_schema);
        BlockEntry entry = dispatch_action(req, arena, clock, permit);
        result.action_applied = AppliedAction{std::move(req), entry.applied_at};
        result.late_block = entry.applied_at >= arena.scenario().timeline.lateral_spread_complete;
    }

    return result;
}

} // namespace pocket
