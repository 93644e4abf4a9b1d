#pragma once
#include "pocket/agent_package.hpp"
#include "pocket/arena.hpp"
#include "pocket/backend.hpp"
#include "pocket/boundary.hpp"
#include "pocket/sim_clock.hpp"
#include "pocket/trigger.hpp"

#include <optional>
#include <string>

namespace pocket {

// A scoped enforcement request, constructed only from an admitted report.
struct ActionRequest {
    std::string action;
    Endpoint target;
    std::string scope = "global";
    std::string reason;
};

enum class TerminationCause { report, budget_exhaust_query, budget_exhaust_wallclock };
std::string to_string(TerminationCause c);

struct AppliedAction {
    ActionRequest request;
    double apply_time = 0.0;
};

struct SessionResult {
    std::string agent_id;
    Trigger trigger;
    BoundaryDecision decision;
    SessionTranscript transcript;
    TelemetrySlice slice;
    std::optional<AppliedAction> action_applied; // present iff outcome == valid_block
    TerminationCause termination_cause = TerminationCause::report;
    bool late_block = false; // block landed at/after the spread-completion parameter
};

struct SessionOptions {
    uint32_t max_report_attempts = 1;
};

// Deterministic prompt: procedure, deployment facts, trigger payload, the
// report schema as name/kind pairs, the action catalog and the evidence
// interface. Never any telemetry — evidence arrives only through queries.
std::string assemble_prompt(const AgentPackage& pkg, const Trigger& trigger);

// Single-use permit making at-most-once enforcement per session structural.
class EnforcementPermit {
public:
    bool spent() const { return spent_; }
    void consume();

private:
    bool spent_ = false;
};

// Applies an admitted action through the arena's block adapter, spending
// the permit; a second dispatch in the same session is rejected.
BlockEntry dispatch_action(const ActionRequest& req, Arena& arena, SimClock& clock,
                           EnforcementPermit& permit);

// One closed-loop session: agent selection, prompt assembly, the
// query/answer loop under budgets, boundary admission, and at most one
// scoped enforcement dispatch. Throws OrchestrationError when the trial
// never reaches an evaluable state (no compatible agent, backend
// misconfiguration, unresolved context hosts).
SessionResult run_session(const Trigger& trigger, const Registry& registry, Arena& arena,
                          Backend& backend, GroundingMode mode, SimClock& clock,
                          const SessionOptions& options = {});

} // namespace pocket
