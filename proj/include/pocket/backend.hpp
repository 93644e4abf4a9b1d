#pragma once
#include "pocket/boundary.hpp"
#include "pocket/sim_clock.hpp"
#include "pocket/telemetry.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace pocket {

// One model move: either a telemetry query request or the final text that
// goes to the admission boundary.
struct BackendTurn {
    enum class Kind { query_request, final_text };
    Kind kind = Kind::final_text;
    std::optional<Query> query; // present iff kind == query_request and well-formed
    std::string text;           // the raw model output, always kept
    double latency_s = 0.0;
};

struct TranscriptEntry {
    std::string sent; // runtime -> model
    BackendTurn turn; // model -> runtime
    double at = 0.0;  // scenario clock when the turn arrived
};

struct SessionTranscript {
    std::vector<TranscriptEntry> turns;
    double first_prompt_time = 0.0;
    double final_time = 0.0;
    uint32_t report_attempts = 0;
};

// Classifies raw model text. The protocol is one fenced JSON object per
// turn: an object with a "query" member is a query request, anything else
// (including prose and malformed fences) is final text for the boundary.
// query_problem is set when the turn asked for a query but the query was
// unusable; the runtime answers with an error message instead of executing.
struct TurnParse {
    BackendTurn turn;
    std::optional<std::string> query_problem;
};
TurnParse parse_turn(std::string text);

class Backend {
public:
    virtual ~Backend() = default;
    virtual const std::string& id() const = 0;

    // Sends one runtime message and returns the model's raw reply,
    // advancing the scenario clock by the turn's latency (scripted:
    // synthetic; live: measured wall time).
    virtual std::string next_text(const std::string& message, SimClock& clock) = 0;
};

struct ScriptTurn {
    double latency_s = 0.0;
    std::string text;
};

// A recorded model conversation for one trial. Replaying it twice yields
// byte-identical transcripts, synthetic timestamps included.
struct ReplayScript {
    std::string trial_id;
    std::string agent_id;
    std::string backend_id;
    GroundingMode mode = GroundingMode::post_hoc;
    std::vector<ScriptTurn> turns;

    static ReplayScript load(const std::filesystem::path& path);
};

class ScriptedBackend : public Backend {
public:
    explicit ScriptedBackend(ReplayScript script);

    const std::string& id() const override { return script_.backend_id; }
    const ReplayScript& script() const { return script_; }

    // Throws ScriptExhausted past the last turn.
    std::string next_text(const std::string& message, SimClock& clock) override;

private:
    ReplayScript script_;
    size_t cursor_ = 0;
};

// Generic HTTP chat-completions adapter. Configuration comes from
// POCKET_BACKEND_URL, POCKET_BACKEND_MODEL (optional, defaults to the
// backend id) and POCKET_BACKEND_KEY; it is validated at construction so a
// misconfigured trial fails as an orchestration error before the scenario
// starts.
class HttpBackend : public Backend {
public:
    HttpBackend(std::string backend_id, std::string base_url, std::string model, std::string api_key);

    static std::unique_ptr<HttpBackend> from_env(const std::string& backend_id);

    const std::string& id() const override { return backend_id_; }
    std::string next_text(const std::string& message, SimClock& clock) override;

private:
    std::string backend_id_;
    std::string base_url_;
    std::string model_;
    std::string api_key_;
    std::vector<std::pair<std::string, std::string>> history_; // (role, content)
};

// "script:<path>" opens a scripted session; any other id opens the live
// adapter for that backend id.
std::unique_ptr<Backend> open_backend(const std::string& backend_spec);

} // namespace pocket
