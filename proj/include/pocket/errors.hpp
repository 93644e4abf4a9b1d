#pragma once
#include <stdexcept>
#include <string>

namespace pocket {

// User / configuration / data errors. CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Run-orchestration failures: the trial never reached an evaluable state
// (bad backend config, missing trigger, exhausted script handle, I/O during
// a batch). These never become an outcome class. CLI maps them to exit 2.
class OrchestrationError : public std::runtime_error {
public:
    OrchestrationError(std::string stage, const std::string& msg)
        : std::runtime_error(msg), stage_(std::move(stage)) {}

    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

// Raised by a scripted backend asked for a turn it does not have. The
// session loop translates this into wall-clock budget expiry; hitting it
// outside a session is a programming error.
class ScriptExhausted : public OrchestrationError {
public:
    explicit ScriptExhausted(const std::string& trial_id)
        : OrchestrationError("backend", "replay script '" + trial_id + "' has no further turns") {}
};

} // namespace pocket
