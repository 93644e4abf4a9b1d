#pragma once
#include <compare>
#include <map>
#include <string>

namespace pocket {

// A detector-raised event that starts a session. The payload names the
// alerting host and the detector class; it deliberately does not carry the
// suspect external endpoint — agents must recover targets from telemetry.
struct Trigger {
    std::string trigger_class;
    double raised_at = 0.0;
    std::map<std::string, std::string> payload;
    std::string source_detector;

    auto operator<=>(const Trigger&) const = default;
};

} // namespace pocket
