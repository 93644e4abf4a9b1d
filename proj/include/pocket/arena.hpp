#pragma once
#include "pocket/endpoint.hpp"
#include "pocket/telemetry.hpp"
#include "pocket/trigger.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace pocket {

struct HostInfo {
    std::string id;
    std::string role;
    uint32_t address = 0;
};

struct SensitiveFile {
    std::string name;
    std::string host_id;
};

struct Topology {
    std::vector<HostInfo> hosts;
    std::vector<Ipv4Cidr> subnets;
    std::string entry_host;
    Endpoint attacker_endpoint;
    std::vector<SensitiveFile> files;

    const HostInfo* host(const std::string& id) const;
};

// Phase starts are strictly ordered; lateral_spread_complete is the point of
// no return — a block on the attacker endpoint applied strictly before it
// contains the attack, anything later does not.
struct TimelineParams {
    uint64_t seed = 0;
    double scan_start = 0;
    double scan_interval = 0;
    double lateral_start = 0;
    double probe_interval = 0;
    double c2_start = 0;
    double beacon_interval = 0;
    uint64_t beacon_bytes = 0;
    double exfil_staging_start = 0;
    double staging_interval = 0;
    uint64_t staging_bytes = 0;
    double lateral_spread_complete = 0;
    double exfil_file_interval = 0;
    double post_spread_beacon_interval = 0;
    double scenario_end = 0;
};

struct ThresholdDetector {
    std::string trigger_class;
    std::string alert_class;
    uint32_t count = 0;               // beacon / probe detectors
    uint64_t threshold_bytes = 0;     // volume detector
    double window_s = 0;
    std::string protocol;             // optional flow-protocol filter
};

struct DetectorParams {
    ThresholdDetector beacon;
    ThresholdDetector volume;
    ThresholdDetector probe;
};

struct Scenario {
    Topology topology;
    TimelineParams timeline;
    DetectorParams detectors;
    std::string notes;

    static Scenario load(const std::filesystem::path& path);
};

struct BlockEntry {
    Endpoint endpoint;
    std::string scope;
    double applied_at = 0;

    auto operator<=>(const BlockEntry&) const = default;
};

class BlockTable {
public:
    // Appends unless an entry for (endpoint, scope) already exists; returns
    // whether the table changed. Duplicates keep the earliest applied_at.
    bool add(const Endpoint& endpoint, const std::string& scope, double applied_at);

    bool blocked_at(const Endpoint& e, double t) const;              // applied_at <= t
    bool blocked_strictly_before(const Endpoint& e, double t) const; // applied_at < t

    const std::vector<BlockEntry>& entries() const { return entries_; }

private:
    std::vector<BlockEntry> entries_;
};

struct ImpactRecord {
    uint32_t infected_hosts = 0;
    std::vector<std::string> infected;
    uint32_t exfiltrated_files = 0;
    std::vector<std::string> exfiltrated;
    std::vector<BlockEntry> blocks;
    bool contained = false;
};

struct ScenarioRun {
    std::vector<TelemetryRecord> records;
    std::vector<Trigger> triggers;
    ImpactRecord impact;
};

// Full deterministic run under a fixed block schedule: the telemetry
// stream, the triggers the detectors raised, and the final impact.
ScenarioRun run_scenario(const Scenario& scenario, const BlockTable& blocks);

// One attack instance: a precomputed event schedule plus the mutable block
// table a session's enforcement writes into. Also the bounded telemetry
// source sessions query.
class Arena : public TelemetrySource {
public:
    explicit Arena(Scenario scenario);

    const Scenario& scenario() const { return scenario_; }

    // Detector-raised triggers, realized against the current block table.
    std::vector<Trigger> triggers() const;

    std::vector<TelemetryRecord> query(const Query& q, double now, uint32_t limit) const override;

    // The network-block adapter: the only state-changing entry point.
    // Unknown scope or a non-block action name is rejected (defensive; the
    // dispatcher validates first). Idempotent per (endpoint, scope).
    BlockEntry apply_block(const Endpoint& endpoint, const std::string& scope, double now);

    // Every apply_block call, including idempotent repeats; used by the
    // enforcement-firewall tests.
    uint64_t enforcement_invocations() const { return invocations_; }

    const BlockTable& blocks() const { return blocks_; }

    // Impact at timeline end under the current block table.
    ImpactRecord impact() const;

private:
    Scenario scenario_;
    struct RawEvent;
    std::vector<RawEvent> schedule_;
    BlockTable blocks_;
    uint64_t invocations_ = 0;

    struct Realized;
    Realized realize(double until_t, const BlockTable& blocks) const;

    friend ScenarioRun run_scenario(const Scenario&, const BlockTable&);
};

bool is_known_scope(const std::string& scope);

} // namespace pocket
