#pragma once
#include "pocket/arena.hpp"
#include "pocket/boundary.hpp"
#include "pocket/dispatcher.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pocket {

struct TrialConfig {
    std::string agent_id;
    std::string backend_id;
    GroundingMode mode = GroundingMode::post_hoc;

    auto operator<=>(const TrialConfig&) const = default;
};

// Per-trial metrics: outcome, infected hosts, exfiltrated files, time from
// attack start to enforcement or terminal failure, entity precision of the
// enforced target, and the first-prompt-to-first-block interval.
struct MeasurementTuple {
    OutcomeClass o = OutcomeClass::schema_fail;
    uint32_t h = 0;
    uint32_t f = 0;
    double tau = 0.0;
    std::optional<double> eta;
    std::optional<double> delta;
    std::optional<bool> grounding_flag;
    std::optional<bool> target_is_attacker;
};

struct TrialFile {
    std::string name;
    std::string sha256;
};

struct TrialRecord {
    std::string trial_id;
    TrialConfig config;
    MeasurementTuple measurement;
    std::vector<TrialFile> files;
};

struct TrialMeta {
    std::string trial_id;
    TrialConfig config;
    Endpoint attacker;
};

struct EtaResult {
    double eta = 0.0;
    bool target_is_attacker = false;
};

// Fraction of enforced endpoints present in the slice's entity set.
double eta_ratio(std::span<const Endpoint> enforced, const EntitySet& entities);

// Entity precision of one applied action, plus whether the enforced target
// is the attacker endpoint — reported separately, since telemetry
// membership and attacker identity are different claims.
EtaResult compute_eta(const AppliedAction& action, const TelemetrySlice& slice,
                      const Endpoint& attacker);

MeasurementTuple measure(const SessionResult& result, const ImpactRecord& impact,
                         const Endpoint& attacker);

// Writes transcript.json, slice.json, decision.json, impact.json,
// measurement.json and hashes.sha256 (covering the other five). The hash
// file is written last; on failure no partial hash file remains.
TrialRecord write_trial(const SessionResult& result, const ImpactRecord& impact,
                        const TrialMeta& meta, const std::filesystem::path& out_dir);

struct OutcomeCounts {
    std::array<uint32_t, kOutcomeCount> counts{};

    uint32_t& operator[](OutcomeClass o) { return counts[static_cast<size_t>(o)]; }
    uint32_t operator[](OutcomeClass o) const { return counts[static_cast<size_t>(o)]; }
    uint32_t total() const;
    void add(OutcomeClass o) { counts[static_cast<size_t>(o)] += 1; }
};

struct ConfigSummary {
    TrialConfig config;
    OutcomeCounts counts;
    std::optional<double> mean_delta;          // over valid_block trials
    std::vector<std::pair<uint32_t, uint32_t>> noblock_impacts; // distinct (h, f) of non-block trials
};

struct BackendSummary {
    std::string backend_id;
    OutcomeCounts counts;
    std::optional<double> mean_delta;
    double contained_rate = 0.0;
};

struct ExcludedTrial {
    std::string trial_id;
    std::string file;
    std::string reason;
};

struct DatasetSummary {
    uint32_t total = 0;
    OutcomeCounts overall;
    std::vector<ConfigSummary> per_configuration;
    std::vector<BackendSummary> per_backend;
    std::optional<double> mean_delta;
    double containment_rate = 0.0;
    std::vector<TrialRecord> trials;
    std::vector<ExcludedTrial> excluded;
};

// Verifies every per-trial digest, excludes trials that fail, and folds the
// rest into a deterministic summary. Count conservation (per-config ==
// per-backend == overall) is checked internally.
DatasetSummary analyze(const std::filesystem::path& dataset_dir);

std::string summary_table(const DatasetSummary& s);
nlohmann::json summary_json(const DatasetSummary& s);

struct DatasetDigest {
    std::filesystem::path manifest_path; // DATASET.sha256
    std::string manifest_digest;         // sha256 of the manifest bytes, kept in DATASET.id
};

// One top-level manifest: `<hex>  <relative path>` per file, sorted, plus
// the manifest's own digest in DATASET.id.
DatasetDigest hash_dataset(const std::filesystem::path& dataset_dir);

// Recomputes every digest named by DATASET.sha256 and the manifest's own
// digest against DATASET.id. Returns true when clean.
bool verify_dataset(const std::filesystem::path& dataset_dir, std::vector<std::string>& problems);

} // namespace pocket
