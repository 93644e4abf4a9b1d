#include "pocket/trace.hpp"
#include "pocket/errors.hpp"
#include "pocket/json_codec.hpp"
#include "pocket/sha256.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

using nlohmann::json;

namespace pocket {

namespace {

constexpr const char* kTrialFiles[] = {"transcript.json", "slice.json", "decision.json",
                                       "impact.json", "measurement.json"};

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << text;
    if (!out) throw ValidationError("write failed for " + path.string());
}

void write_json(const std::filesystem::path& path, const json& j) {
    write_text(path, j.dump(2) + "\n");
}

json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

json optional_to_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
json optional_to_json(const std::optional<bool>& v) { return v ? json(*v) : json(nullptr); }

std::string format_fixed1(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    return buf;
}

} // namespace

double eta_ratio(std::span<const Endpoint> enforced, const EntitySet& entities) {
    if (enforced.empty()) return 0.0;
    size_t hit = 0;
    for (const auto& ep : enforced)
        if (entities.contains(ep)) ++hit;
    return static_cast<double>(hit) / static_cast<double>(enforced.size());
}

EtaResult compute_eta(const AppliedAction& action, const TelemetrySlice& slice,
                      const Endpoint& attacker) {
    EntitySet entities = entity_set(slice);
    const Endpoint enforced[] = {action.request.target};
    EtaResult r;
    r.eta = eta_ratio(enforced, entities);
    r.target_is_attacker = action.request.target == attacker;
    return r;
}

MeasurementTuple measure(const SessionResult& result, const ImpactRecord& impact,
                         const Endpoint& attacker) {
    MeasurementTuple mu;
    mu.o = result.decision.outcome;
    mu.h = impact.infected_hosts;
    mu.f = impact.exfiltrated_files;
    mu.grounding_flag = result.decision.grounding_flag;

    if (result.action_applied) {
        mu.tau = result.action_applied->apply_time;
        mu.delta = result.action_applied->apply_time - result.transcript.first_prompt_time;
        EtaResult eta = compute_eta(*result.action_applied, result.slice, attacker);
        mu.eta = eta.eta;
        mu.target_is_attacker = eta.target_is_attacker;
    } else {
        mu.tau = result.transcript.final_time;
    }
    return mu;
}

namespace {

json measurement_to_json(const MeasurementTuple& mu) {
    return {{"o", to_string(mu.o)},
            {"h", mu.h},
            {"f", mu.f},
            {"tau", mu.tau},
            {"eta", optional_to_json(mu.eta)},
            {"delta", optional_to_json(mu.delta)},
            {"grounding_flag", optional_to_json(mu.grounding_flag)},
            {"target_is_attacker", optional_to_json(mu.target_is_attacker)}};
}

MeasurementTuple measurement_from_json(const json& j) {
    MeasurementTuple mu;
    auto o = outcome_from_string(j.at("o").get<std::string>());
    if (!o) throw ValidationError("measurement: unknown outcome class");
    mu.o = *o;
    mu.h = j.at("h").get<uint32_t>();
    mu.f = j.at("f").get<uint32_t>();
    mu.tau = j.at("tau").get<double>();
    if (!j.at("eta").is_null()) mu.eta = j.at("eta").get<double>();
    if (!j.at("delta").is_null()) mu.delta = j.at("delta").get<double>();
    if (!j.at("grounding_flag").is_null()) mu.grounding_flag = j.at("grounding_flag").get<bool>();
    if (!j.at("target_is_attacker").is_null())
        mu.target_is_attacker = j.at("target_is_attacker").get<bool>();
    return mu;
}

} // namespace

TrialRecord write_trial(const SessionResult& result, const ImpactRecord& impact,
                        const TrialMeta& meta, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);

    MeasurementTuple mu = measure(result, impact, meta.attacker);

    json decision = decision_to_json(result.decision);
    decision["termination_cause"] = to_string(result.termination_cause);
    decision["trigger"] = to_json(result.trigger);
    decision["agent_id"] = result.agent_id;
    if (result.action_applied) {
        const AppliedAction& a = *result.action_applied;
        decision["action_applied"] = {{"action", a.request.action},
                                      {"target", a.request.target.to_string()},
                                      {"scope", a.request.scope},
                                      {"reason", a.request.reason},
                                      {"apply_time", a.apply_time}};
        decision["late_block"] = result.late_block;
    } else {
        decision["action_applied"] = nullptr;
    }

    json measurement = {{"trial_id", meta.trial_id},
                        {"configuration",
                         {{"agent_id", meta.config.agent_id},
                          {"backend_id", meta.config.backend_id},
                          {"mode", to_string(meta.config.mode)}}},
                        {"measurement", measurement_to_json(mu)},
                        {"termination_cause", to_string(result.termination_cause)}};

    write_json(out_dir / "transcript.json", to_json(result.transcript));
    write_json(out_dir / "slice.json", to_json(result.slice));
    write_json(out_dir / "decision.json", decision);
    write_json(out_dir / "impact.json", to_json(impact));
    write_json(out_dir / "measurement.json", measurement);

    TrialRecord record;
    record.trial_id = meta.trial_id;
    record.config = meta.config;
    record.measurement = mu;

    std::string hash_lines;
    for (const char* name : kTrialFiles) {
        std::string digest = sha256_file_hex(out_dir / name);
        record.files.push_back({name, digest});
        hash_lines += digest + "  " + name + "\n";
    }
    write_text(out_dir / "hashes.sha256", hash_lines);
    return record;
}

uint32_t OutcomeCounts::total() const {
    uint32_t sum = 0;
    for (auto c : counts) sum += c;
    return sum;
}

namespace {

// Reads one trial directory; returns nullopt (with a reason) when a digest
// does not verify.
std::optional<TrialRecord> read_trial(const std::filesystem::path& dir, ExcludedTrial& why) {
    why.trial_id = dir.filename().string();

    std::ifstream hashes(dir / "hashes.sha256");
    if (!hashes) {
        why.file = "hashes.sha256";
        why.reason = "missing hash file";
        return std::nullopt;
    }
    std::map<std::string, std::string> listed;
    std::string line;
    while (std::getline(hashes, line)) {
        if (line.empty()) continue;
        auto sep = line.find("  ");
        if (sep == std::string::npos || sep != 64) {
            why.file = "hashes.sha256";
            why.reason = "malformed hash line";
            return std::nullopt;
        }
        listed[line.substr(sep + 2)] = line.substr(0, sep);
    }

    for (const char* name : kTrialFiles) {
        auto it = listed.find(name);
        if (it == listed.end()) {
            why.file = name;
            why.reason = "not covered by hashes.sha256";
            return std::nullopt;
        }
        if (!std::filesystem::exists(dir / name)) {
            why.file = name;
            why.reason = "file missing";
            return std::nullopt;
        }
        std::string actual = sha256_file_hex(dir / name);
        if (actual != it->second) {
            why.file = name;
            why.reason = "digest mismatch";
            return std::nullopt;
        }
    }

    TrialRecord record;
    try {
        json j = load_json_file(dir / "measurement.json");
        record.trial_id = j.at("trial_id").get<std::string>();
        const json& cfg = j.at("configuration");
        record.config.agent_id = cfg.at("agent_id").get<std::string>();
        record.config.backend_id = cfg.at("backend_id").get<std::string>();
        auto mode = grounding_mode_from_string(cfg.at("mode").get<std::string>());
        if (!mode) throw ValidationError("unknown grounding mode");
        record.config.mode = *mode;
        record.measurement = measurement_from_json(j.at("measurement"));
    } catch (const std::exception& e) {
        why.file = "measurement.json";
        why.reason = e.what();
        return std::nullopt;
    }
    for (const auto& [name, digest] : listed) record.files.push_back({name, digest});
    return record;
}

std::optional<double> mean_of(const std::vector<double>& values) {
    if (values.empty()) return std::nullopt;
    double sum = 0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

} // namespace

DatasetSummary analyze(const std::filesystem::path& dataset_dir) {
    if (!std::filesystem::is_directory(dataset_dir))
        throw ValidationError("dataset directory does not exist: " + dataset_dir.string());

    std::vector<std::filesystem::path> trial_dirs;
    for (const auto& entry : std::filesystem::directory_iterator(dataset_dir))
        if (entry.is_directory() && std::filesystem::exists(entry.path() / "measurement.json"))
            trial_dirs.push_back(entry.path());
    std::sort(trial_dirs.begin(), trial_dirs.end());

    DatasetSummary s;
    std::map<TrialConfig, std::vector<const TrialRecord*>> by_config;
    std::map<std::string, std::vector<const TrialRecord*>> by_backend;

    for (const auto& dir : trial_dirs) {
        ExcludedTrial why;
        auto record = read_trial(dir, why);
        if (!record) {
            s.excluded.push_back(why);
            continue;
        }
        s.trials.push_back(std::move(*record));
    }

    std::vector<double> all_deltas;
    for (const auto& t : s.trials) {
        s.overall.add(t.measurement.o);
        by_config[t.config].push_back(&t);
        by_backend[t.config.backend_id].push_back(&t);
        if (t.measurement.delta) all_deltas.push_back(*t.measurement.delta);
    }
    s.total = s.overall.total();
    s.mean_delta = mean_of(all_deltas);
    s.containment_rate =
        s.total == 0 ? 0.0
                     : static_cast<double>(s.overall[OutcomeClass::valid_block]) / s.total;

    for (const auto& [config, trials] : by_config) {
        ConfigSummary cs;
        cs.config = config;
        std::vector<double> deltas;
        for (const auto* t : trials) {
            cs.counts.add(t->measurement.o);
            if (t->measurement.delta) deltas.push_back(*t->measurement.delta);
            if (t->measurement.o != OutcomeClass::valid_block) {
                auto hf = std::make_pair(t->measurement.h, t->measurement.f);
                if (std::find(cs.noblock_impacts.begin(), cs.noblock_impacts.end(), hf) ==
                    cs.noblock_impacts.end())
                    cs.noblock_impacts.push_back(hf);
            }
        }
        cs.mean_delta = mean_of(deltas);
        s.per_configuration.push_back(std::move(cs));
    }

    for (const auto& [backend, trials] : by_backend) {
        BackendSummary bs;
        bs.backend_id = backend;
        std::vector<double> deltas;
        for (const auto* t : trials) {
            bs.counts.add(t->measurement.o);
            if (t->measurement.delta) deltas.push_back(*t->measurement.delta);
        }
        bs.mean_delta = mean_of(deltas);
        bs.contained_rate = trials.empty() ? 0.0
                                           : static_cast<double>(bs.counts[OutcomeClass::valid_block]) /
                                                 bs.counts.total();
        s.per_backend.push_back(std::move(bs));
    }

    // Count conservation across the three views.
    uint32_t config_total = 0, backend_total = 0;
    for (const auto& cs : s.per_configuration) config_total += cs.counts.total();
    for (const auto& bs : s.per_backend) backend_total += bs.counts.total();
    if (config_total != s.total || backend_total != s.total)
        throw ValidationError("summary count conservation violated");

    return s;
}

namespace {

std::string bsn(const OutcomeCounts& c) {
    std::string out = std::to_string(c[OutcomeClass::valid_block]) + "/" +
                      std::to_string(c[OutcomeClass::schema_fail]) + "/" +
                      std::to_string(c[OutcomeClass::no_action]);
    uint32_t other = c[OutcomeClass::unsupported_action] + c[OutcomeClass::ungrounded] +
                     c[OutcomeClass::budget_exhaust];
    if (other > 0) out += " (+" + std::to_string(other) + " other)";
    return out;
}

std::string impacts_text(const std::vector<std::pair<uint32_t, uint32_t>>& impacts) {
    if (impacts.empty()) return "--";
    std::string out;
    for (const auto& [h, f] : impacts) {
        if (!out.empty()) out += ",";
        out += std::to_string(h) + "/" + std::to_string(f);
    }
    return out;
}

} // namespace

std::string summary_table(const DatasetSummary& s) {
    std::ostringstream out;
    auto pad = [](std::string text, size_t width) {
        if (text.size() < width) text.append(width - text.size(), ' ');
        return text;
    };

    out << pad("configuration", 46) << pad("B/S/N", 10) << pad("delta(s)", 10)
        << "no-block impact\n";
    for (const auto& cs : s.per_configuration) {
        out << pad(cs.config.agent_id + " + " + cs.config.backend_id, 46)
            << pad(bsn(cs.counts), 10)
            << pad(cs.mean_delta ? format_fixed1(*cs.mean_delta) : "--", 10)
            << impacts_text(cs.noblock_impacts) << "\n";
    }
    out << "\n" << pad("backend", 46) << pad("B/S/N", 10) << pad("delta(s)", 10) << "contained\n";
    for (const auto& bs : s.per_backend) {
        out << pad(bs.backend_id, 46) << pad(bsn(bs.counts), 10)
            << pad(bs.mean_delta ? format_fixed1(*bs.mean_delta) : "--", 10)
            << format_fixed1(bs.contained_rate * 100.0) << "%\n";
    }
    out << "\n" << pad("all " + std::to_string(s.total) + " trials", 46) << pad(bsn(s.overall), 10)
        << pad(s.mean_delta ? format_fixed1(*s.mean_delta) : "--", 10)
        << format_fixed1(s.containment_rate * 100.0) << "% contained\n";
    for (const auto& ex : s.excluded)
        out << "excluded: " << ex.trial_id << " (" << ex.file << ": " << ex.reason << ")\n";
    return out.str();
}

json summary_json(const DatasetSummary& s) {
    auto counts_json = [](const OutcomeCounts& c) {
        json j;
        for (size_t i = 0; i < kOutcomeCount; ++i)
            j[to_string(static_cast<OutcomeClass>(i))] = c.counts[i];
        return j;
    };

    json per_config = json::array();
    for (const auto& cs : s.per_configuration) {
        json impacts = json::array();
        for (const auto& [h, f] : cs.noblock_impacts) impacts.push_back({{"h", h}, {"f", f}});
        per_config.push_back({{"agent_id", cs.config.agent_id},
                              {"backend_id", cs.config.backend_id},
                              {"mode", to_string(cs.config.mode)},
                              {"counts", counts_json(cs.counts)},
                              {"mean_delta", optional_to_json(cs.mean_delta)},
                              {"noblock_impacts", impacts}});
    }
    json per_backend = json::array();
    for (const auto& bs : s.per_backend)
        per_backend.push_back({{"backend_id", bs.backend_id},
                               {"counts", counts_json(bs.counts)},
                               {"mean_delta", optional_to_json(bs.mean_delta)},
                               {"contained_rate", bs.contained_rate}});
    json excluded = json::array();
    for (const auto& ex : s.excluded)
        excluded.push_back({{"trial_id", ex.trial_id}, {"file", ex.file}, {"reason", ex.reason}});

    json trials = json::array();
    for (const auto& t : s.trials)
        trials.push_back({{"trial_id", t.trial_id},
                          {"agent_id", t.config.agent_id},
                          {"backend_id", t.config.backend_id},
                          {"mode", to_string(t.config.mode)},
                          {"measurement", measurement_to_json(t.measurement)}});

    return {{"total", s.total},
            {"overall", counts_json(s.overall)},
            {"per_configuration", per_config},
            {"per_backend", per_backend},
            {"mean_delta", optional_to_json(s.mean_delta)},
            {"containment_rate", s.containment_rate},
            {"trials", trials},
            {"excluded", excluded}};
}

DatasetDigest hash_dataset(const std::filesystem::path& dataset_dir) {
    if (!std::filesystem::is_directory(dataset_dir))
        throw ValidationError("dataset directory does not exist: " + dataset_dir.string());

    std::vector<std::string> rel_paths;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dataset_dir)) {
        if (!entry.is_regular_file()) continue;
        auto rel = std::filesystem::relative(entry.path(), dataset_dir).generic_string();
        if (rel == "DATASET.sha256" || rel == "DATASET.id") continue;
        rel_paths.push_back(rel);
    }
    std::sort(rel_paths.begin(), rel_paths.end());

    std::string body;
    for (const auto& rel : rel_paths)
        body += sha256_file_hex(dataset_dir / rel) + "  " + rel + "\n";

    DatasetDigest digest;
    digest.manifest_path = dataset_dir / "DATASET.sha256";
    write_text(digest.manifest_path, body);
    digest.manifest_digest = sha256_hex(body);
    write_text(dataset_dir / "DATASET.id", digest.manifest_digest + "  DATASET.sha256\n");
    return digest;
}

bool verify_dataset(const std::filesystem::path& dataset_dir, std::vector<std::string>& problems) {
    std::ifstream manifest(dataset_dir / "DATASET.sha256");
    if (!manifest) {
        problems.push_back("DATASET.sha256 missing");
        return false;
    }

    std::set<std::string> listed;
    std::string line;
    while (std::getline(manifest, line)) {
        if (line.empty()) continue;
        auto sep = line.find("  ");
        if (sep != 64) {
            problems.push_back("malformed manifest line: " + line);
            continue;
        }
        std::string digest = line.substr(0, sep);
        std::string rel = line.substr(sep + 2);
        listed.insert(rel);
        auto path = dataset_dir / rel;
        if (!std::filesystem::exists(path)) {
            problems.push_back(rel + ": file missing");
            continue;
        }
        if (sha256_file_hex(path) != digest) problems.push_back(rel + ": digest mismatch");
    }

    for (const auto& entry : std::filesystem::recursive_directory_iterator(dataset_dir)) {
        if (!entry.is_regular_file()) continue;
        auto rel = std::filesystem::relative(entry.path(), dataset_dir).generic_string();
        if (rel == "DATASET.sha256" || rel == "DATASET.id") continue;
        if (listed.count(rel) == 0) problems.push_back(rel + ": not listed in DATASET.sha256");
    }

    std::ifstream id_file(dataset_dir / "DATASET.id");
    if (!id_file) {
        problems.push_back("DATASET.id missing");
    } else {
        std::string id_line;
        std::getline(id_file, id_line);
        std::ifstream manifest_again(dataset_dir / "DATASET.sha256", std::ios::binary);
        std::ostringstream buf;
        buf << manifest_again.rdbuf();
        std::string expected = sha256_hex(buf.str()) + "  DATASET.sha256";
        if (id_line != expected) problems.push_back("DATASET.id does not match DATASET.sha256");
    }

    return problems.empty();
}

} // namespace pocket
