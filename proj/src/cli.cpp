#include "pocket/cli.hpp"

#include "pocket/agent_package.hpp"
#include "pocket/arena.hpp"
#include "pocket/backend.hpp"
#include "pocket/dispatcher.hpp"
#include "pocket/errors.hpp"
#include "pocket/json_codec.hpp"
#include "pocket/sim_clock.hpp"
#include "pocket/trace.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

using nlohmann::json;

namespace pocket {

namespace {

Scenario load_scenario_with_seed(const std::filesystem::path& path, uint64_t seed) {
    Scenario scenario = Scenario::load(path);
    if (seed != 0) scenario.timeline.seed = seed;
    return scenario;
}

Trigger trigger_for(const Arena& arena, const std::string& trigger_class) {
    for (const auto& t : arena.triggers())
        if (t.trigger_class == trigger_class) return t;
    throw OrchestrationError("dispatch",
                             "scenario raised no trigger of class '" + trigger_class + "'");
}

void write_orchestration_record(const std::filesystem::path& out_dir, const OrchestrationError& e) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) return;
    std::ofstream out(out_dir / "orchestration_error.json", std::ios::trunc);
    if (!out) return;
    json j = {{"stage", e.stage()}, {"message", e.what()}};
    out << j.dump(2) << "\n";
}

struct TrialOutcome {
    TrialRecord record;
    OutcomeClass outcome;
};

// One scripted trial against a fresh arena; shared by run and replay.
TrialOutcome run_scripted_trial(const Scenario& scenario, const Registry& registry,
                                const ReplayScript& script, GroundingMode mode,
                                const std::filesystem::path& out_dir, uint32_t max_report_attempts) {
    const AgentPackage* pkg = registry.by_id(script.agent_id);
    if (pkg == nullptr)
        throw OrchestrationError("dispatch", "script '" + script.trial_id +
                                                 "' names unknown agent '" + script.agent_id + "'");

    Arena arena(scenario);
    Trigger trigger = trigger_for(arena, pkg->manifest.trigger_class);

    ScriptedBackend backend(script);
    SimClock clock;
    clock.set(trigger.raised_at);
    SessionOptions options;
    options.max_report_attempts = max_report_attempts;

    SessionResult result = run_session(trigger, registry, arena, backend, mode, clock, options);
    if (result.agent_id != script.agent_id)
        throw OrchestrationError("dispatch", "trigger dispatched to '" + result.agent_id +
                                                 "' but script declares '" + script.agent_id + "'");

    ImpactRecord impact = arena.impact();
    TrialMeta meta{script.trial_id,
                   {script.agent_id, script.backend_id, mode},
                   scenario.topology.attacker_endpoint};
    TrialOutcome outcome{write_trial(result, impact, meta, out_dir), result.decision.outcome};
    return outcome;
}

} // namespace

int cmd_validate(const std::filesystem::path& dir, std::ostream& out, std::ostream& err) {
    if (!std::filesystem::is_directory(dir)) {
        out << "MISSING_DIR\tpackage directory does not exist: " << dir.string() << "\n";
        return kExitUserError;
    }

    // Report every missing file, not just the first.
    bool missing = false;
    for (const char* name : {"manifest.json", "prompt.txt", "context.json"}) {
        if (!std::filesystem::exists(dir / name)) {
            out << "MISSING_FILE\tmissing file: " << name << "\n";
            missing = true;
        }
    }
    if (missing) return kExitUserError;

    AgentPackage pkg;
    try {
        pkg = load_package(dir);
    } catch (const PackageLoadError& e) {
        out << e.code() << "\t" << e.what() << "\n";
        return kExitUserError;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUserError;
    }

    auto violations = validate_package(pkg);
    for (const auto& v : violations) out << v.code << "\t" << v.message << "\n";
    return violations.empty() ? kExitOk : kExitUserError;
}

int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err) {
    try {
        Scenario scenario = load_scenario_with_seed(config.scenario_path, config.seed);

        AgentPackage pkg = load_package(config.agent_dir);
        auto violations = validate_package(pkg);
        if (!violations.empty()) {
            for (const auto& v : violations) err << v.code << "\t" << v.message << "\n";
            return kExitUserError;
        }
        const Manifest manifest = pkg.manifest;
        Registry registry;
        registry.register_package(std::move(pkg));

        const std::string script_prefix = "script:";
        bool scripted = config.backend_spec.rfind(script_prefix, 0) == 0;

        if (scripted) {
            ReplayScript script = ReplayScript::load(config.backend_spec.substr(script_prefix.size()));
            if (!config.trial_id.empty()) script.trial_id = config.trial_id;
            if (script.trial_id.empty()) script.trial_id = config.out_dir.filename().string();
            if (script.agent_id.empty()) script.agent_id = manifest.agent_id;

            TrialOutcome trial = run_scripted_trial(scenario, registry, script, config.mode,
                                                    config.out_dir, config.max_report_attempts);
            out << trial.record.trial_id << "\t" << to_string(trial.outcome) << "\t"
                << config.out_dir.string() << "\n";
            return kExitOk;
        }

        // Live adapter path. The manifest backend is binding unless the
        // override flag is set.
        std::string backend_id = config.backend_spec.empty() ? manifest.model_backend
                                                             : config.backend_spec;
        if (backend_id != manifest.model_backend && !config.allow_backend_override)
            throw ValidationError("backend '" + backend_id + "' differs from manifest backend '" +
                                  manifest.model_backend + "'; pass --allow-backend-override");

        auto backend = open_backend(backend_id);
        Arena arena(scenario);
        Trigger trigger = trigger_for(arena, manifest.trigger_class);
        SimClock clock;
        clock.set(trigger.raised_at);
        SessionOptions options;
        options.max_report_attempts = config.max_report_attempts;

        SessionResult result =
            run_session(trigger, registry, arena, *backend, config.mode, clock, options);
        ImpactRecord impact = arena.impact();

        std::string trial_id =
            config.trial_id.empty() ? config.out_dir.filename().string() : config.trial_id;
        TrialMeta meta{trial_id,
                       {manifest.agent_id, backend_id, config.mode},
                       scenario.topology.attacker_endpoint};
        TrialRecord record = write_trial(result, impact, meta, config.out_dir);

        out << record.trial_id << "\t" << to_string(result.decision.outcome) << "\t"
            << config.out_dir.string() << "\n";
        return kExitOk;
    } catch (const OrchestrationError& e) {
        write_orchestration_record(config.out_dir, e);
        err << "orchestration error [" << e.stage() << "]: " << e.what() << "\n";
        return kExitOrchestration;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUserError;
    }
}

int cmd_replay(const std::filesystem::path& fixtures_dir, const std::filesystem::path& out_dir,
               const std::filesystem::path& scenario_path, const std::string& format,
               uint64_t seed, std::ostream& out, std::ostream& err) {
    try {
        Scenario scenario = load_scenario_with_seed(scenario_path, seed);

        Registry registry;
        std::vector<std::filesystem::path> agent_dirs;
        for (const auto& entry : std::filesystem::directory_iterator(fixtures_dir / "agents"))
            if (entry.is_directory()) agent_dirs.push_back(entry.path());
        std::sort(agent_dirs.begin(), agent_dirs.end());
        for (const auto& dir : agent_dirs) registry.register_package(load_package(dir));

        std::vector<std::filesystem::path> trial_dirs;
        for (const auto& entry : std::filesystem::directory_iterator(fixtures_dir / "trials"))
            if (entry.is_directory() && std::filesystem::exists(entry.path() / "script.json"))
                trial_dirs.push_back(entry.path());
        std::sort(trial_dirs.begin(), trial_dirs.end());
        if (trial_dirs.empty()) throw ValidationError("no trial scripts under " + fixtures_dir.string());

        std::filesystem::create_directories(out_dir);
        for (const auto& dir : trial_dirs) {
            ReplayScript script = ReplayScript::load(dir / "script.json");
            TrialOutcome trial = run_scripted_trial(scenario, registry, script, script.mode,
                                                    out_dir / script.trial_id, 1);
            out << trial.record.trial_id << "\t" << to_string(trial.outcome) << "\n";
        }

        DatasetDigest digest = hash_dataset(out_dir);
        out << "dataset sha256: " << digest.manifest_digest << "\n";

        if (format == "json") {
            DatasetSummary summary = analyze(out_dir);
            json j = summary_json(summary);
            j["dataset_sha256"] = digest.manifest_digest;
            out << j.dump(2) << "\n";
        }
        return kExitOk;
    } catch (const OrchestrationError& e) {
        err << "orchestration error [" << e.stage() << "]: " << e.what() << "\n";
        return kExitOrchestration;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUserError;
    }
}

int cmd_analyze(const std::filesystem::path& dataset_dir, const std::string& format,
                std::ostream& out, std::ostream& err) {
    try {
        DatasetSummary summary = analyze(dataset_dir);
        if (format == "json")
            out << summary_json(summary).dump(2) << "\n";
        else
            out << summary_table(summary);

        if (summary.total == 0) {
            err << "error: no verifiable trials in " << dataset_dir.string() << "\n";
            return kExitUserError;
        }
        return summary.excluded.empty() ? kExitOk : kExitUserError;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUserError;
    }
}

int cmd_hash_verify(const std::filesystem::path& dataset_dir, std::ostream& out, std::ostream& err) {
    try {
        std::vector<std::string> problems;
        bool ok = verify_dataset(dataset_dir, problems);
        for (const auto& p : problems) out << "FAIL\t" << p << "\n";
        if (ok) {
            std::ifstream id_file(dataset_dir / "DATASET.id");
            std::string id_line;
            std::getline(id_file, id_line);
            out << "OK\t" << id_line << "\n";
            return kExitOk;
        }
        return kExitUserError;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUserError;
    }
}

} // namespace pocket
