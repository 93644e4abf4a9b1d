#include "pocket/cli.hpp"
#include "pocket/boundary.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"pocket - manifest-driven defense agents behind a typed enforcement boundary"};
    app.require_subcommand(1);

    std::string format = "table";
    uint64_t seed = 0;

    // validate
    std::string validate_dir;
    auto* validate = app.add_subcommand("validate", "validate an agent package directory");
    validate->add_option("dir", validate_dir, "package directory")->required();

    // run
    pocket::RunConfig run_config;
    std::string run_mode = "runtime";
    auto* run = app.add_subcommand("run", "run one closed-loop trial");
    run->add_option("--scenario", run_config.scenario_path, "scenario file")->required();
    run->add_option("--agent", run_config.agent_dir, "agent package directory")->required();
    run->add_option("--backend", run_config.backend_spec,
                    "backend id, or script:<path> for a recorded session");
    run->add_option("--mode", run_mode, "grounding mode: runtime|post_hoc");
    run->add_option("--out", run_config.out_dir, "trial output directory")->required();
    run->add_option("--seed", run_config.seed, "override the scenario seed (0 = scenario file)");
    run->add_flag("--allow-backend-override", run_config.allow_backend_override,
                  "permit a live backend id that differs from the manifest");
    run->add_option("--max-report-attempts", run_config.max_report_attempts,
                    "rejected-report retries before the outcome is final (default 1)");
    run->add_option("--trial-id", run_config.trial_id, "trial id (default: output directory name)");

    // replay
    std::filesystem::path fixtures_dir, replay_out, replay_scenario;
    auto* replay = app.add_subcommand("replay", "replay every scripted trial in a fixtures tree");
    replay->add_option("--fixtures", fixtures_dir, "fixtures directory (agents/ and trials/)")
        ->required();
    replay->add_option("--out", replay_out, "dataset output directory")->required();
    replay->add_option("--scenario", replay_scenario,
                       "scenario file (default: <fixtures>/scenario.json)");
    replay->add_option("--format", format, "table|json");
    replay->add_option("--seed", seed, "override the scenario seed (0 = scenario file)");

    // analyze
    std::filesystem::path analyze_dir;
    auto* analyze = app.add_subcommand("analyze", "verify digests and summarize a trial dataset");
    analyze->add_option("dir", analyze_dir, "dataset directory")->required();
    analyze->add_option("--format", format, "table|json");

    // hash-verify
    std::filesystem::path verify_dir;
    auto* verify = app.add_subcommand("hash-verify", "check DATASET.sha256 and DATASET.id");
    verify->add_option("dir", verify_dir, "dataset directory")->required();

    CLI11_PARSE(app, argc, argv);

    if (validate->parsed()) return pocket::cmd_validate(validate_dir, std::cout, std::cerr);

    if (run->parsed()) {
        auto mode = pocket::grounding_mode_from_string(run_mode);
        if (!mode) {
            std::cerr << "error: --mode must be runtime or post_hoc\n";
            return pocket::kExitUserError;
        }
        run_config.mode = *mode;
        return pocket::cmd_run(run_config, std::cout, std::cerr);
    }

    if (replay->parsed()) {
        if (replay_scenario.empty()) replay_scenario = fixtures_dir / "scenario.json";
        return pocket::cmd_replay(fixtures_dir, replay_out, replay_scenario, format, seed,
                                  std::cout, std::cerr);
    }

    if (analyze->parsed()) return pocket::cmd_analyze(analyze_dir, format, std::cout, std::cerr);

    if (verify->parsed()) return pocket::cmd_hash_verify(verify_dir, std::cout, std::cerr);

    return pocket::kExitUserError;
}
