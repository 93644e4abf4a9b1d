#pragma once
#include "pocket/boundary.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

namespace pocket {

// Exit-code contract: 0 = evaluable outcome(s), 1 = validation/user error,
// 2 = run-orchestration failure.
constexpr int kExitOk = 0;
constexpr int kExitUserError = 1;
constexpr int kExitOrchestration = 2;

struct RunConfig {
    std::filesystem::path scenario_path;
    std::filesystem::path agent_dir;
    std::filesystem::path out_dir;
    std::string backend_spec; // empty -> manifest backend (live); "script:<path>" -> replay
    GroundingMode mode = GroundingMode::runtime;
    uint64_t seed = 0; // 0 -> use the scenario file's seed
    bool allow_backend_override = false;
    uint32_t max_report_attempts = 1;
    std::string trial_id; // empty -> script trial_id, else out_dir name
};

int cmd_validate(const std::filesystem::path& dir, std::ostream& out, std::ostream& err);
int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_replay(const std::filesystem::path& fixtures_dir, const std::filesystem::path& out_dir,
               const std::filesystem::path& scenario_path, const std::string& format,
               uint64_t seed, std::ostream& out, std::ostream& err);
int cmd_analyze(const std::filesystem::path& dataset_dir, const std::string& format,
                std::ostream& out, std::ostream& err);
int cmd_hash_verify(const std::filesystem::path& dataset_dir, std::ostream& out, std::ostream& err);

} // namespace pocket
