#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace shaped_pick::cli {

inline constexpr const char* kRunRootEnv = "SHAPED_PICK_RUN_ROOT";
inline constexpr double kDefaultAttainmentTol = 0.02;

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsageError = 2;
inline constexpr int kHalted = 3;

// Resolves a missing --out against $SHAPED_PICK_RUN_ROOT; nullopt if neither.
std::optional<std::filesystem::path> resolve_out_dir(
    const std::optional<std::filesystem::path>& out, const std::string& leaf);

int cmd_train(const std::filesystem::path& config_path,
              const std::filesystem::path& out_dir,
              std::optional<std::uint64_t> seed_override, std::ostream& out,
              std::ostream& err, bool verbose = false);

// Greedy episodes from a checkpoint. The environment comes from
// `config_path`, or from config.json of the run the checkpoint belongs to.
int cmd_rollout(const std::filesystem::path& checkpoint_path, int n,
                const std::filesystem::path& out_dir, std::uint64_t seed,
                const std::optional<std::filesystem::path>& config_path,
                double attainment_tol, std::ostream& out, std::ostream& err);

int cmd_compare(const std::vector<std::filesystem::path>& run_dirs,
                double threshold, int window,
                const std::filesystem::path& out_dir, std::ostream& out,
                std::ostream& err);

// Accepts trace CSV files or directories containing them.
int cmd_analyze(const std::vector<std::filesystem::path>& inputs,
                double attainment_tol, const std::string& subject,
                std::ostream& out, std::ostream& err);

// Parses argv and dispatches to the commands above.
int main(int argc, char** argv);

}  // namespace shaped_pick::cli
