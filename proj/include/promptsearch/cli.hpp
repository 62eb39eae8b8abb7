#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace promptsearch::cli {

/// Exit statuses shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;    // bad config, unreadable inputs, corrupt files
inline constexpr int kExitRuntime = 3;  // backend or runtime failure

/// Runs the search from a config file and writes best_prompt.txt, tree.json
/// and report.md into the output directory. `seed` and `out_dir` override
/// the config file values. A mid-run backend failure still writes the
/// partial checkpoint and exits 3.
int cmd_optimize(const std::string& config_path, std::optional<std::uint64_t> seed,
                 const std::optional<std::string>& out_dir);

/// Scores a prompt file over a dataset (optionally a seeded sample of it)
/// sample-by-sample and prints one JSON object:
/// {"accuracy","correct","total","malformed"}. Without --config the model
/// roles fall back to the built-in deterministic stand-in.
int cmd_eval(const std::string& prompt_path, const std::string& dataset_path,
             std::optional<double> fraction, std::optional<std::uint64_t> seed,
             const std::optional<std::string>& config_path);

/// Writes per-sample verdict + reason records (JSON Lines) for the whole
/// dataset using batched comment prompts. A partial output file is removed
/// on failure.
int cmd_comment(const std::string& prompt_path, const std::string& dataset_path,
                const std::string& out_path, const std::optional<std::string>& config_path);

/// Prints the best root-to-leaf path of a checkpoint with per-edge Q, r and
/// visit counts, then the best prompt. Output is a pure function of the
/// checkpoint bytes.
int cmd_report(const std::string& tree_path);

}  // namespace promptsearch::cli
