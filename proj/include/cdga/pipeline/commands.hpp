#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stop_token>
#include <string>

#include <nlohmann/json.hpp>

#include "cdga/generator/backend.hpp"
#include "cdga/pipeline/config.hpp"

namespace cdga {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitFatal = 1;
inline constexpr int kExitPartial = 2;

struct CommandOptions {
  bool resume = false;
  bool stub_backend = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::ostream* log = nullptr;  // progress messages; nullptr silences them
  std::stop_token stop;
  // Used instead of the configured backend when set (tests, embedding hosts).
  std::shared_ptr<LdmBackend> backend;
};

struct CommandResult {
  int exit_code = kExitSuccess;
  bool skipped = false;  // stage already complete for this config
  nlohmann::json summary = nlohmann::json::object();
};

// Applies --seed / --out / --stub-backend on top of the file's values.
ExperimentConfig apply_overrides(ExperimentConfig config, const CommandOptions& options);

// Output layout under config.output_root:
//   ledger.jsonl
//   scan/manifest.json, scan/counts.json
//   generate/{plan.json, records.json, run_report.json, augmented_manifest.json, augmented/, work/}
//   benchmark/{runs/, trials.json, tables/<rule>.{csv,txt}}
//   diagnose/{report.json, plots/, tsne/}
//   report/summary.md
CommandResult cmd_scan(const ExperimentConfig& config, const CommandOptions& options);
CommandResult cmd_generate(const ExperimentConfig& config, const CommandOptions& options);
CommandResult cmd_benchmark(const ExperimentConfig& config, const CommandOptions& options);
CommandResult cmd_diagnose(const ExperimentConfig& config, const CommandOptions& options);
CommandResult cmd_report(const ExperimentConfig& config, const CommandOptions& options);

}  // namespace cdga
