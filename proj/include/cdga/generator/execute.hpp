#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stop_token>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cdga/dataset/manifest.hpp"
#include "cdga/generator/backend.hpp"
#include "cdga/generator/plan.hpp"

namespace cdga {

struct SyntheticRecord {
  std::filesystem::path image_path;
  std::string task_id;
  std::string source_entry;
  std::string source_domain;
  std::string guidance_domain;
  std::string class_label;
  int slot = 0;
  nlohmann::json backend_params = nlohmann::json::object();  // includes "seed"

  bool operator==(const SyntheticRecord&) const = default;
};

nlohmann::json to_json(const SyntheticRecord& record);
SyntheticRecord record_from_json(const nlohmann::json& doc);
void save_records(const std::vector<SyntheticRecord>& records, const std::filesystem::path& path);
std::vector<SyntheticRecord> load_records(const std::filesystem::path& path);

struct TaskFailure {
  std::string task;
  std::string reason;
};

struct RunReport {
  std::size_t tasks_total = 0;
  std::size_t tasks_done = 0;
  std::size_t tasks_resumed = 0;  // completed by an earlier execution
  std::size_t backend_calls = 0;
  std::vector<TaskFailure> failures;
  double wall_time = 0.0;  // seconds
  bool interrupted = false;

  // "complete", "partial" (some tasks failed) or "interrupted".
  std::string status() const;
};

nlohmann::json to_json(const RunReport& report);

struct ExecuteOptions {
  std::filesystem::path work_dir;  // generated images and per-task checkpoints
  int workers = 1;
  int max_retries = 2;  // attempts per task = 1 + max_retries
  std::stop_token stop;  // requested stop ends the run after in-flight tasks
};

struct ExecutionResult {
  std::vector<SyntheticRecord> records;  // plan order, slots ascending
  RunReport report;
};

// Runs every task against the backend. Tasks whose checkpoint already exists
// under work_dir are not re-sent. Throws BackendError before generating
// anything when the backend lacks a capability the plan needs.
ExecutionResult execute_plan(const GenerationPlan& plan, LdmBackend& backend,
                             const ExecuteOptions& options);

// Generated pseudo-domain naming: "gen_<source>__to__<guidance>".
std::string generated_domain_name(const std::string& source, const std::string& guidance);

struct GeneratedDomain {
  std::string source;
  std::string guidance;
};
std::optional<GeneratedDomain> parse_generated_domain(const std::string& name);

// Copies the original domains and writes one pseudo-domain directory per
// (source, guidance) pair with files <class>/<source-stem>__s<slot>.png.
// Returns the manifest of the combined tree. Existing files are an error
// unless `resume` is set, in which case they are left in place.
DomainDatasetManifest materialize_augmented_dataset(const std::vector<SyntheticRecord>& records,
                                                    const DomainDatasetManifest& original,
                                                    const std::filesystem::path& out_root,
                                                    bool resume = false);

}  // namespace cdga
