#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace cdga {

struct ArtifactRecord {
  std::string kind;  // "manifest", "table", "report", ...
  std::filesystem::path path;  // relative to the output root
  std::string config_hash;
  std::string content_hash;  // sha256 of the file
  std::vector<std::string> parents;  // content hashes of inputs
};

struct StageRecord {
  std::string stage;
  std::string stage_hash;
  std::string config_hash;
  std::vector<ArtifactRecord> artifacts;
};

// Append-only JSON-lines ledger (<output root>/ledger.jsonl). One line per
// completed stage, listing the artifacts it produced.
class RunLedger {
 public:
  explicit RunLedger(std::filesystem::path output_root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path file() const { return root_ / "ledger.jsonl"; }

  // Latest record of `stage` with this stage hash whose artifacts all still
  // exist with unchanged content.
  std::optional<StageRecord> completed(const std::string& stage, const std::string& stage_hash) const;

  // Hashes the given files (relative paths) and appends the stage record.
  StageRecord record(const std::string& stage, const std::string& stage_hash, const std::string& config_hash,
                     const std::vector<std::pair<std::string, std::filesystem::path>>& artifacts,
                     const std::vector<std::string>& parents = {});

  std::vector<StageRecord> entries() const;

 private:
  std::filesystem::path root_;
};

nlohmann::json to_json(const StageRecord& r);
StageRecord stage_record_from_json(const nlohmann::json& doc);

}  // namespace cdga
