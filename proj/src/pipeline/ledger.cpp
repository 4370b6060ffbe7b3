#include "cdga/pipeline/ledger.hpp"

#include <fstream>

#include "cdga/core/error.hpp"
#include "cdga/core/fs.hpp"
#include "cdga/core/hash.hpp"

namespace cdga {

json to_json(const StageRecord& r) {
  json arts = json::array();
  for (const auto& a : r.artifacts) {
    arts.push_back({{"kind", a.kind},
                    {"path", a.path.generic_string()},
                    {"config_hash", a.config_hash},
                    {"content_hash", a.content_hash},
                    {"parents", a.parents}});
  }
  return {{"stage", r.stage}, {"stage_hash", r.stage_hash}, {"config_hash", r.config_hash}, {"artifacts", arts}};
}

StageRecord stage_record_from_json(const json& doc) {
  StageRecord r;
  r.stage = doc.at("stage").get<std::string>();
  r.stage_hash = doc.at("stage_hash").get<std::string>();
  r.config_hash = doc.value("config_hash", "");
  for (const auto& a : doc.at("artifacts")) {
    r.artifacts.push_back({a.at("kind").get<std::string>(), a.at("path").get<std::string>(),
                           a.value("config_hash", ""), a.at("content_hash").get<std::string>(),
                           a.value("parents", std::vector<std::string>{})});
  }
  return r;
}

RunLedger::RunLedger(fs::path output_root) : root_(std::move(output_root)) {}

std::vector<StageRecord> RunLedger::entries() const {
  std::vector<StageRecord> out;
  if (!fs::exists(file())) return out;
  std::ifstream in(file());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(stage_record_from_json(json::parse(line)));
    } catch (const std::exception&) {
      // A torn final line from an interrupted append is ignored.
    }
  }
  return out;
}

std::optional<StageRecord> RunLedger::completed(const std::string& stage, const std::string& stage_hash) const {
  const auto all = entries();
  for (auto it = all.rbegin(); it != all.rend(); ++it) {
    if (it->stage != stage || it->stage_hash != stage_hash) continue;
    bool intact = true;
    for (const auto& a : it->artifacts) {
      const fs::path p = root_ / a.path;
      if (!fs::is_regular_file(p) || sha256_file(p) != a.content_hash) {
        intact = false;
        break;
      }
    }
    if (intact) return *it;
  }
  return std::nullopt;
}

StageRecord RunLedger::record(const std::string& stage, const std::string& stage_hash,
                              const std::string& config_hash,
                              const std::vector<std::pair<std::string, fs::path>>& artifacts,
                              const std::vector<std::string>& parents) {
  StageRecord r{stage, stage_hash, config_hash, {}};
  for (const auto& [kind, rel] : artifacts) {
    r.artifacts.push_back({kind, rel, config_hash, sha256_file(root_ / rel), parents});
  }
  fs::create_directories(root_);
  append_line(file(), to_json(r).dump());
  return r;
}

}  // namespace cdga
