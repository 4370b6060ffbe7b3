#pragma once

#include <map>
#include <string>

#include <nlohmann/json.hpp>

namespace cdga {

// Known sections: near_dup, hessian_trace, diversity, robustness, sharpness, tsne.
inline const char* const kDiagnosticSections[] = {"near_dup",   "hessian_trace", "diversity",
                                                   "robustness", "sharpness",     "tsne"};

struct DiagnosticReport {
  std::string config_hash;
  std::map<std::string, nlohmann::json> sections;

  void set(const std::string& section, nlohmann::json value) { sections[section] = std::move(value); }
  // Recorded explicitly so that a disabled section is never silently empty.
  void skip(const std::string& section, const std::string& reason) {
    sections[section] = {{"status", "skipped"}, {"reason", reason}};
  }
  bool skipped(const std::string& section) const;

  nlohmann::json to_json() const;
  static DiagnosticReport from_json(const nlohmann::json& doc);
};

// True when every number anywhere in `doc` is finite.
bool all_finite(const nlohmann::json& doc);

}  // namespace cdga
