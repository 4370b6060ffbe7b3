#include "cdga/diagnostics/report.hpp"

#include <cmath>

namespace cdga {

bool DiagnosticReport::skipped(const std::string& section) const {
  const auto it = sections.find(section);
  return it != sections.end() && it->second.is_object() && it->second.value("status", "") == "skipped";
}

nlohmann::json DiagnosticReport::to_json() const {
  nlohmann::json doc{{"config_hash", config_hash}};
  for (const auto& [name, value] : sections) doc[name] = value;
  return doc;
}

DiagnosticReport DiagnosticReport::from_json(const nlohmann::json& doc) {
  DiagnosticReport r;
  r.config_hash = doc.value("config_hash", "");
  for (const auto& [key, value] : doc.items()) {
    if (key != "config_hash") r.sections[key] = value;
  }
  return r;
}

bool all_finite(const nlohmann::json& doc) {
  if (doc.is_number_float()) return std::isfinite(doc.get<double>());
  if (doc.is_structured()) {
    for (const auto& v : doc) {
      if (!all_finite(v)) return false;
    }
  }
  return true;
}

}  // namespace cdga
