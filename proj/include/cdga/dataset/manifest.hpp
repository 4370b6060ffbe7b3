#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace cdga {

struct ManifestEntry {
  int domain = 0;
  int label = 0;  // class index
  std::filesystem::path path;  // relative to the manifest root
  std::string id;              // "<domain>/<class>/<stem>"

  bool operator==(const ManifestEntry&) const = default;
};

// Index of a multi-domain classification dataset laid out as
// <root>/<domain>/<class>/<image>. Domains and classes are sorted
// lexicographically, which fixes their integer indices.
struct DomainDatasetManifest {
  std::filesystem::path root;
  std::vector<std::string> domains;
  std::vector<std::string> classes;
  std::vector<ManifestEntry> entries;
  std::vector<std::string> warnings;  // not serialized

  std::optional<int> domain_index(const std::string& name) const;
  std::optional<int> class_index(const std::string& name) const;
  int require_domain(const std::string& name) const;
  const ManifestEntry* find(const std::string& id) const;

  std::filesystem::path absolute_path(const ManifestEntry& e) const { return root / e.path; }

  // Throws InvalidArgument when an invariant does not hold.
  void validate() const;
};

DomainDatasetManifest scan_dataset(const std::filesystem::path& root);

nlohmann::json to_json(const DomainDatasetManifest& manifest);
DomainDatasetManifest manifest_from_json(const nlohmann::json& doc);

void save_manifest(const DomainDatasetManifest& manifest, const std::filesystem::path& path);
DomainDatasetManifest load_manifest(const std::filesystem::path& path);

}  // namespace cdga
