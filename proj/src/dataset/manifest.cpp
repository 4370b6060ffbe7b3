#include "cdga/dataset/manifest.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_set>

#include "cdga/core/error.hpp"
#include "cdga/core/fs.hpp"
#include "cdga/core/image.hpp"

namespace cdga {

namespace {

std::vector<fs::path> sorted_children(const fs::path& dir, bool directories) {
  std::vector<fs::path> out;
  for (const auto& de : fs::directory_iterator(dir)) {
    if (directories ? de.is_directory() : !de.is_directory()) out.push_back(de.path());
  }
  std::sort(out.begin(), out.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  return out;
}

}  // namespace

std::optional<int> DomainDatasetManifest::domain_index(const std::string& name) const {
  const auto it = std::lower_bound(domains.begin(), domains.end(), name);
  if (it == domains.end() || *it != name) return std::nullopt;
  return static_cast<int>(it - domains.begin());
}

std::optional<int> DomainDatasetManifest::class_index(const std::string& name) const {
  const auto it = std::lower_bound(classes.begin(), classes.end(), name);
  if (it == classes.end() || *it != name) return std::nullopt;
  return static_cast<int>(it - classes.begin());
}

int DomainDatasetManifest::require_domain(const std::string& name) const {
  const auto idx = domain_index(name);
  if (!idx) throw InvalidArgument("unknown domain '" + name + "'");
  return *idx;
}

const ManifestEntry* DomainDatasetManifest::find(const std::string& id) const {
  for (const auto& e : entries) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

void DomainDatasetManifest::validate() const {
  if (!std::is_sorted(domains.begin(), domains.end()) ||
      std::adjacent_find(domains.begin(), domains.end()) != domains.end()) {
    throw InvalidArgument("manifest domains must be unique and sorted");
  }
  if (!std::is_sorted(classes.begin(), classes.end()) ||
      std::adjacent_find(classes.begin(), classes.end()) != classes.end()) {
    throw InvalidArgument("manifest classes must be unique and sorted");
  }
  std::unordered_set<std::string> ids;
  for (const auto& e : entries) {
    if (e.domain < 0 || e.domain >= static_cast<int>(domains.size()) || e.label < 0 ||
        e.label >= static_cast<int>(classes.size())) {
      throw InvalidArgument("manifest entry " + e.id + " has out-of-range indices");
    }
    if (e.path.is_absolute() || e.path.lexically_normal().string().starts_with("..")) {
      throw InvalidArgument("manifest entry " + e.id + " does not resolve under root");
    }
    if (!ids.insert(e.id).second) throw InvalidArgument("duplicate manifest id " + e.id);
  }
}

DomainDatasetManifest scan_dataset(const fs::path& root) {
  if (!fs::is_directory(root)) throw IoError("dataset root does not exist: " + root.string());

  DomainDatasetManifest m;
  m.root = root;

  // First pass collects the class vocabulary across all domains.
  std::set<std::string> class_names;
  const auto domain_dirs = sorted_children(root, true);
  for (const auto& d : domain_dirs) {
    for (const auto& c : sorted_children(d, true)) class_names.insert(c.filename().string());
  }
  m.classes.assign(class_names.begin(), class_names.end());
  for (const auto& d : domain_dirs) m.domains.push_back(d.filename().string());

  for (const auto& stray : sorted_children(root, false)) {
    m.warnings.push_back("skipped non-directory at domain level: " + stray.filename().string());
  }

  for (std::size_t di = 0; di < domain_dirs.size(); ++di) {
    const auto class_dirs = sorted_children(domain_dirs[di], true);
    if (class_dirs.empty()) m.warnings.push_back("empty domain directory: " + m.domains[di]);
    for (const auto& stray : sorted_children(domain_dirs[di], false)) {
      m.warnings.push_back("skipped non-directory at class level: " + m.domains[di] + "/" +
                           stray.filename().string());
    }
    for (const auto& cdir : class_dirs) {
      const std::string cname = cdir.filename().string();
      const int ci = *m.class_index(cname);
      std::size_t kept = 0;
      std::unordered_set<std::string> stems;
      for (const auto& file : sorted_children(cdir, false)) {
        const std::string rel_name = m.domains[di] + "/" + cname + "/" + file.filename().string();
        if (!has_image_extension(file)) {
          m.warnings.push_back("skipped non-image file: " + rel_name);
          continue;
        }
        const std::string stem = file.stem().string();
        if (!stems.insert(stem).second) {
          m.warnings.push_back("skipped file with duplicate stem: " + rel_name);
          continue;
        }
        m.entries.push_back(ManifestEntry{static_cast<int>(di), ci,
                                          fs::path(m.domains[di]) / cname / file.filename(),
                                          m.domains[di] + "/" + cname + "/" + stem});
        ++kept;
      }
      for (const auto& sub : sorted_children(cdir, true)) {
        m.warnings.push_back("skipped nested directory: " + m.domains[di] + "/" + cname + "/" +
                             sub.filename().string());
      }
      if (kept == 0) m.warnings.push_back("empty class directory: " + m.domains[di] + "/" + cname);
    }
  }
  return m;
}

json to_json(const DomainDatasetManifest& manifest) {
  json entries = json::array();
  for (const auto& e : manifest.entries) {
    entries.push_back({{"domain", manifest.domains[e.domain]},
                       {"class", manifest.classes[e.label]},
                       {"path", e.path.generic_string()},
                       {"id", e.id}});
  }
  return {{"root", manifest.root.generic_string()},
          {"domains", manifest.domains},
          {"classes", manifest.classes},
          {"entries", std::move(entries)}};
}

DomainDatasetManifest manifest_from_json(const json& doc) {
  DomainDatasetManifest m;
  try {
    m.root = doc.at("root").get<std::string>();
    m.domains = doc.at("domains").get<std::vector<std::string>>();
    m.classes = doc.at("classes").get<std::vector<std::string>>();
    for (const auto& e : doc.at("entries")) {
      const auto d = m.domain_index(e.at("domain").get<std::string>());
      const auto c = m.class_index(e.at("class").get<std::string>());
      if (!d || !c) throw InvalidArgument("manifest entry references unknown domain/class");
      m.entries.push_back(ManifestEntry{*d, *c, fs::path(e.at("path").get<std::string>()),
                                        e.at("id").get<std::string>()});
    }
  } catch (const json::exception& ex) {
    throw IoError(std::string("malformed manifest: ") + ex.what());
  }
  m.validate();
  return m;
}

void save_manifest(const DomainDatasetManifest& manifest, const fs::path& path) {
  write_json(path, to_json(manifest));
}

DomainDatasetManifest load_manifest(const fs::path& path) {
  return manifest_from_json(read_json(path));
}

}  // namespace cdga
