#include "cdga/pipeline/config.hpp"

#include <algorithm>
#include <set>

#include "cdga/core/error.hpp"
#include "cdga/core/fs.hpp"
#include "cdga/core/hash.hpp"
#include "cdga/trainer/selection.hpp"

namespace cdga {

namespace {

void check_keys(const json& doc, const std::set<std::string>& allowed, const std::string& where) {
  if (!doc.is_object()) throw InvalidArgument(where + " must be an object");
  for (const auto& [key, value] : doc.items()) {
    if (!allowed.count(key)) throw InvalidArgument("unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read(const json& doc, const char* key, T& out) {
  if (doc.contains(key)) out = doc.at(key).get<T>();
}

fs::path resolve(const fs::path& p, const fs::path& base) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return (base / p).lexically_normal();
}

json backend_json(const BackendConfig& b) {
  return {{"kind", b.kind}, {"url", b.url}, {"params", b.params}, {"workers", b.workers},
          {"max_retries", b.max_retries}, {"timeout_seconds", b.timeout_seconds}};
}

json augmentation_json(const AugmentationConfig& a) {
  json j{{"mode", std::string(to_string(a.kind))},
         {"b", a.balanced ? json("balanced") : json(a.b)},
         {"descriptions", a.descriptions}};
  j["target_description"] = a.target_description ? json(*a.target_description) : json(nullptr);
  return j;
}

json search_json(const SearchConfig& s) {
  json j{{"n_hparams", s.n_hparams}, {"n_trials", s.n_trials}, {"steps", s.steps},
         {"checkpoint_every", s.checkpoint_every}, {"holdout_fraction", s.holdout_fraction}};
  j["space"] = s.space ? to_json(*s.space) : json(nullptr);
  return j;
}

json diagnostics_json(const DiagnosticsConfig& d) {
  return {{"near_dup", d.near_dup},
          {"tsne", d.tsne},
          {"hessian", d.hessian},
          {"diversity", d.diversity},
          {"robustness", d.robustness},
          {"sharpness", d.sharpness},
          {"encoder", d.encoder},
          {"encoder_url", d.encoder_url},
          {"near_dup_threshold", d.near_dup_threshold},
          {"diversity_bins", d.diversity_bins},
          {"rho_grid", d.rho_grid},
          {"pgd_rho", d.pgd_rho},
          {"pgd_step", d.pgd_step},
          {"pgd_k_grid", d.pgd_k_grid},
          {"sharpness_rho", d.sharpness_rho},
          {"sharpness_steps", d.sharpness_steps},
          {"sharpness_restarts", d.sharpness_restarts},
          {"tsne_iterations", d.tsne_iterations},
          {"max_points_per_domain", d.max_points_per_domain}};
}

std::string hash_of(const json& j) { return sha256_hex(j.dump()); }

}  // namespace

GeneratedUse algorithm_generated_use(const std::string& algorithm) {
  if (algorithm == "ERM") return GeneratedUse::kNone;
  if (algorithm == "ERM+CDGA") return GeneratedUse::kCdga;
  if (algorithm == "ERM+CDGA*") return GeneratedUse::kCdgaStar;
  throw InvalidArgument("unknown algorithm '" + algorithm + "' (expected ERM, ERM+CDGA or ERM+CDGA*)");
}

std::vector<std::string> ExperimentConfig::resolved_targets(const std::vector<std::string>& domains) const {
  if (targets.empty()) return domains;
  for (const auto& t : targets) {
    if (std::find(domains.begin(), domains.end(), t) == domains.end()) {
      throw InvalidArgument("target domain '" + t + "' is not in the dataset");
    }
  }
  return targets;
}

void ExperimentConfig::validate() const {
  if (dataset_root.empty()) throw InvalidArgument("config: dataset_root is required");
  if (!fs::is_directory(dataset_root)) {
    throw InvalidArgument("config: dataset_root does not exist: " + dataset_root.string());
  }
  std::set<std::string> seen;
  for (const auto& t : targets) {
    if (!seen.insert(t).second) throw InvalidArgument("config: target '" + t + "' listed twice");
  }
  if (augmentation.b < 1) throw InvalidArgument("config: augmentation b must be >= 1");
  if (backend.kind != "stub" && backend.kind != "http") {
    throw InvalidArgument("config: backend kind must be 'stub' or 'http'");
  }
  if (backend.kind == "http" && backend.url.empty()) throw InvalidArgument("config: http backend needs a url");
  if (backend.workers < 1 || backend.max_retries < 0) throw InvalidArgument("config: bad backend worker settings");
  if (search.n_hparams < 1 || search.n_trials < 1) throw InvalidArgument("config: search counts must be >= 1");
  if (search.steps < 1 || search.checkpoint_every < 1) throw InvalidArgument("config: steps must be >= 1");
  if (algorithms.empty()) throw InvalidArgument("config: no algorithms");
  for (const auto& a : algorithms) algorithm_generated_use(a);
  for (const auto& r : selection_rules) parse_selection_rule(r);
  if (diagnostics.encoder != "stub" && diagnostics.encoder != "http") {
    throw InvalidArgument("config: diagnostics encoder must be 'stub' or 'http'");
  }
  if (diagnostics.encoder == "http" && diagnostics.encoder_url.empty()) {
    throw InvalidArgument("config: http encoder needs encoder_url");
  }
  if (diagnostics.diversity_bins < 1) throw InvalidArgument("config: diversity_bins must be >= 1");
  for (int k : diagnostics.pgd_k_grid) {
    if (k < 0) throw InvalidArgument("config: pgd_k_grid values must be >= 0");
  }
  if (!(diagnostics.sharpness_rho > 0.0)) throw InvalidArgument("config: sharpness_rho must be > 0");
}

json to_json(const ExperimentConfig& c) {
  return {{"name", c.name},
          {"dataset_root", c.dataset_root.generic_string()},
          {"dataset_name", c.dataset_name},
          {"targets", c.targets},
          {"augmentation", augmentation_json(c.augmentation)},
          {"backend", backend_json(c.backend)},
          {"search", search_json(c.search)},
          {"model", to_json(c.model)},
          {"algorithms", c.algorithms},
          {"selection_rules", c.selection_rules},
          {"diagnostics", diagnostics_json(c.diagnostics)},
          {"output_root", c.output_root.generic_string()},
          {"seed", c.seed}};
}

ExperimentConfig experiment_config_from_json(const json& doc, const fs::path& base_dir) {
  check_keys(doc, {"name", "dataset_root", "dataset_name", "targets", "augmentation", "backend", "search",
                   "model", "algorithms", "selection_rules", "diagnostics", "output_root", "seed"},
             "config");
  ExperimentConfig c;
  read(doc, "name", c.name);
  if (doc.contains("dataset_root")) c.dataset_root = resolve(doc.at("dataset_root").get<std::string>(), base_dir);
  read(doc, "dataset_name", c.dataset_name);
  if (c.dataset_name.empty()) c.dataset_name = c.dataset_root.filename().string();
  read(doc, "targets", c.targets);
  if (doc.contains("augmentation")) {
    const auto& a = doc.at("augmentation");
    check_keys(a, {"mode", "b", "descriptions", "target_description"}, "augmentation");
    if (a.contains("mode")) c.augmentation.kind = parse_augmentation_kind(a.at("mode").get<std::string>());
    if (a.contains("b")) {
      if (a.at("b").is_string()) {
        if (a.at("b").get<std::string>() != "balanced") throw InvalidArgument("augmentation b: int or \"balanced\"");
        c.augmentation.balanced = true;
      } else {
        c.augmentation.b = a.at("b").get<int>();
      }
    }
    read(a, "descriptions", c.augmentation.descriptions);
    if (a.contains("target_description") && !a.at("target_description").is_null()) {
      c.augmentation.target_description = a.at("target_description").get<std::string>();
    }
  }
  if (doc.contains("backend")) {
    const auto& b = doc.at("backend");
    check_keys(b, {"kind", "url", "params", "workers", "max_retries", "timeout_seconds"}, "backend");
    read(b, "kind", c.backend.kind);
    read(b, "url", c.backend.url);
    if (b.contains("params")) c.backend.params = b.at("params");
    read(b, "workers", c.backend.workers);
    read(b, "max_retries", c.backend.max_retries);
    read(b, "timeout_seconds", c.backend.timeout_seconds);
  }
  if (doc.contains("search")) {
    const auto& s = doc.at("search");
    check_keys(s, {"n_hparams", "n_trials", "space", "steps", "checkpoint_every", "holdout_fraction"}, "search");
    read(s, "n_hparams", c.search.n_hparams);
    read(s, "n_trials", c.search.n_trials);
    if (s.contains("space") && !s.at("space").is_null()) c.search.space = search_space_from_json(s.at("space"));
    read(s, "steps", c.search.steps);
    read(s, "checkpoint_every", c.search.checkpoint_every);
    read(s, "holdout_fraction", c.search.holdout_fraction);
  }
  if (doc.contains("model")) {
    c.model = model_spec_from_json(doc.at("model"));
    c.model.weights_path = resolve(c.model.weights_path, base_dir);
  }
  read(doc, "algorithms", c.algorithms);
  read(doc, "selection_rules", c.selection_rules);
  if (doc.contains("diagnostics")) {
    const auto& d = doc.at("diagnostics");
    auto& o = c.diagnostics;
    check_keys(d, {"near_dup", "tsne", "hessian", "diversity", "robustness", "sharpness", "encoder",
                   "encoder_url", "near_dup_threshold", "diversity_bins", "rho_grid", "pgd_rho", "pgd_step",
                   "pgd_k_grid", "sharpness_rho", "sharpness_steps", "sharpness_restarts",
                   "tsne_iterations", "max_points_per_domain"},
               "diagnostics");
    read(d, "near_dup", o.near_dup);
    read(d, "tsne", o.tsne);
    read(d, "hessian", o.hessian);
    read(d, "diversity", o.diversity);
    read(d, "robustness", o.robustness);
    read(d, "sharpness", o.sharpness);
    read(d, "encoder", o.encoder);
    read(d, "encoder_url", o.encoder_url);
    read(d, "near_dup_threshold", o.near_dup_threshold);
    read(d, "diversity_bins", o.diversity_bins);
    read(d, "rho_grid", o.rho_grid);
    read(d, "pgd_rho", o.pgd_rho);
    read(d, "pgd_step", o.pgd_step);
    read(d, "pgd_k_grid", o.pgd_k_grid);
    read(d, "sharpness_rho", o.sharpness_rho);
    read(d, "sharpness_steps", o.sharpness_steps);
    read(d, "sharpness_restarts", o.sharpness_restarts);
    read(d, "tsne_iterations", o.tsne_iterations);
    read(d, "max_points_per_domain", o.max_points_per_domain);
  }
  if (doc.contains("output_root")) c.output_root = resolve(doc.at("output_root").get<std::string>(), base_dir);
  read(doc, "seed", c.seed);
  return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  return experiment_config_from_json(read_json(path), fs::absolute(path).parent_path());
}

std::string config_hash(const ExperimentConfig& c) {
  json j = to_json(c);
  j.erase("output_root");
  return hash_of(j);
}

std::string generate_stage_hash(const ExperimentConfig& c) {
  return hash_of({{"dataset_root", c.dataset_root.generic_string()},
                  {"augmentation", augmentation_json(c.augmentation)},
                  {"backend", backend_json(c.backend)},
                  {"seed", c.seed}});
}

std::string benchmark_stage_hash(const ExperimentConfig& c) {
  return hash_of({{"generate", generate_stage_hash(c)},
                  {"dataset_name", c.dataset_name},
                  {"targets", c.targets},
                  {"search", search_json(c.search)},
                  {"model", to_json(c.model)},
                  {"algorithms", c.algorithms},
                  {"selection_rules", c.selection_rules},
                  {"seed", c.seed}});
}

std::string diagnose_stage_hash(const ExperimentConfig& c) {
  return hash_of({{"benchmark", benchmark_stage_hash(c)}, {"diagnostics", diagnostics_json(c.diagnostics)}});
}

}  // namespace cdga
