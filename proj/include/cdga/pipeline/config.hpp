#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cdga/dataset/counts.hpp"
#include "cdga/trainer/model.hpp"
#include "cdga/trainer/search.hpp"

namespace cdga {

struct BackendConfig {
  std::string kind = "stub";  // "stub" or "http"
  std::string url;
  nlohmann::json params = nlohmann::json::object();  // passed to the backend untouched
  int workers = 1;
  int max_retries = 2;
  int timeout_seconds = 600;
};

struct AugmentationConfig {
  AugmentationKind kind = AugmentationKind::kCdgaPg;
  bool balanced = false;  // b from the balanced ceil rule instead of `b`
  int b = 1;
  std::map<std::string, std::string> descriptions;
  std::optional<std::string> target_description;  // enables CDGA*
};

struct SearchConfig {
  int n_hparams = 20;
  int n_trials = 3;
  std::optional<SearchSpace> space;  // default_search_space() when absent
  int steps = 300;
  int checkpoint_every = 50;
  double holdout_fraction = 0.2;
};

struct DiagnosticsConfig {
  bool near_dup = true;
  bool tsne = true;
  bool hessian = true;
  bool diversity = true;
  bool robustness = true;
  bool sharpness = true;
  std::string encoder = "stub";  // "stub" or "http"
  std::string encoder_url;
  double near_dup_threshold = 0.95;
  int diversity_bins = 10;
  std::vector<double> rho_grid;  // FGSM; default log-spaced grid when empty
  double pgd_rho = 0.03;
  double pgd_step = -1.0;        // negative: rho / 4
  std::vector<int> pgd_k_grid{1, 2, 5};
  double sharpness_rho = 0.05;
  int sharpness_steps = 20;
  int sharpness_restarts = 3;
  int tsne_iterations = 1000;
  int max_points_per_domain = 200;  // cap for embeddings/t-SNE
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::filesystem::path dataset_root;
  std::string dataset_name;
  // Leave-one-domain-out splits: each listed domain is the target once and
  // the remaining domains train. Empty means every domain.
  std::vector<std::string> targets;
  AugmentationConfig augmentation;
  BackendConfig backend;
  SearchConfig search;
  ModelSpec model;
  std::vector<std::string> algorithms{"ERM", "ERM+CDGA"};
  std::vector<std::string> selection_rules{"training_domain_validation", "leave_one_domain_out",
                                           "oracle"};
  DiagnosticsConfig diagnostics;
  std::filesystem::path output_root = "runs";
  std::uint64_t seed = 0;

  // Resolved target list (dataset domains when `targets` is empty).
  std::vector<std::string> resolved_targets(const std::vector<std::string>& domains) const;
  // Checks values and that referenced paths exist.
  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& c);
// Relative dataset/output paths are resolved against `base_dir`.
ExperimentConfig experiment_config_from_json(const nlohmann::json& doc,
                                             const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Algorithm name -> generated images used in training.
GeneratedUse algorithm_generated_use(const std::string& algorithm);

// sha256 over the canonical JSON of the whole config, or of the parts that a
// stage depends on.
std::string config_hash(const ExperimentConfig& c);
std::string generate_stage_hash(const ExperimentConfig& c);
std::string benchmark_stage_hash(const ExperimentConfig& c);
std::string diagnose_stage_hash(const ExperimentConfig& c);

}  // namespace cdga
