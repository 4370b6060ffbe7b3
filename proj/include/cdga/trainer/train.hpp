#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "cdga/trainer/data.hpp"
#include "cdga/trainer/model.hpp"

namespace cdga {

struct Hparams {
  double lr = 1e-3;
  double weight_decay = 0.0;
  int batch_size = 32;  // per training domain
  int steps = 300;
  GeneratedUse augmentation = GeneratedUse::kNone;
};

struct TrainConfig {
  ModelSpec model;
  Hparams hparams;
  std::uint64_t seed = 0;        // weights init and minibatch sampling
  std::uint64_t split_seed = 0;  // validation holdout
  std::string target_domain;
  std::vector<std::string> train_domains;
  // Set for leave-one-domain-out runs: this training domain is excluded
  // from training and its accuracy is reported as leave-out accuracy.
  std::optional<std::string> held_out_domain;
  int hparam_index = 0;
  int trial = 0;
  int checkpoint_every = 50;
  double holdout_fraction = 0.2;
  bool keep_snapshots = false;  // retain parameters at every checkpoint

  void validate() const;
};

struct Checkpoint {
  int step = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  std::map<std::string, double> val_accuracy;  // per active training domain
  std::optional<double> leave_out_accuracy;
  double target_accuracy = 0.0;

  double mean_val_accuracy() const;
};

struct BenchmarkRun {
  TrainConfig config;
  std::vector<Checkpoint> checkpoints;
  bool failed = false;
  std::string failure;
  std::vector<Eigen::VectorXd> snapshots;  // parallel to checkpoints; not serialized

  void validate() const;
};

nlohmann::json to_json(const Hparams& h);
Hparams hparams_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const Checkpoint& c);
nlohmann::json to_json(const BenchmarkRun& run);
BenchmarkRun benchmark_run_from_json(const nlohmann::json& doc);

// Minimises the sum over training domains of the per-domain mean
// cross-entropy using Adam on equal-size per-domain minibatches. Metrics are
// recorded every `checkpoint_every` steps and at the last step. A non-finite
// loss ends the run with failed = true, keeping earlier checkpoints.
BenchmarkRun train(const TrainConfig& config, const ImageStore& images);

// Convenience overload decoding the manifest's images first.
BenchmarkRun train(const TrainConfig& config, const DomainDatasetManifest& manifest);

// Rebuilds the model of a run at a given checkpoint (requires snapshots).
std::unique_ptr<Model> model_at_checkpoint(const BenchmarkRun& run, std::size_t checkpoint,
                                           int num_classes);

double accuracy(const Model& model, const ImageStore& images, std::span<const std::size_t> indices);

}  // namespace cdga
