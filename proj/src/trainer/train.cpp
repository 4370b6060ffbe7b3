#include "cdga/trainer/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cdga/core/error.hpp"
#include "cdga/core/fs.hpp"
#include "cdga/core/rng.hpp"

namespace cdga {

using Eigen::VectorXd;

void TrainConfig::validate() const {
  if (hparams.steps <= 0) throw InvalidArgument("training steps must be positive");
  if (hparams.batch_size <= 0) throw InvalidArgument("batch size must be positive");
  if (!(hparams.lr > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (hparams.weight_decay < 0.0) throw InvalidArgument("weight decay must be non-negative");
  if (checkpoint_every <= 0) throw InvalidArgument("checkpoint cadence must be positive");
  if (train_domains.empty()) throw InvalidArgument("no training domains");
  if (std::find(train_domains.begin(), train_domains.end(), target_domain) != train_domains.end()) {
    throw InvalidArgument("target domain '" + target_domain + "' is also a training domain");
  }
}

double Checkpoint::mean_val_accuracy() const {
  if (val_accuracy.empty()) return 0.0;
  double s = 0.0;
  for (const auto& [_, acc] : val_accuracy) s += acc;
  return s / static_cast<double>(val_accuracy.size());
}

void BenchmarkRun::validate() const {
  int prev = 0;
  for (const auto& c : checkpoints) {
    if (c.step <= prev) throw InvalidArgument("checkpoint steps must be strictly increasing");
    prev = c.step;
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    bool ok = in_unit(c.target_accuracy) && in_unit(c.train_accuracy);
    for (const auto& [_, acc] : c.val_accuracy) ok = ok && in_unit(acc);
    if (c.leave_out_accuracy) ok = ok && in_unit(*c.leave_out_accuracy);
    if (!ok) throw InvalidArgument("accuracies must lie in [0, 1]");
  }
}

json to_json(const Hparams& h) {
  return {{"lr", h.lr},
          {"weight_decay", h.weight_decay},
          {"batch_size", h.batch_size},
          {"steps", h.steps},
          {"augmentation", to_string(h.augmentation)}};
}

Hparams hparams_from_json(const json& doc) {
  Hparams h;
  h.lr = doc.value("lr", h.lr);
  h.weight_decay = doc.value("weight_decay", h.weight_decay);
  h.batch_size = doc.value("batch_size", h.batch_size);
  h.steps = doc.value("steps", h.steps);
  h.augmentation = parse_generated_use(doc.value("augmentation", std::string("none")));
  return h;
}

json to_json(const TrainConfig& c) {
  json doc{{"model", to_json(c.model)},
           {"hparams", to_json(c.hparams)},
           {"seed", c.seed},
           {"split_seed", c.split_seed},
           {"target_domain", c.target_domain},
           {"train_domains", c.train_domains},
           {"hparam_index", c.hparam_index},
           {"trial", c.trial},
           {"checkpoint_every", c.checkpoint_every},
           {"holdout_fraction", c.holdout_fraction}};
  doc["held_out_domain"] = c.held_out_domain ? json(*c.held_out_domain) : json(nullptr);
  return doc;
}

TrainConfig train_config_from_json(const json& doc) {
  try {
    TrainConfig c;
    c.model = model_spec_from_json(doc.value("model", json::object()));
    c.hparams = hparams_from_json(doc.value("hparams", json::object()));
    c.seed = doc.value("seed", std::uint64_t{0});
    c.split_seed = doc.value("split_seed", std::uint64_t{0});
    c.target_domain = doc.at("target_domain").get<std::string>();
    c.train_domains = doc.at("train_domains").get<std::vector<std::string>>();
    if (doc.contains("held_out_domain") && !doc["held_out_domain"].is_null()) {
      c.held_out_domain = doc["held_out_domain"].get<std::string>();
    }
    c.hparam_index = doc.value("hparam_index", 0);
    c.trial = doc.value("trial", 0);
    c.checkpoint_every = doc.value("checkpoint_every", c.checkpoint_every);
    c.holdout_fraction = doc.value("holdout_fraction", c.holdout_fraction);
    return c;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed train config: ") + e.what());
  }
}

json to_json(const Checkpoint& c) {
  json doc{{"step", c.step},
           {"train_loss", c.train_loss},
           {"train_accuracy", c.train_accuracy},
           {"val_accuracy", c.val_accuracy},
           {"target_accuracy", c.target_accuracy}};
  doc["leave_out_accuracy"] = c.leave_out_accuracy ? json(*c.leave_out_accuracy) : json(nullptr);
  return doc;
}

json to_json(const BenchmarkRun& run) {
  json cps = json::array();
  for (const auto& c : run.checkpoints) cps.push_back(to_json(c));
  return {{"config", to_json(run.config)},
          {"checkpoints", std::move(cps)},
          {"failed", run.failed},
          {"failure", run.failure}};
}

BenchmarkRun benchmark_run_from_json(const json& doc) {
  try {
    BenchmarkRun run;
    run.config = train_config_from_json(doc.at("config"));
    for (const auto& c : doc.at("checkpoints")) {
      Checkpoint cp;
      cp.step = c.at("step").get<int>();
      cp.train_loss = c.value("train_loss", 0.0);
      cp.train_accuracy = c.value("train_accuracy", 0.0);
      cp.val_accuracy = c.value("val_accuracy", std::map<std::string, double>{});
      if (c.contains("leave_out_accuracy") && !c["leave_out_accuracy"].is_null()) {
        cp.leave_out_accuracy = c["leave_out_accuracy"].get<double>();
      }
      cp.target_accuracy = c.at("target_accuracy").get<double>();
      run.checkpoints.push_back(std::move(cp));
    }
    run.failed = doc.value("failed", false);
    run.failure = doc.value("failure", "");
    return run;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed run artifact: ") + e.what());
  }
}

double accuracy(const Model& model, const ImageStore& images, std::span<const std::size_t> indices) {
  if (indices.empty()) return 0.0;
  constexpr std::size_t kChunk = 256;
  std::size_t correct = 0;
  for (std::size_t lo = 0; lo < indices.size(); lo += kChunk) {
    const auto part = indices.subspan(lo, std::min(kChunk, indices.size() - lo));
    const auto pred = model.predict(images.gather(part));
    const auto truth = images.labels(part);
    for (std::size_t k = 0; k < pred.size(); ++k) correct += pred[k] == truth[k] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(indices.size());
}

namespace {

struct Adam {
  double lr, weight_decay;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  VectorXd m, v;
  int t = 0;

  Adam(Eigen::Index n, double lr_, double wd) : lr(lr_), weight_decay(wd) {
    m = VectorXd::Zero(n);
    v = VectorXd::Zero(n);
  }

  void step(VectorXd& theta, VectorXd grad) {
    if (weight_decay > 0.0) grad += weight_decay * theta;
    ++t;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(beta1, t);
    const double c2 = 1.0 - std::pow(beta2, t);
    theta.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
};

}  // namespace

BenchmarkRun train(const TrainConfig& config, const ImageStore& images) {
  config.validate();
  if (images.input_size() != config.model.input_size) {
    throw InvalidArgument("image store resolution does not match the model input size");
  }
  const auto& manifest = images.manifest();
  const TrainingSplits splits =
      make_splits(manifest, config.train_domains, config.target_domain, config.held_out_domain,
                  config.hparams.augmentation, config.holdout_fraction, config.split_seed);

  BenchmarkRun run;
  run.config = config;
  auto model = make_model(config.model, static_cast<int>(manifest.classes.size()), config.seed);
  Adam opt(model->num_params(), config.hparams.lr, config.hparams.weight_decay);
  Rng rng(derive_seed(config.seed, 0x5eed));

  std::vector<std::size_t> all_train;
  for (const auto& env : splits.environments) {
    all_train.insert(all_train.end(), env.train.begin(), env.train.end());
  }

  const int b = config.hparams.batch_size;
  const std::size_t n_env = splits.environments.size();
  std::vector<std::size_t> batch(n_env * static_cast<std::size_t>(b));
  const std::vector<double> weights(batch.size(), 1.0 / b);
  VectorXd grad;
  VectorXd theta = model->params();
  double loss_acc = 0.0;
  int loss_count = 0;

  for (int step = 1; step <= config.hparams.steps; ++step) {
    for (std::size_t e = 0; e < n_env; ++e) {
      const auto& pool = splits.environments[e].train;
      for (int k = 0; k < b; ++k) batch[e * b + k] = pool[rng.below(pool.size())];
    }
    const double loss = model->loss(images.gather(batch), images.labels(batch), weights, &grad);
    if (!std::isfinite(loss) || !grad.allFinite()) {
      run.failed = true;
      run.failure = "non-finite loss at step " + std::to_string(step);
      break;
    }
    loss_acc += loss;
    ++loss_count;
    opt.step(theta, grad);
    model->set_params(theta);

    if (step % config.checkpoint_every == 0 || step == config.hparams.steps) {
      Checkpoint cp;
      cp.step = step;
      cp.train_loss = loss_acc / loss_count;
      loss_acc = 0.0;
      loss_count = 0;
      cp.train_accuracy = accuracy(*model, images, all_train);
      for (const auto& env : splits.environments) {
        if (!env.val.empty()) cp.val_accuracy[env.domain] = accuracy(*model, images, env.val);
      }
      if (config.held_out_domain) cp.leave_out_accuracy = accuracy(*model, images, splits.held_out);
      cp.target_accuracy = accuracy(*model, images, splits.target);
      run.checkpoints.push_back(std::move(cp));
      if (config.keep_snapshots) run.snapshots.push_back(theta);
    }
  }
  return run;
}

BenchmarkRun train(const TrainConfig& config, const DomainDatasetManifest& manifest) {
  config.validate();
  const ImageStore images(manifest, config.model.input_size);
  return train(config, images);
}

std::unique_ptr<Model> model_at_checkpoint(const BenchmarkRun& run, std::size_t checkpoint,
                                           int num_classes) {
  if (checkpoint >= run.snapshots.size()) {
    throw InvalidArgument("run has no parameter snapshot for checkpoint " + std::to_string(checkpoint));
  }
  auto model = make_model(run.config.model, num_classes, run.config.seed);
  model->set_params(run.snapshots[checkpoint]);
  return model;
}

}  // namespace cdga
