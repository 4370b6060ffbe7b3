#include "cdga/trainer/data.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "cdga/core/error.hpp"
#include "cdga/core/hash.hpp"
#include "cdga/core/image.hpp"
#include "cdga/core/rng.hpp"
#include "cdga/generator/execute.hpp"

namespace cdga {

ImageStore::ImageStore(DomainDatasetManifest manifest, int input_size)
    : manifest_(std::move(manifest)), input_size_(input_size) {
  if (input_size < 1) throw InvalidArgument("ImageStore: input size must be positive");
  const auto n = manifest_.entries.size();
  const Eigen::Index dim = 3 * static_cast<Eigen::Index>(input_size) * input_size;
  data_.resize(dim, static_cast<Eigen::Index>(n));

  std::vector<std::string> errors(n);
  auto load_range = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const auto img = load_image(manifest_.absolute_path(manifest_.entries[i]));
      if (!img) {
        errors[i] = manifest_.entries[i].id;
        continue;
      }
      const Image small = resize(*img, input_size, input_size);
      for (Eigen::Index k = 0; k < dim; ++k) data_(k, static_cast<Eigen::Index>(i)) = small.pixels[k];
    }
  };
  const std::size_t threads =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 8);
  if (threads == 1 || n < 256) {
    load_range(0, n);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back(load_range, std::min(n, t * chunk), std::min(n, (t + 1) * chunk));
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw IoError("cannot decode training image " + e);
  }
}

Eigen::MatrixXd ImageStore::gather(std::span<const std::size_t> indices) const {
  Eigen::MatrixXd out(data_.rows(), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t k = 0; k < indices.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) = data_.col(static_cast<Eigen::Index>(indices[k]));
  }
  return out;
}

std::vector<int> ImageStore::labels(std::span<const std::size_t> indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(manifest_.entries[i].label);
  return out;
}

std::string_view to_string(GeneratedUse use) {
  switch (use) {
    case GeneratedUse::kNone:
      return "none";
    case GeneratedUse::kCdga:
      return "cdga";
    case GeneratedUse::kCdgaStar:
      return "cdga_star";
  }
  return "none";
}

GeneratedUse parse_generated_use(std::string_view text) {
  for (auto u : {GeneratedUse::kNone, GeneratedUse::kCdga, GeneratedUse::kCdgaStar}) {
    if (to_string(u) == text) return u;
  }
  throw InvalidArgument("unknown augmentation use '" + std::string(text) +
                        "' (expected none, cdga or cdga_star)");
}

std::optional<std::string> generated_source_id(const DomainDatasetManifest& manifest,
                                               const ManifestEntry& entry) {
  const auto gen = parse_generated_domain(manifest.domains[entry.domain]);
  if (!gen) return std::nullopt;
  std::string stem = entry.path.stem().string();
  const auto slot = stem.rfind("__s");
  if (slot != std::string::npos) stem.resize(slot);
  return gen->source + "/" + manifest.classes[entry.label] + "/" + stem;
}

TrainingSplits make_splits(const DomainDatasetManifest& manifest,
                           const std::vector<std::string>& train_domains,
                           const std::string& target_domain,
                           const std::optional<std::string>& held_out_domain, GeneratedUse use,
                           double holdout_fraction, std::uint64_t split_seed) {
  if (holdout_fraction < 0.0 || holdout_fraction >= 1.0) {
    throw InvalidArgument("holdout fraction must lie in [0, 1)");
  }
  if (std::find(train_domains.begin(), train_domains.end(), target_domain) != train_domains.end()) {
    throw InvalidArgument("target domain '" + target_domain + "' is also a training domain");
  }
  const int target_idx = manifest.require_domain(target_domain);

  std::vector<std::string> active;
  for (const auto& d : train_domains) {
    manifest.require_domain(d);
    if (held_out_domain && d == *held_out_domain) continue;
    active.push_back(d);
  }
  if (held_out_domain &&
      std::find(train_domains.begin(), train_domains.end(), *held_out_domain) == train_domains.end()) {
    throw InvalidArgument("held-out domain must be one of the training domains");
  }
  if (active.empty()) throw InvalidArgument("no training domain left to train on");
  const std::set<std::string> active_set(active.begin(), active.end());

  TrainingSplits out;
  std::map<std::string, std::size_t> env_of;
  for (const auto& d : active) {
    env_of[d] = out.environments.size();
    out.environments.push_back(DomainSplit{d, {}, {}, 0, 0});
  }

  // Holdout over originals: seeded permutation per domain.
  std::unordered_set<std::string> val_ids;
  for (const auto& d : active) {
    const int di = *manifest.domain_index(d);
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
      if (manifest.entries[i].domain == di) members.push_back(i);
    }
    Rng rng(derive_seed(split_seed, fnv1a64(d)));
    rng.shuffle(members);
    const auto n_val = static_cast<std::size_t>(
        std::llround(holdout_fraction * static_cast<double>(members.size())));
    auto& env = out.environments[env_of[d]];
    for (std::size_t k = 0; k < members.size(); ++k) {
      if (k < n_val) {
        env.val.push_back(members[k]);
        val_ids.insert(manifest.entries[members[k]].id);
      } else {
        env.train.push_back(members[k]);
      }
    }
  }

  const int held_idx = held_out_domain ? *manifest.domain_index(*held_out_domain) : -1;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& e = manifest.entries[i];
    if (e.domain == target_idx) out.target.push_back(i);
    if (e.domain == held_idx) out.held_out.push_back(i);
    if (use == GeneratedUse::kNone) continue;
    const auto gen = parse_generated_domain(manifest.domains[e.domain]);
    if (!gen || !active_set.contains(gen->source)) continue;
    const bool guided_by_train = active_set.contains(gen->guidance);
    const bool guided_by_target =
        gen->guidance == target_domain || gen->guidance == kTargetGuidance;
    if (!(guided_by_train || (use == GeneratedUse::kCdgaStar && guided_by_target))) continue;
    auto& env = out.environments[env_of[gen->source]];
    if (val_ids.contains(*generated_source_id(manifest, e))) {
      env.val.push_back(i);
      ++env.generated_val;
    } else {
      env.train.push_back(i);
      ++env.generated_train;
    }
  }
  for (auto& env : out.environments) {
    std::sort(env.train.begin(), env.train.end());
    std::sort(env.val.begin(), env.val.end());
    if (env.train.empty()) throw InvalidArgument("training domain '" + env.domain + "' has no training images");
  }
  return out;
}

}  // namespace cdga
