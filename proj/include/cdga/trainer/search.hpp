#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cdga/trainer/train.hpp"

namespace cdga {

// One searchable hyperparameter. Samples are drawn as
//   fixed        default
//   uniform      U(lo, hi)
//   log10        10^U(lo, hi)
//   log2_int     round(2^U(lo, hi))
//   choice       uniform over `choices`
struct HparamDistribution {
  enum class Kind { kFixed, kUniform, kLog10, kLog2Int, kChoice };
  Kind kind = Kind::kFixed;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> choices;
  double default_value = 0.0;
};

// Keys: lr, weight_decay, batch_size, steps.
using SearchSpace = std::map<std::string, HparamDistribution>;

SearchSpace search_space_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const SearchSpace& space);

// The defaults used when no space file is given.
SearchSpace default_search_space();

// n_hparams * n_trials configs derived from `base`, hparam-major. Hparam
// choice 0 takes every default; the others are sampled with a generator
// seeded from (seed, hparam index). The trial index only changes the
// training seed; every config shares one validation split.
std::vector<TrainConfig> random_search(const SearchSpace& space, int n_hparams, int n_trials,
                                       std::uint64_t seed, const TrainConfig& base);

}  // namespace cdga
