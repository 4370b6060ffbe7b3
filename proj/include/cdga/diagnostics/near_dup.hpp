#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "cdga/diagnostics/embedding.hpp"

namespace cdga {

// Rounding in row normalisation can push an exact 0.95 cosine a few ulps
// below the threshold; pairs within this slack still count.
inline constexpr double kCosineSlack = 1e-12;

struct RateMatrix {
  std::vector<std::string> originals;  // rows
  std::vector<std::string> generated;  // columns
  Eigen::MatrixXd rates;               // percent
  double threshold = 0.95;

  double at(const std::string& original, const std::string& generated_domain) const;
};

nlohmann::json to_json(const RateMatrix& m);

// rate[o][g] = percentage of originals in `o` with at least one embedding of
// `g` at cosine >= threshold. Exact search.
RateMatrix near_duplicate_rates(const std::map<std::string, EmbeddingMatrix>& originals,
                                const std::map<std::string, EmbeddingMatrix>& generated,
                                double threshold = 0.95);

}  // namespace cdga
