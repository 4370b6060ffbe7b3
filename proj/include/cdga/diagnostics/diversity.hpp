#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace cdga {

struct DiversityOptions {
  int bins = 20;
  int principal_axes = 3;  // extra projection axes besides the environment classifier
  double ridge = 1e-6;     // relative ridge on the pooled covariance
};

struct DiversityResult {
  double value = 0.0;  // in [0, 1]
  int bins = 0;
  std::string axis;    // "env_classifier" or "pc<k>" that attained the value
  std::vector<double> per_axis;
};

nlohmann::json to_json(const DiversityResult& r);

// Histogram form of the total-variation diversity shift on a single axis:
// 1/2 * sum over bins where exactly one of the two histograms has mass of
// |p - q|. Bins are equal-width over the pooled range.
double histogram_diversity(const Eigen::VectorXd& a, const Eigen::VectorXd& b, int bins);

// Rows are samples. Each set is projected onto the direction of a ridge
// linear discriminant between the two sets (a linear environment classifier)
// and onto the leading principal axes of the pooled features; the result is
// the largest histogram diversity across those axes. Symmetric in (a, b).
DiversityResult diversity_shift(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                const DiversityOptions& options = {});

}  // namespace cdga
