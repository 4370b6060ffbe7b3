#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "cdga/trainer/model.hpp"

namespace cdga {

// Loss at theta; writes the gradient when `grad` is non-null.
using Objective = std::function<double(const Eigen::VectorXd& theta, Eigen::VectorXd* grad)>;

struct SharpnessOptions {
  int ascent_steps = 20;
  int restarts = 3;
  std::uint64_t seed = 0;
};

// max_{||eps||_2 <= rho} L(theta + eps) - L(theta), approximated by projected
// normalised-gradient ascent. The first start is the first-order maximiser
// rho * g / ||g||; the remaining starts are random points in the ball.
// eps = 0 is always a candidate, so the result is never negative.
double sharpness(const Objective& loss, const Eigen::VectorXd& theta, double rho,
                 const SharpnessOptions& options = {});

// Mean cross-entropy of `model` on (x, y) with respect to all parameters.
double sharpness(const Model& model, const Eigen::MatrixXd& x, std::span<const int> y, double rho,
                 const SharpnessOptions& options = {});

struct SharpnessTrace {
  std::string label;  // e.g. "ERM", "ERM+CDGA"
  std::vector<int> steps;
  std::vector<double> sharpness;
  double rho = 0.0;
};

nlohmann::json to_json(const SharpnessTrace& t);

}  // namespace cdga
