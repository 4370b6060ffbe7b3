#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "cdga/trainer/model.hpp"

namespace cdga {

// L-infinity attacks on inputs in [0, 1] (one image per column).
Eigen::MatrixXd fgsm(const Model& model, const Eigen::MatrixXd& x, std::span<const int> y, double rho);

// K signed-gradient steps, each projected onto the rho-ball around x and
// clipped to [0, 1]. No random start.
Eigen::MatrixXd pgd(const Model& model, const Eigen::MatrixXd& x, std::span<const int> y, double rho,
                    double step_size, int k);

enum class Attack { kFgsm, kPgd };
std::string to_string(Attack a);
Attack parse_attack(const std::string& s);

struct AttackSpec {
  Attack attack = Attack::kFgsm;
  double rho = 0.0;        // PGD only: fixed radius while K varies
  double step_size = -1;   // PGD only: negative means rho / 4
};

struct RobustnessCurve {
  Attack attack = Attack::kFgsm;
  std::vector<double> grid;  // rho values (FGSM) or K values (PGD)
  std::vector<double> accuracies;
  double rho = 0.0;
  double step_size = 0.0;
};

nlohmann::json to_json(const RobustnessCurve& c);

// Accuracy after the attack at every grid value. A grid value of 0 leaves the
// inputs untouched, so it reproduces clean accuracy exactly.
RobustnessCurve robustness_curve(const Model& model, const Eigen::MatrixXd& x, std::span<const int> y,
                                 const AttackSpec& spec, const std::vector<double>& grid);

// Log-spaced default rho grid (0 plus 1e-3 .. 1e-1).
std::vector<double> default_rho_grid();

}  // namespace cdga
