#include "cdga/diagnostics/attacks.hpp"

#include <algorithm>
#include <cmath>

#include "cdga/core/error.hpp"

namespace cdga {

namespace {

Eigen::MatrixXd input_gradient(const Model& model, const Eigen::MatrixXd& x, std::span<const int> y) {
  Eigen::MatrixXd g;
  model.loss(x, y, {}, nullptr, &g);
  if (!g.allFinite()) throw NumericalError("attack: non-finite input gradient");
  return g;
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double clip01(double v) { return std::clamp(v, 0.0, 1.0); }

// Clamp onto [x0 - rho, x0 + rho]; bounds are rounded inward so that the
// computed |result - x0| never exceeds rho.
double project(double x0, double v, double rho) {
  double lo = x0 - rho, hi = x0 + rho;
  if (x0 - lo > rho) lo = std::nextafter(lo, x0);
  if (hi - x0 > rho) hi = std::nextafter(hi, x0);
  return std::clamp(v, lo, hi);
}

double accuracy_of(const Model& model, const Eigen::MatrixXd& x, std::span<const int> y) {
  if (y.empty()) return 0.0;
  const auto pred = model.predict(x);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hit += pred[i] == y[i] ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(y.size());
}

}  // namespace

Eigen::MatrixXd fgsm(const Model& model, const Eigen::MatrixXd& x, std::span<const int> y, double rho) {
  if (!(rho >= 0.0)) throw InvalidArgument("fgsm: rho must be non-negative");
  if (rho == 0.0) return x;
  const Eigen::MatrixXd g = input_gradient(model, x, y);
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double x0 = x.data()[i];
    out.data()[i] = clip01(project(x0, x0 + rho * sign(g.data()[i]), rho));
  }
  return out;
}

Eigen::MatrixXd pgd(const Model& model, const Eigen::MatrixXd& x, std::span<const int> y, double rho,
                    double step_size, int k) {
  if (!(rho >= 0.0)) throw InvalidArgument("pgd: rho must be non-negative");
  if (k < 1) throw InvalidArgument("pgd: K must be at least 1");
  if (!(step_size >= 0.0)) throw InvalidArgument("pgd: step size must be non-negative");
  if (rho == 0.0) return x;
  Eigen::MatrixXd adv = x;
  for (int it = 0; it < k; ++it) {
    const Eigen::MatrixXd g = input_gradient(model, adv, y);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double x0 = x.data()[i];
      const double v = adv.data()[i] + step_size * sign(g.data()[i]);
      adv.data()[i] = clip01(project(x0, v, rho));
    }
  }
  return adv;
}

std::string to_string(Attack a) { return a == Attack::kFgsm ? "FGSM" : "PGD"; }

Attack parse_attack(const std::string& s) {
  if (s == "FGSM" || s == "fgsm") return Attack::kFgsm;
  if (s == "PGD" || s == "pgd") return Attack::kPgd;
  throw InvalidArgument("unknown attack '" + s + "'");
}

nlohmann::json to_json(const RobustnessCurve& c) {
  nlohmann::json j{{"attack", to_string(c.attack)}, {"grid", c.grid}, {"accuracies", c.accuracies}};
  if (c.attack == Attack::kPgd) {
    j["rho"] = c.rho;
    j["step_size"] = c.step_size;
  }
  return j;
}

RobustnessCurve robustness_curve(const Model& model, const Eigen::MatrixXd& x, std::span<const int> y,
                                 const AttackSpec& spec, const std::vector<double>& grid) {
  if (grid.empty()) throw InvalidArgument("robustness_curve: empty grid");
  RobustnessCurve curve;
  curve.attack = spec.attack;
  curve.grid = grid;
  curve.rho = spec.rho;
  curve.step_size = spec.step_size < 0.0 ? spec.rho / 4.0 : spec.step_size;
  for (double g : grid) {
    if (g == 0.0) {
      curve.accuracies.push_back(accuracy_of(model, x, y));
    } else if (spec.attack == Attack::kFgsm) {
      curve.accuracies.push_back(accuracy_of(model, fgsm(model, x, y, g), y));
    } else {
      const int k = static_cast<int>(std::lround(g));
      if (k < 0 || static_cast<double>(k) != g) throw InvalidArgument("PGD grid values must be integers");
      curve.accuracies.push_back(accuracy_of(model, pgd(model, x, y, spec.rho, curve.step_size, k), y));
    }
  }
  return curve;
}

std::vector<double> default_rho_grid() { return {0.0, 0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1}; }

}  // namespace cdga
