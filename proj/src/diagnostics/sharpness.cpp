#include "cdga/diagnostics/sharpness.hpp"

#include <cmath>

#include "cdga/core/error.hpp"
#include "cdga/core/rng.hpp"

namespace cdga {

namespace {

void project(Eigen::VectorXd& eps, double rho) {
  const double n = eps.norm();
  if (n > rho) eps *= rho / n;
}

}  // namespace

double sharpness(const Objective& loss, const Eigen::VectorXd& theta, double rho,
                 const SharpnessOptions& options) {
  if (!(rho > 0.0)) throw InvalidArgument("sharpness: rho must be positive");
  if (options.ascent_steps < 0 || options.restarts < 1) {
    throw InvalidArgument("sharpness: need ascent_steps >= 0 and restarts >= 1");
  }
  Eigen::VectorXd g0;
  const double base = loss(theta, &g0);
  if (!std::isfinite(base) || !g0.allFinite()) throw NumericalError("sharpness: non-finite loss");

  double best = 0.0;
  Rng rng(derive_seed(options.seed, 0x5a4));
  const Eigen::Index d = theta.size();
  Eigen::VectorXd grad;
  for (int r = 0; r < options.restarts; ++r) {
    Eigen::VectorXd eps(d);
    if (r == 0 && g0.norm() > 0.0) {
      eps = rho * g0 / g0.norm();
    } else {
      for (Eigen::Index i = 0; i < d; ++i) eps[i] = rng.normal();
      const double radius = rho * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
      eps *= radius / eps.norm();
    }
    for (int s = 0; s <= options.ascent_steps; ++s) {
      const double v = loss(theta + eps, &grad);
      if (!std::isfinite(v)) throw NumericalError("sharpness: non-finite loss");
      best = std::max(best, v - base);
      if (s == options.ascent_steps) break;
      const double gn = grad.norm();
      if (!(gn > 0.0) || !grad.allFinite()) break;
      eps += rho * grad / gn;
      project(eps, rho);
    }
  }
  return best;
}

double sharpness(const Model& model, const Eigen::MatrixXd& x, std::span<const int> y, double rho,
                 const SharpnessOptions& options) {
  const Objective f = [&](const Eigen::VectorXd& theta, Eigen::VectorXd* grad) {
    return model.loss_at(theta, x, y, {}, grad);
  };
  return sharpness(f, model.params(), rho, options);
}

nlohmann::json to_json(const SharpnessTrace& t) {
  return {{"label", t.label}, {"rho", t.rho}, {"steps", t.steps}, {"sharpness", t.sharpness}};
}

}  // namespace cdga
