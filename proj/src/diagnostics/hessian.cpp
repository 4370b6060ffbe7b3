#include "cdga/diagnostics/hessian.hpp"

#include <cmath>

#include "cdga/core/error.hpp"
#include "cdga/core/rng.hpp"

namespace cdga {

Eigen::MatrixXd head_hessian_closed_form(const Eigen::MatrixXd& features, const Eigen::MatrixXd& probs) {
  if (features.cols() != probs.cols() || features.cols() == 0) {
    throw InvalidArgument("head Hessian needs a non-empty slice with matching features/probabilities");
  }
  const Eigen::Index f1 = features.rows() + 1;
  const Eigen::Index c = probs.rows();
  const Eigen::Index n = features.cols();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(f1 * c, f1 * c);
  Eigen::VectorXd a(f1);
  for (Eigen::Index k = 0; k < n; ++k) {
    a.head(f1 - 1) = features.col(k);
    a[f1 - 1] = 1.0;
    const Eigen::VectorXd p = probs.col(k);
    Eigen::MatrixXd s = -p * p.transpose();
    s.diagonal() += p;
    for (Eigen::Index j = 0; j < f1; ++j) {
      if (a[j] == 0.0) continue;
      for (Eigen::Index i = 0; i < f1; ++i) {
        if (a[i] == 0.0) continue;
        h.block(i * c, j * c, c, c).noalias() += (a[i] * a[j]) * s;
      }
    }
  }
  h /= static_cast<double>(n);
  // Exact symmetry regardless of summation order.
  return 0.5 * (h + h.transpose());
}

HeadHessian classifier_head_hessian(const Model& model, const Eigen::MatrixXd& x,
                                    std::span<const int> labels, const std::string& domain, int step) {
  if (x.cols() == 0) throw InvalidArgument("classifier_head_hessian: empty slice");
  const double l = model.loss(x, labels);
  if (!std::isfinite(l)) throw NumericalError("classifier_head_hessian: non-finite loss");
  HeadHessian out;
  out.matrix = head_hessian_closed_form(model.features(x), model.probabilities(x));
  if (!out.matrix.allFinite()) throw NumericalError("classifier_head_hessian: non-finite Hessian");
  out.domain = domain;
  out.step = step;
  return out;
}

double spectral_norm_dense(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eigensolver failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double spectral_norm_power(const Eigen::MatrixXd& m, double tol, int max_iter) {
  if (m.size() == 0) return 0.0;
  // Iterate on m^2 so that eigenvalues of equal magnitude and opposite sign
  // do not stall convergence.
  Rng rng(0x5eed);
  Eigen::VectorXd v(m.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
  v.normalize();
  double prev = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd w = m * (m * v);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    v = w / nw;
    const double est = std::sqrt((m * v).squaredNorm());
    if (std::abs(est - prev) <= tol * std::max(1.0, est)) return est;
    prev = est;
  }
  return prev;
}

double hessian_distance(const HeadHessian& a, const HeadHessian& b) {
  if (a.matrix.rows() != b.matrix.rows() || a.matrix.cols() != b.matrix.cols()) {
    throw InvalidArgument("hessian_distance: shape mismatch");
  }
  const Eigen::MatrixXd d = a.matrix - b.matrix;
  return d.rows() <= kDenseSpectralLimit ? spectral_norm_dense(d) : spectral_norm_power(d);
}

}  // namespace cdga
