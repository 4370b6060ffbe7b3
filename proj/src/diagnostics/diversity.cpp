#include "cdga/diagnostics/diversity.hpp"

#include <algorithm>
#include <cmath>

#include "cdga/core/error.hpp"

namespace cdga {

namespace {

bool lexicographically_less(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows()) return a.rows() < b.rows();
  const double* pa = a.data();
  const double* pb = b.data();
  return std::lexicographical_compare(pa, pa + a.size(), pb, pb + b.size());
}

}  // namespace

nlohmann::json to_json(const DiversityResult& r) {
  return {{"value", r.value}, {"bins", r.bins}, {"axis", r.axis}, {"per_axis", r.per_axis}};
}

double histogram_diversity(const Eigen::VectorXd& a, const Eigen::VectorXd& b, int bins) {
  if (bins < 1) throw InvalidArgument("diversity: bins must be positive");
  if (a.size() < bins || b.size() < bins) {
    throw InvalidArgument("diversity: need at least " + std::to_string(bins) + " samples per set");
  }
  const double lo = std::min(a.minCoeff(), b.minCoeff());
  const double hi = std::max(a.maxCoeff(), b.maxCoeff());
  if (!std::isfinite(lo) || !std::isfinite(hi)) throw NumericalError("diversity: non-finite features");
  if (hi == lo) return 0.0;
  auto histogram = [&](const Eigen::VectorXd& v) {
    std::vector<double> h(static_cast<std::size_t>(bins), 0.0);
    for (double s : v) {
      int k = static_cast<int>(std::floor((s - lo) / (hi - lo) * bins));
      k = std::clamp(k, 0, bins - 1);
      h[static_cast<std::size_t>(k)] += 1.0;
    }
    for (double& x : h) x /= static_cast<double>(v.size());
    return h;
  };
  const auto p = histogram(a);
  const auto q = histogram(b);
  double div = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if ((p[k] > 0.0) != (q[k] > 0.0)) div += std::abs(p[k] - q[k]);
  }
  return std::clamp(0.5 * div, 0.0, 1.0);
}

DiversityResult diversity_shift(const Eigen::MatrixXd& a_in, const Eigen::MatrixXd& b_in,
                                const DiversityOptions& options) {
  if (a_in.cols() != b_in.cols()) throw InvalidArgument("diversity: feature dimension mismatch");
  if (a_in.rows() < options.bins || b_in.rows() < options.bins) {
    throw InvalidArgument("diversity: need at least " + std::to_string(options.bins) +
                          " samples per set for the bin count");
  }
  if (!a_in.allFinite() || !b_in.allFinite()) throw NumericalError("diversity: non-finite features");
  // Canonical argument order so that the value is exactly symmetric.
  const bool swap = lexicographically_less(b_in, a_in);
  const Eigen::MatrixXd& a = swap ? b_in : a_in;
  const Eigen::MatrixXd& b = swap ? a_in : b_in;

  const Eigen::Index d = a.cols();
  const Eigen::RowVectorXd mu_a = a.colwise().mean();
  const Eigen::RowVectorXd mu_b = b.colwise().mean();
  Eigen::MatrixXd pooled(a.rows() + b.rows(), d);
  pooled << a, b;
  const Eigen::RowVectorXd mu = pooled.colwise().mean();
  const Eigen::MatrixXd centered = pooled.rowwise() - mu;
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(pooled.rows());
  const Eigen::MatrixXd ca = a.rowwise() - mu_a;
  const Eigen::MatrixXd cb = b.rowwise() - mu_b;
  Eigen::MatrixXd within = (ca.transpose() * ca + cb.transpose() * cb) /
                           static_cast<double>(pooled.rows());
  const double scale = std::max(within.trace() / static_cast<double>(d), 1e-12);
  within.diagonal().array() += options.ridge * scale;

  std::vector<std::pair<std::string, Eigen::VectorXd>> axes;
  const Eigen::VectorXd diff = (mu_a - mu_b).transpose();
  if (diff.norm() > 0.0) {
    Eigen::VectorXd w = within.ldlt().solve(diff);
    if (w.allFinite() && w.norm() > 0.0) axes.emplace_back("env_classifier", w.normalized());
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() == Eigen::Success) {
    const int k = std::min<int>(options.principal_axes, static_cast<int>(d));
    for (int i = 0; i < k; ++i) {
      const Eigen::Index col = d - 1 - i;  // eigenvalues ascend
      if (es.eigenvalues()[col] <= 0.0) break;
      axes.emplace_back("pc" + std::to_string(i + 1), es.eigenvectors().col(col));
    }
  }

  DiversityResult out;
  out.bins = options.bins;
  out.axis = "none";
  for (const auto& [name, w] : axes) {
    const double v = histogram_diversity(a * w, b * w, options.bins);
    out.per_axis.push_back(v);
    if (v > out.value || out.axis == "none") {
      out.value = v;
      out.axis = name;
    }
  }
  return out;
}

}  // namespace cdga
