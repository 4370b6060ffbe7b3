#include "cdga/diagnostics/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "cdga/core/error.hpp"
#include "cdga/core/fs.hpp"
#include "cdga/core/rng.hpp"
#include "cdga/diagnostics/plots.hpp"

namespace cdga {

namespace {

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& x) {
  const Eigen::VectorXd sq = x.rowwise().squaredNorm();
  Eigen::MatrixXd d = (-2.0 * x * x.transpose()).colwise() + sq;
  d.rowwise() += sq.transpose();
  d = d.cwiseMax(0.0);
  d.diagonal().setZero();
  return d;
}

// Row-wise Gaussian affinities with per-row precision found by bisection so
// that each row's entropy matches log(perplexity).
Eigen::MatrixXd conditional_affinities(const Eigen::MatrixXd& d, double perplexity) {
  const Eigen::Index n = d.rows();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  const double target = std::log(perplexity);
  for (Eigen::Index i = 0; i < n; ++i) {
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    double min_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) if (j != i) min_d = std::min(min_d, d(i, j));
    for (int it = 0; it < 200; ++it) {
      double sum = 0.0, dsum = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        const double w = std::exp(-beta * (d(i, j) - min_d));
        p(i, j) = w;
        sum += w;
        dsum += w * (d(i, j) - min_d);
      }
      const double h = std::log(sum) + beta * dsum / sum;
      if (std::abs(h - target) < 1e-5) break;
      if (h > target) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
    }
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string file_stem(const std::string& s) {
  std::string out;
  for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_';
  return out.empty() ? "unnamed" : out;
}

}  // namespace

Eigen::MatrixXd tsne(const Eigen::MatrixXd& x_in, const TsneOptions& opt, bool* jittered) {
  const Eigen::Index n = x_in.rows();
  if (n < 2) throw InvalidArgument("t-SNE needs at least 2 points");
  if (!x_in.allFinite()) throw NumericalError("t-SNE: non-finite input");
  Rng rng(derive_seed(opt.seed, 0x75e));
  Eigen::MatrixXd x = x_in;
  Eigen::MatrixXd d = squared_distances(x);
  if (jittered) *jittered = false;
  if (d.maxCoeff() == 0.0) {
    const double scale = std::max(1e-6, 1e-6 * x.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] += scale * rng.normal();
    d = squared_distances(x);
    if (jittered) *jittered = true;
  }
  const double perplexity = std::clamp(std::min(opt.perplexity, (static_cast<double>(n) - 1.0) / 3.0),
                                       1.0, opt.perplexity);
  Eigen::MatrixXd p = conditional_affinities(d, perplexity);
  p = (p + p.transpose()).eval() / (2.0 * static_cast<double>(n));
  p = p.cwiseMax(1e-12);
  p.diagonal().setZero();

  Eigen::MatrixXd y(n, 2);
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = 1e-4 * rng.normal();
  Eigen::MatrixXd update = Eigen::MatrixXd::Zero(n, 2);
  Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(n, 2);
  Eigen::MatrixXd num(n, n), grad(n, 2);
  for (int it = 0; it < opt.iterations; ++it) {
    const double exag = it < opt.exaggeration_iters ? opt.exaggeration : 1.0;
    const double momentum = it < opt.exaggeration_iters ? 0.5 : 0.8;
    num = (1.0 + squared_distances(y).array()).inverse().matrix();
    num.diagonal().setZero();
    const double z = num.sum();
    // grad_i = 4 sum_j (exag p_ij - q_ij) num_ij (y_i - y_j)
    const Eigen::MatrixXd w = ((exag * p).array() - num.array() / z).matrix().cwiseProduct(num);
    grad = 4.0 * (w.rowwise().sum().asDiagonal() * y - w * y);
    for (Eigen::Index i = 0; i < grad.size(); ++i) {
      const bool same = (grad.data()[i] > 0.0) == (update.data()[i] > 0.0);
      gains.data()[i] = std::max(0.01, same ? gains.data()[i] * 0.8 : gains.data()[i] + 0.2);
    }
    update = momentum * update - opt.learning_rate * gains.cwiseProduct(grad);
    y += update;
    y.rowwise() -= y.colwise().mean();
  }
  if (!y.allFinite()) throw NumericalError("t-SNE diverged");
  return y;
}

TsneReport tsne_report(const Eigen::MatrixXd& embeddings, const std::vector<TsnePoint>& points,
                       bool per_class, const std::filesystem::path& out_dir, const TsneOptions& options) {
  if (static_cast<Eigen::Index>(points.size()) != embeddings.rows()) {
    throw InvalidArgument("tsne_report: one tag per embedding row required");
  }
  if (points.size() < 2) throw InvalidArgument("tsne_report: need at least 2 points");
  TsneReport report;
  report.coords = Eigen::MatrixXd::Zero(embeddings.rows(), 2);

  std::map<std::string, std::vector<Eigen::Index>> groups;
  for (std::size_t i = 0; i < points.size(); ++i) {
    groups[per_class ? points[i].class_label : std::string("all")].push_back(static_cast<Eigen::Index>(i));
  }
  fs::create_directories(out_dir);
  for (const auto& [name, rows] : groups) {
    if (rows.size() < 2) {
      report.warnings.push_back("t-SNE group '" + name + "' has fewer than 2 points; skipped");
      continue;
    }
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(rows.size()), embeddings.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) sub.row(static_cast<Eigen::Index>(k)) = embeddings.row(rows[k]);
    bool jittered = false;
    const Eigen::MatrixXd y = tsne(sub, options, &jittered);
    if (jittered) report.warnings.push_back("t-SNE group '" + name + "': identical embeddings jittered");

    std::map<std::string, Series> by_origin;
    std::ostringstream csv;
    csv << "id,class,origin,x,y\n";
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto& pt = points[static_cast<std::size_t>(rows[k])];
      report.coords.row(rows[k]) = y.row(static_cast<Eigen::Index>(k));
      auto& s = by_origin[pt.origin];
      s.name = pt.origin;
      s.x.push_back(y(static_cast<Eigen::Index>(k), 0));
      s.y.push_back(y(static_cast<Eigen::Index>(k), 1));
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.6f,%.6f", y(static_cast<Eigen::Index>(k), 0),
                    y(static_cast<Eigen::Index>(k), 1));
      csv << csv_escape(pt.id) << ',' << csv_escape(pt.class_label) << ',' << csv_escape(pt.origin) << ','
          << buf << '\n';
    }
    std::vector<Series> series;
    for (auto& [origin, s] : by_origin) series.push_back(std::move(s));
    const std::string stem = "tsne_" + file_stem(name);
    atomic_write(out_dir / (stem + ".svg"), scatter_svg(series, "t-SNE: " + name));
    atomic_write(out_dir / (stem + ".csv"), csv.str());
    report.files.push_back(out_dir / (stem + ".svg"));
  }
  return report;
}

double silhouette_score(const Eigen::MatrixXd& pts, const std::vector<int>& labels) {
  const Eigen::Index n = pts.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n) throw InvalidArgument("silhouette: label count");
  const Eigen::MatrixXd d = squared_distances(pts).cwiseSqrt();
  const int k = *std::max_element(labels.begin(), labels.end()) + 1;
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
    std::vector<int> cnt(static_cast<std::size_t>(k), 0);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      sum[static_cast<std::size_t>(labels[j])] += d(i, j);
      ++cnt[static_cast<std::size_t>(labels[j])];
    }
    const auto own = static_cast<std::size_t>(labels[i]);
    if (cnt[own] == 0) continue;
    const double a = sum[own] / cnt[own];
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sum.size(); ++c) {
      if (c != own && cnt[c] > 0) b = std::min(b, sum[c] / cnt[c]);
    }
    if (std::isinf(b)) continue;
    total += (b - a) / std::max(a, b);
  }
  return total / static_cast<double>(n);
}

}  // namespace cdga
