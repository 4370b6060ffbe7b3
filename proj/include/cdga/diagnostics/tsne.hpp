#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cdga {

struct TsneOptions {
  double perplexity = 30.0;  // capped at (N - 1) / 3
  int iterations = 1000;
  int exaggeration_iters = 250;
  double exaggeration = 12.0;
  double learning_rate = 200.0;
  std::uint64_t seed = 0;
};

// Exact O(N^2) t-SNE of the rows of `x`. Returns N x 2.
// Identical inputs are jittered; `jittered` reports whether that happened.
Eigen::MatrixXd tsne(const Eigen::MatrixXd& x, const TsneOptions& options = {}, bool* jittered = nullptr);

struct TsnePoint {
  std::string id;
  std::string class_label;
  std::string origin;  // real domain name, or "s->g" for generated images
};

struct TsneReport {
  Eigen::MatrixXd coords;  // N x 2, rows in input order
  std::vector<std::filesystem::path> files;
  std::vector<std::string> warnings;
};

// Projects the embeddings (one row per point) and writes one scatter per class
// (or a single "all" scatter) coloured by origin, with CSV coordinates
// id,class,origin,x,y next to each SVG.
TsneReport tsne_report(const Eigen::MatrixXd& embeddings, const std::vector<TsnePoint>& points,
                       bool per_class, const std::filesystem::path& out_dir,
                       const TsneOptions& options = {});

// Mean silhouette coefficient of 2-D points under the given labels.
double silhouette_score(const Eigen::MatrixXd& points, const std::vector<int>& labels);

}  // namespace cdga
