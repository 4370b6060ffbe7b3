#pragma once

#include <span>
#include <string>

#include <Eigen/Dense>

#include "cdga/trainer/model.hpp"

namespace cdga {

// Hessian of the mean cross-entropy with respect to the classifier head
// parameters, in the model's head layout (column-major vec of [W b]).
struct HeadHessian {
  Eigen::MatrixXd matrix;
  std::string domain;
  int step = 0;

  Eigen::Index size() const { return matrix.rows(); }
};

// Closed form: mean_k (h_k h_k^T) kron (diag(p_k) - p_k p_k^T), h_k = [features_k; 1].
// `features` is F x N, `probs` is C x N.
Eigen::MatrixXd head_hessian_closed_form(const Eigen::MatrixXd& features, const Eigen::MatrixXd& probs);

HeadHessian classifier_head_hessian(const Model& model, const Eigen::MatrixXd& x,
                                    std::span<const int> labels, const std::string& domain,
                                    int step = 0);

double spectral_norm_dense(const Eigen::MatrixXd& symmetric);
double spectral_norm_power(const Eigen::MatrixXd& symmetric, double tol = 1e-13,
                           int max_iter = 100000);

// Largest singular value of a - b. Dense eigensolve up to this size, power
// iteration above.
inline constexpr Eigen::Index kDenseSpectralLimit = 512;
double hessian_distance(const HeadHessian& a, const HeadHessian& b);

}  // namespace cdga
