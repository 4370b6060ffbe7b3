#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace cdga {

struct ErmLoss {
  double value = 0.0;
  std::vector<int> empty_domains;  // domains with no sample; they contribute 0
};

// Sum over domains of the mean cross-entropy within each domain:
//   sum_i 1/|E_i| sum_k -log p_k[y_k].
// `probabilities` holds one probability row per sample. Domains are
// 0..num_domains-1; num_domains < 0 means max(domain_ids)+1.
ErmLoss erm_loss(const Eigen::MatrixXd& probabilities, std::span<const int> labels,
                 std::span<const int> domain_ids, int num_domains = -1);

}  // namespace cdga
