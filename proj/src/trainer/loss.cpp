#include "cdga/trainer/loss.hpp"

#include <algorithm>
#include <cmath>

#include "cdga/core/error.hpp"

namespace cdga {

ErmLoss erm_loss(const Eigen::MatrixXd& probabilities, std::span<const int> labels,
                 std::span<const int> domain_ids, int num_domains) {
  const auto n = static_cast<std::size_t>(probabilities.rows());
  if (labels.size() != n || domain_ids.size() != n) {
    throw InvalidArgument("erm_loss: labels/domain ids must have one entry per row");
  }
  if (num_domains < 0) {
    num_domains = domain_ids.empty() ? 0 : *std::max_element(domain_ids.begin(), domain_ids.end()) + 1;
  }
  std::vector<double> sums(static_cast<std::size_t>(num_domains), 0.0);
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_domains), 0);
  for (std::size_t k = 0; k < n; ++k) {
    const auto row = probabilities.row(static_cast<Eigen::Index>(k));
    if (std::abs(row.sum() - 1.0) > 1e-6 || (row.array() < 0.0).any()) {
      throw InvalidArgument("erm_loss: row " + std::to_string(k) + " is not a probability vector");
    }
    const int y = labels[k];
    const int d = domain_ids[k];
    if (y < 0 || y >= probabilities.cols()) throw InvalidArgument("erm_loss: label out of range");
    if (d < 0 || d >= num_domains) throw InvalidArgument("erm_loss: domain id out of range");
    sums[static_cast<std::size_t>(d)] -= std::log(row(y));
    ++counts[static_cast<std::size_t>(d)];
  }
  ErmLoss out;
  for (int d = 0; d < num_domains; ++d) {
    const auto i = static_cast<std::size_t>(d);
    if (counts[i] == 0) {
      out.empty_domains.push_back(d);
      continue;
    }
    out.value += sums[i] / static_cast<double>(counts[i]);
  }
  return out;
}

}  // namespace cdga
