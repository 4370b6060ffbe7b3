#include "cdga/diagnostics/near_dup.hpp"

#include <algorithm>

#include "cdga/core/error.hpp"

namespace cdga {

double RateMatrix::at(const std::string& original, const std::string& generated_domain) const {
  const auto r = std::find(originals.begin(), originals.end(), original);
  const auto c = std::find(generated.begin(), generated.end(), generated_domain);
  if (r == originals.end() || c == generated.end()) {
    throw InvalidArgument("no near-duplicate rate for " + original + " / " + generated_domain);
  }
  return rates(r - originals.begin(), c - generated.begin());
}

nlohmann::json to_json(const RateMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rates.rows(); ++r) {
    std::vector<double> row;
    for (Eigen::Index c = 0; c < m.rates.cols(); ++c) row.push_back(m.rates(r, c));
    rows.push_back(row);
  }
  return {{"threshold", m.threshold},
          {"originals", m.originals},
          {"generated", m.generated},
          {"rates", rows}};
}

RateMatrix near_duplicate_rates(const std::map<std::string, EmbeddingMatrix>& originals,
                                const std::map<std::string, EmbeddingMatrix>& generated,
                                double threshold) {
  RateMatrix out;
  out.threshold = threshold;
  Eigen::Index dim = -1;
  auto check_dim = [&](const EmbeddingMatrix& e) {
    if (e.size() == 0) return;
    if (dim < 0) dim = e.dim();
    if (e.dim() != dim) throw InvalidArgument("near_duplicate_rates: embedding dimension mismatch");
  };
  for (const auto& [name, e] : originals) {
    check_dim(e);
    out.originals.push_back(name);
  }
  for (const auto& [name, e] : generated) {
    check_dim(e);
    out.generated.push_back(name);
  }
  out.rates = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(out.originals.size()),
                                    static_cast<Eigen::Index>(out.generated.size()));
  Eigen::Index r = 0;
  for (const auto& [oname, o] : originals) {
    Eigen::Index c = 0;
    for (const auto& [gname, g] : generated) {
      if (o.size() > 0 && g.size() > 0) {
        const Eigen::MatrixXd sims = o.vectors * g.vectors.transpose();
        Eigen::Index hits = 0;
        for (Eigen::Index i = 0; i < sims.rows(); ++i) {
          if (sims.row(i).maxCoeff() >= threshold - kCosineSlack) ++hits;
        }
        out.rates(r, c) = 100.0 * static_cast<double>(hits) / static_cast<double>(o.size());
      }
      ++c;
    }
    ++r;
  }
  return out;
}

}  // namespace cdga
