#pragma once

#include <string>
#include <vector>

namespace cdga {

// Target accuracy (fraction in [0,1]) of one trial after model selection.
struct TrialResult {
  std::string algorithm;  // e.g. "ERM", "ERM+CDGA"
  std::string dataset;
  std::string selection;
  std::string target_domain;
  int trial = 0;
  double accuracy = 0.0;
};

struct ResultCell {
  std::string algorithm;
  std::string dataset;
  std::string selection;
  std::string target_domain;
  double mean = 0.0;  // percent
  double se = 0.0;    // percent; population std of trials / sqrt(trials)
  int trials = 0;
};

struct ResultTable {
  std::vector<ResultCell> cells;  // sorted by (dataset, selection, algorithm, target)

  // Unweighted mean over target domains of the cell means (percent).
  double average(const std::string& algorithm, const std::string& dataset,
                 const std::string& selection) const;

  // algorithm,dataset,selection,target,mean,se,trials
  std::string to_csv() const;
  // One block per (dataset, selection): algorithms as rows, targets + Avg as
  // columns, cells rendered "mean ± se" with one decimal.
  std::string to_text() const;
};

ResultTable aggregate_table(const std::vector<TrialResult>& results);

// "85.5 ± 0.1"
std::string format_mean_se(double mean, double se);

}  // namespace cdga
