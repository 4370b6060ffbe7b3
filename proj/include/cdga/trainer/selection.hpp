#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include "cdga/trainer/train.hpp"

namespace cdga {

// Model-selection rules over the runs of one (target domain, trial) group.
// Runs with held_out_domain set are leave-one-domain-out auxiliaries; the
// other ("full") runs train on every training domain.
//
// Ties break on the earliest step, then the lowest run index (lowest
// hyperparameter index for leave-one-domain-out).

struct Selection {
  std::size_t run_index = 0;   // index into the input span
  std::size_t checkpoint = 0;  // index into that run's checkpoints
  int step = 0;
  int hparam_index = 0;
  double target_accuracy = 0.0;
};

enum class SelectionRule { kTrainingDomainValidation, kLeaveOneDomainOut, kOracle };

std::string_view to_string(SelectionRule rule);
SelectionRule parse_selection_rule(std::string_view text);

// Maximises the mean training-domain validation accuracy over every
// checkpoint of every full run. Never reads target accuracies.
Selection select_training_domain_validation(std::span<const BenchmarkRun> runs);

// Per hyperparameter choice, averages the final-checkpoint accuracy of each
// left-out training domain; the best choice's full run is reported at its
// final checkpoint. Needs at least two training domains.
Selection select_leave_one_domain_out(std::span<const BenchmarkRun> runs);

// Maximises target accuracy directly over every checkpoint of every full run.
Selection select_oracle(std::span<const BenchmarkRun> runs);

Selection select(SelectionRule rule, std::span<const BenchmarkRun> runs);

}  // namespace cdga
