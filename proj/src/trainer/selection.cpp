#include "cdga/trainer/selection.hpp"

#include <map>
#include <optional>
#include <set>

#include "cdga/core/error.hpp"

namespace cdga {

std::string_view to_string(SelectionRule rule) {
  switch (rule) {
    case SelectionRule::kTrainingDomainValidation:
      return "training_domain_validation";
    case SelectionRule::kLeaveOneDomainOut:
      return "leave_one_domain_out";
    case SelectionRule::kOracle:
      return "oracle";
  }
  return "oracle";
}

SelectionRule parse_selection_rule(std::string_view text) {
  for (auto r : {SelectionRule::kTrainingDomainValidation, SelectionRule::kLeaveOneDomainOut,
                 SelectionRule::kOracle}) {
    if (to_string(r) == text) return r;
  }
  throw InvalidArgument("unknown selection rule '" + std::string(text) + "'");
}

namespace {

// Scans every checkpoint of every full run for the highest score; strict '>'
// keeps the earliest step within a run, and runs are compared on (score,
// step, index) so a later run only wins with a higher score or earlier step.
template <typename Score>
Selection argmax_checkpoint(std::span<const BenchmarkRun> runs, Score score) {
  std::optional<Selection> best;
  double best_score = 0.0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    if (runs[r].config.held_out_domain) continue;
    for (std::size_t c = 0; c < runs[r].checkpoints.size(); ++c) {
      const auto& cp = runs[r].checkpoints[c];
      const double s = score(cp);
      const bool better = !best || s > best_score || (s == best_score && cp.step < best->step);
      if (better) {
        best = Selection{r, c, cp.step, runs[r].config.hparam_index, cp.target_accuracy};
        best_score = s;
      }
    }
  }
  if (!best) throw InvalidArgument("model selection: no checkpoints to choose from");
  return *best;
}

}  // namespace

Selection select_training_domain_validation(std::span<const BenchmarkRun> runs) {
  for (const auto& run : runs) {
    if (run.config.held_out_domain) continue;
    for (const auto& cp : run.checkpoints) {
      if (cp.val_accuracy.empty()) {
        throw InvalidArgument("training-domain validation needs per-domain validation accuracies");
      }
    }
  }
  return argmax_checkpoint(runs, [](const Checkpoint& cp) { return cp.mean_val_accuracy(); });
}

Selection select_oracle(std::span<const BenchmarkRun> runs) {
  return argmax_checkpoint(runs, [](const Checkpoint& cp) { return cp.target_accuracy; });
}

Selection select_leave_one_domain_out(std::span<const BenchmarkRun> runs) {
  std::set<std::string> train_domains;
  for (const auto& run : runs) {
    train_domains.insert(run.config.train_domains.begin(), run.config.train_domains.end());
  }
  if (train_domains.size() < 2) {
    throw InvalidArgument("leave-one-domain-out selection needs at least two training domains");
  }

  // hparam -> held-out domain -> final leave-out accuracy
  std::map<int, std::map<std::string, double>> leave_out;
  std::map<int, std::size_t> full_run;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto& run = runs[r];
    if (run.checkpoints.empty()) continue;
    const int h = run.config.hparam_index;
    if (run.config.held_out_domain) {
      const auto& acc = run.checkpoints.back().leave_out_accuracy;
      if (!acc) throw InvalidArgument("leave-one-domain-out run lacks a leave-out accuracy");
      leave_out[h].emplace(*run.config.held_out_domain, *acc);
    } else {
      full_run.emplace(h, r);  // first (lowest index) full run per choice
    }
  }

  std::optional<int> best_h;
  double best_mean = 0.0;
  for (const auto& [h, per_domain] : leave_out) {
    if (!full_run.contains(h) || per_domain.empty()) continue;
    double mean = 0.0;
    for (const auto& [_, acc] : per_domain) mean += acc;
    mean /= static_cast<double>(per_domain.size());
    if (!best_h || mean > best_mean) {
      best_h = h;
      best_mean = mean;
    }
  }
  if (!best_h) {
    throw InvalidArgument("leave-one-domain-out selection: no hyperparameter choice has both "
                          "leave-out runs and a full run");
  }
  const std::size_t r = full_run.at(*best_h);
  const std::size_t c = runs[r].checkpoints.size() - 1;
  const auto& cp = runs[r].checkpoints[c];
  return Selection{r, c, cp.step, *best_h, cp.target_accuracy};
}

Selection select(SelectionRule rule, std::span<const BenchmarkRun> runs) {
  switch (rule) {
    case SelectionRule::kTrainingDomainValidation:
      return select_training_domain_validation(runs);
    case SelectionRule::kLeaveOneDomainOut:
      return select_leave_one_domain_out(runs);
    case SelectionRule::kOracle:
      return select_oracle(runs);
  }
  return select_oracle(runs);
}

}  // namespace cdga
