#include "cdga/pipeline/commands.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "cdga/core/error.hpp"
#include "cdga/core/fs.hpp"
#include "cdga/core/hash.hpp"
#include "cdga/core/rng.hpp"
#include "cdga/dataset/counts.hpp"
#include "cdga/diagnostics/attacks.hpp"
#include "cdga/diagnostics/diversity.hpp"
#include "cdga/diagnostics/embedding.hpp"
#include "cdga/diagnostics/hessian.hpp"
#include "cdga/diagnostics/near_dup.hpp"
#include "cdga/diagnostics/plots.hpp"
#include "cdga/diagnostics/report.hpp"
#include "cdga/diagnostics/sharpness.hpp"
#include "cdga/diagnostics/tsne.hpp"
#include "cdga/generator/execute.hpp"
#include "cdga/generator/plan.hpp"
#include "cdga/pipeline/ledger.hpp"
#include "cdga/trainer/results.hpp"
#include "cdga/trainer/selection.hpp"
#include "cdga/trainer/train.hpp"

namespace cdga {

namespace {

void note(const CommandOptions& o, const std::string& msg) {
  if (o.log) *o.log << msg << '\n';
}

fs::path augmented_manifest_path(const ExperimentConfig& c) {
  return c.output_root / "generate" / "augmented_manifest.json";
}

std::vector<std::string> real_domains(const DomainDatasetManifest& m) {
  std::vector<std::string> out;
  for (const auto& d : m.domains) {
    if (!parse_generated_domain(d)) out.push_back(d);
  }
  return out;
}

bool uses_generated(const ExperimentConfig& c) {
  return std::any_of(c.algorithms.begin(), c.algorithms.end(),
                     [](const std::string& a) { return algorithm_generated_use(a) != GeneratedUse::kNone; });
}

// Augmented tree when generation has run, the original dataset otherwise.
DomainDatasetManifest working_manifest(const ExperimentConfig& c) {
  if (fs::exists(augmented_manifest_path(c))) return load_manifest(augmented_manifest_path(c));
  return scan_dataset(c.dataset_root);
}

std::string slug(const std::string& s) {
  std::string out;
  for (char ch : s) {
    if (ch == '+') out += "_plus_";
    else if (ch == '*') out += "_star";
    else if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_') out += ch;
    else out += '_';
  }
  return out;
}

std::vector<TrainConfig> search_configs(const ExperimentConfig& c, const std::string& algorithm,
                                        const std::string& target, const std::vector<std::string>& domains) {
  TrainConfig base;
  base.model = c.model;
  base.hparams.steps = c.search.steps;
  base.hparams.augmentation = algorithm_generated_use(algorithm);
  base.target_domain = target;
  for (const auto& d : domains) {
    if (d != target) base.train_domains.push_back(d);
  }
  base.checkpoint_every = c.search.checkpoint_every;
  base.holdout_fraction = c.search.holdout_fraction;
  return random_search(c.search.space ? *c.search.space : default_search_space(), c.search.n_hparams,
                       c.search.n_trials, c.seed, base);
}

BenchmarkRun failed_run(const TrainConfig& cfg, const std::string& why) {
  BenchmarkRun r;
  r.config = cfg;
  r.failed = true;
  r.failure = why;
  return r;
}

// Reuses a persisted run when its recorded config matches exactly.
BenchmarkRun run_or_load(const TrainConfig& cfg, const ImageStore& store, const fs::path& path,
                         const CommandOptions& o) {
  if (fs::exists(path)) {
    try {
      const json doc = read_json(path);
      if (doc.at("config") == to_json(cfg)) return benchmark_run_from_json(doc);
    } catch (const std::exception&) {
    }
  }
  BenchmarkRun run;
  try {
    run = train(cfg, store);
  } catch (const Error& e) {
    run = failed_run(cfg, e.what());
  }
  note(o, "  trained " + path.filename().string() + (run.failed ? " (failed: " + run.failure + ")" : ""));
  write_json(path, to_json(run));
  return run;
}

std::vector<std::size_t> domain_entries(const DomainDatasetManifest& m, const std::string& domain, int cap) {
  std::vector<std::size_t> out;
  const auto d = m.domain_index(domain);
  if (!d) return out;
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    if (m.entries[i].domain == *d && (cap <= 0 || static_cast<int>(out.size()) < cap)) out.push_back(i);
  }
  return out;
}

std::string matrix_csv(const RateMatrix& m) {
  std::ostringstream out;
  out << "original,generated,rate\n";
  for (std::size_t r = 0; r < m.originals.size(); ++r) {
    for (std::size_t c = 0; c < m.generated.size(); ++c) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6f", m.rates(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
      out << m.originals[r] << ',' << m.generated[c] << ',' << buf << '\n';
    }
  }
  return out.str();
}

void write_plot(const fs::path& dir, const std::string& stem, const std::string& svg, const std::string& csv) {
  atomic_write(dir / (stem + ".svg"), svg);
  atomic_write(dir / (stem + ".csv"), csv);
}

}  // namespace

ExperimentConfig apply_overrides(ExperimentConfig config, const CommandOptions& options) {
  if (options.seed) config.seed = *options.seed;
  if (options.out) config.output_root = *options.out;
  if (options.stub_backend) {
    config.backend.kind = "stub";
    config.diagnostics.encoder = "stub";
  }
  return config;
}

namespace {

// Dataset root plus every file's path, size and mtime; changes on disk force a rescan.
std::string scan_stage_hash(const ExperimentConfig& config) {
  std::vector<std::string> lines;
  for (const auto& e : fs::recursive_directory_iterator(config.dataset_root)) {
    if (!e.is_regular_file()) continue;
    lines.push_back(fs::relative(e.path(), config.dataset_root).generic_string() + '\t' +
                    std::to_string(e.file_size()) + '\t' +
                    std::to_string(e.last_write_time().time_since_epoch().count()));
  }
  std::sort(lines.begin(), lines.end());
  std::string text = fs::absolute(config.dataset_root).generic_string() + '\n';
  for (const auto& l : lines) text += l + '\n';
  return sha256_hex(text);
}

}  // namespace

CommandResult cmd_scan(const ExperimentConfig& config, const CommandOptions& options) {
  config.validate();
  RunLedger ledger(config.output_root);
  const std::string stage_hash = scan_stage_hash(config);
  CommandResult r;
  if (ledger.completed("scan", stage_hash)) {
    note(options, "scan: up to date (ledger), nothing to do");
    r.skipped = true;
    return r;
  }
  const auto manifest = scan_dataset(config.dataset_root);
  const fs::path dir = config.output_root / "scan";
  save_manifest(manifest, dir / "manifest.json");
  const auto counts = count_per_class_domain(manifest);
  write_json(dir / "counts.json", {{"domains", manifest.domains},
                                   {"classes", manifest.classes},
                                   {"counts", counts.counts},
                                   {"warnings", manifest.warnings}});
  for (const auto& w : manifest.warnings) note(options, "warning: " + w);
  note(options, "scanned " + std::to_string(manifest.entries.size()) + " images in " +
                    std::to_string(manifest.domains.size()) + " domains");
  r.summary = {{"images", manifest.entries.size()},
               {"domains", manifest.domains},
               {"classes", manifest.classes},
               {"warnings", manifest.warnings.size()}};
  ledger.record("scan", stage_hash, config_hash(config),
                {{"manifest", fs::path("scan/manifest.json")}, {"counts", fs::path("scan/counts.json")}});
  return r;
}

CommandResult cmd_generate(const ExperimentConfig& config, const CommandOptions& options) {
  config.validate();
  const fs::path root = config.output_root;
  RunLedger ledger(root);
  const std::string stage_hash = generate_stage_hash(config);
  const std::string chash = config_hash(config);
  CommandResult result;
  if (ledger.completed("generate", stage_hash)) {
    note(options, "generate: up to date (ledger), nothing to do");
    result.skipped = true;
    result.summary = {{"backend_calls", 0}, {"status", "complete"}};
    return result;
  }
  const fs::path dir = root / "generate";
  if (!options.resume && fs::exists(dir)) fs::remove_all(dir);

  const auto manifest = scan_dataset(config.dataset_root);
  const auto& aug = config.augmentation;
  PlanOptions popts;
  popts.seed = config.seed;
  popts.backend_params = config.backend.params;
  GenerationPlan plan;
  if (is_cdga(aug.kind)) {
    BatchSpec b = aug.b;
    if (aug.balanced) b = balanced_batch_sizes(count_per_class_domain(manifest));
    plan = plan_cdga(manifest, manifest.domains, aug.descriptions, b, aug.target_description, aug.kind, popts);
  } else {
    if (aug.balanced) throw InvalidArgument("balanced b is only defined for CDGA modes");
    plan = plan_sdga(manifest, aug.kind, aug.descriptions, aug.b, {}, popts);
  }
  for (const auto& w : plan.warnings) note(options, "warning: " + w);
  write_json(dir / "plan.json", to_json(plan));
  note(options, "generate: " + std::to_string(plan.tasks.size()) + " tasks, " +
                    std::to_string(plan.total_images()) + " images");

  std::shared_ptr<LdmBackend> backend = options.backend;
  if (!backend) {
    if (config.backend.kind == "stub") {
      backend = std::make_shared<StubBackend>(StubBackend::Options{});
    } else {
      backend = std::make_shared<HttpBackend>(config.backend.url, config.backend.timeout_seconds);
    }
  }
  ExecuteOptions eopts;
  eopts.work_dir = dir / "work";
  eopts.workers = config.backend.workers;
  eopts.max_retries = config.backend.max_retries;
  eopts.stop = options.stop;
  const auto exec = execute_plan(plan, *backend, eopts);
  for (const auto& f : exec.report.failures) note(options, "task " + f.task + " failed: " + f.reason);

  save_records(exec.records, dir / "records.json");
  const auto augmented = materialize_augmented_dataset(exec.records, manifest, dir / "augmented", true);
  save_manifest(augmented, augmented_manifest_path(config));
  json report = to_json(exec.report);
  report["config_hash"] = chash;
  report["backend"] = backend->name();
  write_json(dir / "run_report.json", report);

  const std::string status = exec.report.status();
  note(options, "generate: " + status + ", " + std::to_string(exec.report.backend_calls) + " backend calls");
  result.summary = {{"backend_calls", exec.report.backend_calls},
                    {"status", status},
                    {"tasks", exec.report.tasks_total},
                    {"images", exec.records.size()}};
  if (status != "complete") {
    result.exit_code = kExitPartial;
    return result;
  }
  ledger.record("generate", stage_hash, chash,
                {{"manifest", fs::path("generate/augmented_manifest.json")},
                 {"records", fs::path("generate/records.json")},
                 {"run_report", fs::path("generate/run_report.json")}});
  return result;
}

CommandResult cmd_benchmark(const ExperimentConfig& config, const CommandOptions& options) {
  config.validate();
  const fs::path root = config.output_root;
  RunLedger ledger(root);
  const std::string stage_hash = benchmark_stage_hash(config);
  const std::string chash = config_hash(config);
  CommandResult result;
  if (ledger.completed("benchmark", stage_hash)) {
    note(options, "benchmark: up to date (ledger), nothing to do");
    result.skipped = true;
    return result;
  }
  if (uses_generated(config) && !fs::exists(augmented_manifest_path(config))) {
    throw InvalidArgument("augmented dataset missing: run `generate` before benchmarking augmented algorithms");
  }
  const auto manifest = working_manifest(config);
  const auto domains = real_domains(manifest);
  const auto targets = config.resolved_targets(domains);
  std::vector<SelectionRule> rules;
  for (const auto& r : config.selection_rules) rules.push_back(parse_selection_rule(r));
  const bool lodo = std::find(rules.begin(), rules.end(), SelectionRule::kLeaveOneDomainOut) != rules.end();

  note(options, "benchmark: decoding " + std::to_string(manifest.entries.size()) + " images");
  const ImageStore store(manifest, config.model.input_size);
  const fs::path dir = root / "benchmark";

  std::vector<TrialResult> trials;
  json trial_docs = json::array();
  json missing = json::array();
  std::size_t full_runs = 0, aux_runs = 0, failed_runs = 0;
  std::vector<fs::path> run_files;

  for (const auto& algorithm : config.algorithms) {
    for (const auto& target : targets) {
      note(options, "benchmark: " + algorithm + " target=" + target);
      const auto configs = search_configs(config, algorithm, target, domains);
      std::map<int, std::vector<BenchmarkRun>> by_trial;
      for (const auto& cfg : configs) {
        const fs::path run_dir = dir / "runs" / slug(algorithm) / slug(target);
        const std::string stem = "h" + std::to_string(cfg.hparam_index) + "_t" + std::to_string(cfg.trial);
        by_trial[cfg.trial].push_back(run_or_load(cfg, store, run_dir / (stem + ".json"), options));
        run_files.push_back(fs::relative(run_dir / (stem + ".json"), root));
        ++full_runs;
        if (lodo && cfg.train_domains.size() >= 2) {
          for (const auto& held : cfg.train_domains) {
            TrainConfig aux = cfg;
            aux.held_out_domain = held;
            by_trial[cfg.trial].push_back(
                run_or_load(aux, store, run_dir / (stem + "__lo_" + slug(held) + ".json"), options));
            run_files.push_back(fs::relative(run_dir / (stem + "__lo_" + slug(held) + ".json"), root));
            ++aux_runs;
          }
        }
      }
      for (auto& [trial, runs] : by_trial) {
        std::vector<BenchmarkRun> usable;
        for (auto& r : runs) {
          if (r.failed) {
            ++failed_runs;
            missing.push_back({{"algorithm", algorithm}, {"target", target}, {"trial", trial},
                               {"hparam", r.config.hparam_index}, {"reason", r.failure}});
          } else {
            usable.push_back(std::move(r));
          }
        }
        for (auto rule : rules) {
          const std::string rule_name(to_string(rule));
          try {
            const Selection s = select(rule, usable);
            trials.push_back({algorithm, config.dataset_name, rule_name, target, trial, s.target_accuracy});
            trial_docs.push_back({{"algorithm", algorithm}, {"dataset", config.dataset_name},
                                  {"selection", rule_name}, {"target", target}, {"trial", trial},
                                  {"hparam", s.hparam_index}, {"step", s.step},
                                  {"accuracy", s.target_accuracy}});
          } catch (const InvalidArgument& e) {
            missing.push_back({{"algorithm", algorithm}, {"target", target}, {"trial", trial},
                               {"selection", rule_name}, {"reason", e.what()}});
          }
        }
      }
    }
  }

  std::vector<std::pair<std::string, fs::path>> artifacts;
  write_json(dir / "trials.json", {{"config_hash", chash}, {"trials", trial_docs}, {"missing", missing}});
  artifacts.emplace_back("trials", fs::path("benchmark/trials.json"));
  for (const auto& f : run_files) artifacts.emplace_back("run", f);
  for (auto rule : rules) {
    const std::string rule_name(to_string(rule));
    std::vector<TrialResult> subset;
    for (const auto& t : trials) {
      if (t.selection == rule_name) subset.push_back(t);
    }
    const ResultTable table = aggregate_table(subset);
    atomic_write(dir / "tables" / (rule_name + ".csv"), table.to_csv());
    std::string text = table.to_text();
    if (subset.empty()) text = "Selection: " + rule_name + "\n(no results)\n";
    atomic_write(dir / "tables" / (rule_name + ".txt"), text);
    artifacts.emplace_back("table", fs::path("benchmark/tables") / (rule_name + ".csv"));
    artifacts.emplace_back("table", fs::path("benchmark/tables") / (rule_name + ".txt"));
  }
  result.summary = {{"full_runs", full_runs}, {"aux_runs", aux_runs}, {"failed_runs", failed_runs},
                    {"tables", rules.size()}, {"missing", missing.size()}};
  note(options, "benchmark: " + std::to_string(full_runs) + " runs (+" + std::to_string(aux_runs) +
                    " leave-one-out), " + std::to_string(missing.size()) + " gaps");
  if (!missing.empty()) {
    result.exit_code = kExitPartial;
    return result;
  }
  ledger.record("benchmark", stage_hash, chash, artifacts);
  return result;
}

CommandResult cmd_diagnose(const ExperimentConfig& config, const CommandOptions& options) {
  config.validate();
  const fs::path root = config.output_root;
  RunLedger ledger(root);
  const std::string stage_hash = diagnose_stage_hash(config);
  const std::string chash = config_hash(config);
  CommandResult result;
  if (ledger.completed("diagnose", stage_hash)) {
    note(options, "diagnose: up to date (ledger), nothing to do");
    result.skipped = true;
    return result;
  }
  const auto& dc = config.diagnostics;
  const fs::path dir = root / "diagnose";
  const fs::path plots = dir / "plots";
  fs::create_directories(plots);
  const auto manifest = working_manifest(config);
  const auto domains = real_domains(manifest);
  std::vector<std::string> generated;
  for (const auto& d : manifest.domains) {
    if (parse_generated_domain(d)) generated.push_back(d);
  }

  DiagnosticReport report;
  report.config_hash = chash;
  json warnings = json::array();

  // Embeddings of every (capped) domain, real and generated.
  std::map<std::string, EmbeddingMatrix> embeddings;
  std::map<std::string, std::vector<std::size_t>> embedded_entries;
  const bool need_embeddings = dc.near_dup || dc.diversity || dc.tsne;
  if (need_embeddings) {
    std::unique_ptr<ImageEncoder> encoder;
    if (dc.encoder == "http") encoder = std::make_unique<HttpEncoder>(dc.encoder_url);
    else encoder = std::make_unique<StubEncoder>();
    for (const auto& d : manifest.domains) {
      const auto idx = domain_entries(manifest, d, dc.max_points_per_domain);
      std::vector<fs::path> paths;
      std::vector<std::string> ids;
      for (auto i : idx) {
        paths.push_back(manifest.absolute_path(manifest.entries[i]));
        ids.push_back(manifest.entries[i].id);
      }
      std::vector<std::string> w;
      embeddings[d] = embed_images(paths, *encoder, &w, ids);
      for (auto& s : w) warnings.push_back(s);
      std::vector<std::size_t> kept;
      for (std::size_t k = 0, e = 0; k < idx.size() && e < embeddings[d].ids.size(); ++k) {
        if (manifest.entries[idx[k]].id == embeddings[d].ids[e]) {
          kept.push_back(idx[k]);
          ++e;
        }
      }
      embedded_entries[d] = kept;
    }
  }

  if (!dc.near_dup) {
    report.skip("near_dup", "disabled in config");
  } else if (generated.empty()) {
    report.skip("near_dup", "no generated pseudo-domains (run generate first)");
  } else {
    std::map<std::string, EmbeddingMatrix> orig, gen;
    for (const auto& d : domains) orig[d] = embeddings[d];
    for (const auto& g : generated) gen[g] = embeddings[g];
    const auto rates = near_duplicate_rates(orig, gen, dc.near_dup_threshold);
    json j = to_json(rates);
    write_plot(plots, "near_dup",
               heatmap_svg(rates.rates, rates.originals, rates.generated, "Near-duplicate rate (%)"),
               matrix_csv(rates));
    j["plot"] = "diagnose/plots/near_dup.svg";
    report.set("near_dup", j);
  }

  if (!dc.diversity) {
    report.skip("diversity", "disabled in config");
  } else {
    json entries = json::array();
    json skipped = json::array();
    DiversityOptions dopt;
    dopt.bins = dc.diversity_bins;
    auto add = [&](const std::string& a, const std::string& b, const Eigen::MatrixXd& fa, const Eigen::MatrixXd& fb) {
      try {
        const auto r = diversity_shift(fa, fb, dopt);
        entries.push_back({{"pair", {a, b}}, {"value", r.value}, {"bins", r.bins}, {"axis", r.axis}});
      } catch (const InvalidArgument& e) {
        skipped.push_back({{"pair", {a, b}}, {"reason", e.what()}});
      }
    };
    for (std::size_t i = 0; i < domains.size(); ++i) {
      for (std::size_t j = i + 1; j < domains.size(); ++j) {
        add(domains[i], domains[j], embeddings[domains[i]].vectors, embeddings[domains[j]].vectors);
      }
    }
    // Each real domain against everything generated toward it.
    for (const auto& d : domains) {
      std::vector<const Eigen::MatrixXd*> parts;
      Eigen::Index rows = 0;
      for (const auto& g : generated) {
        if (parse_generated_domain(g)->guidance == d && parse_generated_domain(g)->source != d) {
          parts.push_back(&embeddings[g].vectors);
          rows += embeddings[g].vectors.rows();
        }
      }
      if (parts.empty()) continue;
      Eigen::MatrixXd pooled(rows, embeddings[d].vectors.cols());
      Eigen::Index r = 0;
      for (const auto* p : parts) {
        pooled.middleRows(r, p->rows()) = *p;
        r += p->rows();
      }
      add(d, "gen_*__to__" + d, embeddings[d].vectors, pooled);
    }
    report.set("diversity", entries);
    if (!skipped.empty()) report.set("diversity_skipped", skipped);
  }

  if (!dc.tsne) {
    report.skip("tsne", "disabled in config");
  } else {
    std::vector<TsnePoint> pts;
    std::vector<Eigen::VectorXd> rows;
    for (const auto& d : manifest.domains) {
      const auto& e = embeddings[d];
      const auto gd = parse_generated_domain(d);
      const std::string origin = gd ? gd->source + "->" + gd->guidance : d;
      for (Eigen::Index k = 0; k < e.size(); ++k) {
        const auto& entry = manifest.entries[embedded_entries[d][static_cast<std::size_t>(k)]];
        pts.push_back({e.ids[static_cast<std::size_t>(k)], manifest.classes[static_cast<std::size_t>(entry.label)], origin});
        rows.push_back(e.vectors.row(k).transpose());
      }
    }
    if (pts.size() < 2) {
      report.skip("tsne", "fewer than 2 embedded images");
    } else {
      Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), rows.front().size());
      for (std::size_t i = 0; i < rows.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
      TsneOptions topt;
      topt.iterations = dc.tsne_iterations;
      topt.exaggeration_iters = std::min(250, dc.tsne_iterations / 4);
      topt.seed = config.seed;
      const auto tr = tsne_report(x, pts, true, dir / "tsne", topt);
      json files = json::array();
      for (const auto& f : tr.files) files.push_back(fs::relative(f, root).generic_string());
      for (const auto& w : tr.warnings) warnings.push_back(w);
      report.set("tsne", {{"files", files}, {"points", pts.size()}, {"per_class", true}});
    }
  }

  const bool need_model = dc.hessian || dc.sharpness || dc.robustness;
  if (need_model) {
    const auto targets = config.resolved_targets(domains);
    const std::string target = targets.front();
    const ImageStore store(manifest, config.model.input_size);
    json hessian = json::array(), sharp = json::array(), robust = json::array();
    std::vector<Series> sharp_series, fgsm_series, pgd_series;
    for (const auto& algorithm : config.algorithms) {
      if (algorithm_generated_use(algorithm) != GeneratedUse::kNone && generated.empty()) {
        warnings.push_back("no generated images; " + algorithm + " probe skipped");
        continue;
      }
      TrainConfig cfg = search_configs(config, algorithm, target, domains).front();
      cfg.keep_snapshots = true;
      note(options, "diagnose: training probe run " + algorithm + " target=" + target);
      const BenchmarkRun run = train(cfg, store);
      if (run.failed) throw NumericalError("probe run for " + algorithm + " failed: " + run.failure);
      const int classes = static_cast<int>(manifest.classes.size());

      std::map<std::string, std::pair<Eigen::MatrixXd, std::vector<int>>> slices;
      for (const auto& d : domains) {
        const auto idx = domain_entries(manifest, d, dc.max_points_per_domain);
        slices[d] = {store.gather(idx), store.labels(idx)};
      }
      std::vector<std::size_t> train_idx;
      for (const auto& d : cfg.train_domains) {
        const auto idx = domain_entries(manifest, d, dc.max_points_per_domain);
        train_idx.insert(train_idx.end(), idx.begin(), idx.end());
      }
      const Eigen::MatrixXd x_train = store.gather(train_idx);
      const auto y_train = store.labels(train_idx);

      std::vector<Series> hseries;
      Series ss{algorithm, {}, {}};
      for (std::size_t k = 0; k < run.checkpoints.size(); ++k) {
        const auto model = model_at_checkpoint(run, k, classes);
        const int step = run.checkpoints[k].step;
        if (dc.hessian) {
          std::map<std::string, HeadHessian> hs;
          for (const auto& d : domains) {
            hs[d] = classifier_head_hessian(*model, slices[d].first, slices[d].second, d, step);
          }
          std::size_t pair_index = 0;
          for (std::size_t i = 0; i < domains.size(); ++i) {
            for (std::size_t j = i + 1; j < domains.size(); ++j, ++pair_index) {
              const double dist = hessian_distance(hs[domains[i]], hs[domains[j]]);
              hessian.push_back({{"algorithm", algorithm}, {"step", step},
                                 {"pair", {domains[i], domains[j]}}, {"distance", dist}});
              if (hseries.size() <= pair_index) hseries.push_back({domains[i] + "-" + domains[j], {}, {}});
              hseries[pair_index].x.push_back(step);
              hseries[pair_index].y.push_back(dist);
            }
          }
        }
        if (dc.sharpness) {
          SharpnessOptions so{dc.sharpness_steps, dc.sharpness_restarts, derive_seed(config.seed, static_cast<std::uint64_t>(step))};
          ss.x.push_back(step);
          ss.y.push_back(sharpness(*model, x_train, y_train, dc.sharpness_rho, so));
        }
      }
      if (dc.hessian) {
        write_plot(plots, "hessian_" + slug(algorithm),
                   line_plot_svg(hseries, "Head Hessian distance (" + algorithm + ")", "step", "||H_a - H_b||_2"),
                   series_csv(hseries));
      }
      if (dc.sharpness) {
        SharpnessTrace trace{algorithm, {}, ss.y, dc.sharpness_rho};
        for (double s : ss.x) trace.steps.push_back(static_cast<int>(s));
        sharp.push_back(to_json(trace));
        sharp_series.push_back(ss);
      }
      if (dc.robustness) {
        const auto model = model_at_checkpoint(run, run.checkpoints.size() - 1, classes);
        const auto& [xt, yt] = slices[target];
        const auto rho_grid = dc.rho_grid.empty() ? default_rho_grid() : dc.rho_grid;
        auto fc = robustness_curve(*model, xt, yt, AttackSpec{Attack::kFgsm, 0.0, -1.0}, rho_grid);
        std::vector<double> kgrid(dc.pgd_k_grid.begin(), dc.pgd_k_grid.end());
        auto pc = robustness_curve(*model, xt, yt, AttackSpec{Attack::kPgd, dc.pgd_rho, dc.pgd_step}, kgrid);
        json jf = to_json(fc), jp = to_json(pc);
        jf["algorithm"] = algorithm;
        jp["algorithm"] = algorithm;
        jf["target"] = target;
        jp["target"] = target;
        robust.push_back(jf);
        robust.push_back(jp);
        fgsm_series.push_back({algorithm, fc.grid, fc.accuracies});
        pgd_series.push_back({algorithm, pc.grid, pc.accuracies});
      }
    }
    if (dc.hessian) report.set("hessian_trace", hessian);
    if (dc.sharpness) {
      write_plot(plots, "sharpness", line_plot_svg(sharp_series, "Sharpness through training", "step", "sharpness"),
                 series_csv(sharp_series));
      report.set("sharpness", sharp);
    }
    if (dc.robustness) {
      write_plot(plots, "robustness_fgsm", line_plot_svg(fgsm_series, "OOD accuracy under FGSM", "rho", "accuracy"),
                 series_csv(fgsm_series));
      write_plot(plots, "robustness_pgd", line_plot_svg(pgd_series, "OOD accuracy under PGD", "K", "accuracy"),
                 series_csv(pgd_series));
      report.set("robustness", robust);
    }
  }
  if (!dc.hessian) report.skip("hessian_trace", "disabled in config");
  if (!dc.sharpness) report.skip("sharpness", "disabled in config");
  if (!dc.robustness) report.skip("robustness", "disabled in config");

  json settings{{"near_dup_threshold", dc.near_dup_threshold},
                {"diversity_bins", dc.diversity_bins},
                {"diversity_estimator", "histogram total variation over environment-classifier and principal axes"},
                {"rho_grid", dc.rho_grid.empty() ? default_rho_grid() : dc.rho_grid},
                {"pgd_rho", dc.pgd_rho},
                {"pgd_step", dc.pgd_step < 0 ? dc.pgd_rho / 4.0 : dc.pgd_step},
                {"pgd_k_grid", dc.pgd_k_grid},
                {"sharpness_rho", dc.sharpness_rho},
                {"sharpness_steps", dc.sharpness_steps},
                {"sharpness_restarts", dc.sharpness_restarts},
                {"checkpoint_every", config.search.checkpoint_every},
                {"encoder", dc.encoder}};
  report.set("settings", settings);
  report.set("warnings", warnings);
  write_json(dir / "report.json", report.to_json());
  ledger.record("diagnose", stage_hash, chash, {{"report", fs::path("diagnose/report.json")}});
  json sections = json::array();
  for (const char* s : kDiagnosticSections) {
    if (report.sections.count(s) && !report.skipped(s)) sections.push_back(s);
  }
  result.summary = {{"sections", sections}, {"finite", all_finite(report.to_json())}};
  note(options, "diagnose: wrote " + (dir / "report.json").string());
  return result;
}

CommandResult cmd_report(const ExperimentConfig& config, const CommandOptions& options) {
  const fs::path root = config.output_root;
  const fs::path trials_path = root / "benchmark" / "trials.json";
  if (!fs::exists(trials_path)) throw IoError("no benchmark results at " + trials_path.string() + "; run `benchmark` first");
  const json doc = read_json(trials_path);
  std::vector<TrialResult> trials;
  for (const auto& t : doc.at("trials")) {
    trials.push_back({t.at("algorithm").get<std::string>(), t.at("dataset").get<std::string>(),
                      t.at("selection").get<std::string>(), t.at("target").get<std::string>(),
                      t.at("trial").get<int>(), t.at("accuracy").get<double>()});
  }
  const ResultTable table = aggregate_table(trials);
  std::ostringstream md;
  md << "# " << config.name << "\n\nconfig hash: `" << config_hash(config) << "`\n\n## Results\n\n```\n"
     << table.to_text() << "```\n";
  const auto& missing = doc.at("missing");
  if (!missing.empty()) {
    md << "\n" << missing.size() << " gaps:\n\n";
    for (const auto& m : missing) md << "- " << m.dump() << "\n";
  }
  const fs::path report_path = root / "diagnose" / "report.json";
  if (fs::exists(report_path)) {
    const auto rep = DiagnosticReport::from_json(read_json(report_path));
    md << "\n## Diagnostics\n\n";
    for (const char* s : kDiagnosticSections) {
      md << "- " << s << ": " << (rep.sections.count(s) == 0 ? "absent" : rep.skipped(s) ? "skipped" : "present")
         << "\n";
    }
  }
  atomic_write(root / "report" / "summary.md", md.str());
  atomic_write(root / "report" / "results.csv", table.to_csv());
  note(options, "report: wrote " + (root / "report" / "summary.md").string());
  CommandResult r;
  r.exit_code = missing.empty() ? kExitSuccess : kExitPartial;
  r.summary = {{"cells", table.cells.size()}, {"gaps", missing.size()}};
  return r;
}

}  // namespace cdga
