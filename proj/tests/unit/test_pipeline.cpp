#include <doctest.h>

#include <fstream>
#include <sstream>

#include "cdga/core/error.hpp"
#include "cdga/core/fs.hpp"
#include "cdga/dataset/counts.hpp"
#include "cdga/dataset/manifest.hpp"
#include "cdga/dataset/synthetic.hpp"
#include "cdga/diagnostics/report.hpp"
#include "cdga/generator/execute.hpp"
#include "cdga/pipeline/commands.hpp"
#include "cdga/pipeline/config.hpp"
#include "cdga/pipeline/ledger.hpp"
#include "support.hpp"

using namespace cdga;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Three-domain shapes set, tiny linear model, short searches.
ExperimentConfig toy_config(const test::TempDir& dir, int per_cell = 6) {
  if (!fs::exists(dir / "data")) {
    ShapesDatasetSpec spec;
    spec.per_cell = per_cell;
    spec.image_size = 16;
    write_shapes_dataset(dir / "data", spec);
  }
  ExperimentConfig c;
  c.name = "toy";
  c.dataset_root = dir / "data";
  c.dataset_name = "shapes";
  c.augmentation.descriptions = {{"alpha", "red"}, {"beta", "sketch"}, {"gamma", "blue"}};
  c.backend.params = {{"strength", 0.5}};
  c.search.n_hparams = 2;
  c.search.n_trials = 1;
  c.search.steps = 20;
  c.search.checkpoint_every = 10;
  c.model.arch = "linear";
  c.model.input_size = 8;
  c.diagnostics.tsne_iterations = 100;
  c.diagnostics.max_points_per_domain = 20;
  c.diagnostics.diversity_bins = 5;
  c.diagnostics.sharpness_steps = 3;
  c.diagnostics.sharpness_restarts = 1;
  c.output_root = dir / "out";
  return c;
}

CommandOptions quiet_options(std::shared_ptr<LdmBackend> backend = {}) {
  CommandOptions o;
  o.stub_backend = true;
  o.backend = std::move(backend);
  return o;
}

std::size_t count_files(const fs::path& dir, const std::string& ext) {
  std::size_t n = 0;
  if (!fs::exists(dir)) return 0;
  for (const auto& e : fs::recursive_directory_iterator(dir)) n += e.is_regular_file() && e.path().extension() == ext;
  return n;
}

}  // namespace

TEST_CASE("config JSON: parse, strict keys, round trip and hashes") {
  test::TempDir dir;
  fs::create_directories(dir / "data");
  const json doc = {{"dataset_root", "data"},
                    {"augmentation", {{"mode", "CDGA_PG"}, {"b", "balanced"}}},
                    {"search", {{"n_hparams", 4}}},
                    {"output_root", "out"}};
  std::ofstream(dir / "c.json") << doc.dump();
  const auto c = load_experiment_config(dir / "c.json");
  CHECK(c.dataset_root == dir / "data");
  CHECK(c.output_root == dir / "out");
  CHECK(c.augmentation.balanced);
  CHECK(c.search.n_hparams == 4);
  CHECK(c.search.n_trials == 3);
  CHECK(c.augmentation.b == 1);
  c.validate();

  const auto back = experiment_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK(config_hash(back) == config_hash(c));

  auto other = c;
  other.output_root = "/elsewhere";
  CHECK(config_hash(other) == config_hash(c));
  other.seed = 1;
  CHECK(config_hash(other) != config_hash(c));
  auto diag_only = c;
  diag_only.diagnostics.pgd_rho = 0.1;
  CHECK(generate_stage_hash(diag_only) == generate_stage_hash(c));
  CHECK(benchmark_stage_hash(diag_only) == benchmark_stage_hash(c));
  CHECK(diagnose_stage_hash(diag_only) != diagnose_stage_hash(c));

  CHECK_THROWS_AS(experiment_config_from_json({{"datset_root", "x"}}), InvalidArgument);
  CHECK_THROWS_AS(experiment_config_from_json({{"augmentation", {{"b", "many"}}}}), InvalidArgument);
  auto missing = c;
  missing.dataset_root = dir / "nope";
  CHECK_THROWS(missing.validate());
  auto bad_targets = c;
  bad_targets.targets = {"a", "a"};
  CHECK_THROWS(bad_targets.validate());
  CHECK(algorithm_generated_use("ERM") == GeneratedUse::kNone);
  CHECK(algorithm_generated_use("ERM+CDGA*") == GeneratedUse::kCdgaStar);
  CHECK_THROWS(algorithm_generated_use("Mixup"));
}

TEST_CASE("overrides") {
  ExperimentConfig c;
  CommandOptions o;
  o.seed = 9;
  o.out = "/tmp/x";
  o.stub_backend = true;
  c.backend.kind = "http";
  c.backend.url = "http://example.invalid";
  const auto r = apply_overrides(c, o);
  CHECK(r.seed == 9);
  CHECK(r.output_root == "/tmp/x");
  CHECK(r.backend.kind == "stub");
}

TEST_CASE("ledger records, skips and notices tampering") {
  test::TempDir dir;
  RunLedger ledger(dir.path());
  CHECK_FALSE(ledger.completed("scan", "h1"));
  fs::create_directories(dir / "scan");
  std::ofstream(dir / "scan/a.json") << "{}";
  const auto rec = ledger.record("scan", "h1", "cfg", {{"manifest", "scan/a.json"}});
  CHECK(rec.artifacts.at(0).content_hash.size() == 64);
  CHECK(ledger.completed("scan", "h1"));
  CHECK_FALSE(ledger.completed("scan", "h2"));
  CHECK(ledger.entries().size() == 1);
  std::ofstream(dir / "scan/a.json") << "{\"x\":1}";
  CHECK_FALSE(ledger.completed("scan", "h1"));
  // torn trailing line is ignored
  std::ofstream(ledger.file(), std::ios::app) << "{\"stage\":\"sc";
  CHECK(RunLedger(dir.path()).entries().size() == 1);
}

TEST_CASE("scan writes manifest and counts") {
  test::TempDir dir;
  const auto c = toy_config(dir);
  const auto r = cmd_scan(c, quiet_options());
  CHECK(r.exit_code == kExitSuccess);
  const auto m = load_manifest(dir / "out/scan/manifest.json");
  CHECK(m.entries.size() == 3u * 3u * 6u);
  CHECK(read_json(dir / "out/scan/counts.json").dump().find("alpha") != std::string::npos);
  CHECK(cmd_scan(c, quiet_options()).skipped);
}

TEST_CASE("generate: n^2 pseudo-domains, idempotent rerun") {
  test::TempDir dir;
  const auto c = toy_config(dir);
  auto counting = std::make_shared<test::CountingBackend>(std::make_shared<StubBackend>());
  const auto r = cmd_generate(c, quiet_options(counting));
  CHECK(r.exit_code == kExitSuccess);
  CHECK(counting->calls() == 3 * 54);
  const auto aug = load_manifest(dir / "out/generate/augmented_manifest.json");
  int generated = 0;
  for (const auto& d : aug.domains) generated += parse_generated_domain(d).has_value();
  CHECK(generated == 9);
  CHECK(aug.entries.size() == 54u + 3u * 54u);
  const auto report = read_json(dir / "out/generate/run_report.json");
  CHECK(report.contains("config_hash"));

  auto again = std::make_shared<test::CountingBackend>(std::make_shared<StubBackend>());
  const auto r2 = cmd_generate(c, quiet_options(again));
  CHECK(r2.skipped);
  CHECK(again->calls() == 0);
}

TEST_CASE("generate: interrupted run resumes and reports partial status") {
  test::TempDir dir;
  const auto c = toy_config(dir);
  auto failing = std::make_shared<test::CountingBackend>(
      std::make_shared<StubBackend>(), [](const BackendRequest& req) { return req.seed % 7 == 3; });
  const auto r = cmd_generate(c, quiet_options(failing));
  CHECK(r.exit_code == kExitPartial);
  CHECK_FALSE(RunLedger(dir / "out").completed("generate", generate_stage_hash(c)));

  auto ok = std::make_shared<test::CountingBackend>(std::make_shared<StubBackend>());
  auto opts = quiet_options(ok);
  opts.resume = true;
  const auto r2 = cmd_generate(c, opts);
  CHECK(r2.exit_code == kExitSuccess);
  CHECK(ok->calls() < 3 * 54);
  CHECK(ok->calls() > 0);
}

TEST_CASE("generate: balanced mode reaches m per cell") {
  test::TempDir dir;
  test::write_grid_dataset(dir / "data", {"a", "b"}, {"x", "y"}, {{12, 4}, {3, 5}});
  ExperimentConfig c;
  c.dataset_root = dir / "data";
  c.augmentation.balanced = true;
  c.augmentation.descriptions = {{"a", "photo"}, {"b", "sketch"}};
  c.output_root = dir / "out";
  REQUIRE(cmd_generate(c, quiet_options()).exit_code == kExitSuccess);
  const auto orig = scan_dataset(dir / "data");
  const auto aug = load_manifest(dir / "out/generate/augmented_manifest.json");
  const auto oc = count_per_class_domain(orig);
  const std::int64_t m = oc.max_cell();
  CHECK(m == 12);
  // generated images per (source domain, class), summed over guidance domains
  std::map<std::pair<std::string, int>, std::int64_t> gen;
  for (const auto& e : aug.entries) {
    const auto g = parse_generated_domain(aug.domains[static_cast<std::size_t>(e.domain)]);
    if (g) gen[{g->source, e.label}] += 1;
  }
  for (std::size_t d = 0; d < orig.domains.size(); ++d) {
    for (std::size_t k = 0; k < orig.classes.size(); ++k) {
      const std::int64_t n = oc.counts[d][k];
      const std::int64_t per_guidance = gen[{orig.domains[d], static_cast<int>(k)}] / 2;
      CAPTURE(orig.domains[d]);
      CAPTURE(k);
      CHECK(per_guidance >= m);
      CHECK(per_guidance < m + n);
    }
  }
}

TEST_CASE("benchmark: run counts, tables, determinism and gaps") {
  test::TempDir dir;
  auto c = toy_config(dir);
  c.targets = {"alpha", "beta"};
  c.selection_rules = {"training_domain_validation", "oracle"};
  c.algorithms = {"ERM"};
  auto r = cmd_benchmark(c, quiet_options());
  REQUIRE(r.exit_code == kExitSuccess);
  CHECK(r.summary.at("full_runs") == 2 * 1 * 2);
  CHECK(r.summary.at("aux_runs") == 0);
  CHECK(count_files(dir / "out/benchmark/runs", ".json") == 4);
  CHECK(count_files(dir / "out/benchmark/tables", ".csv") == 2);

  SUBCASE("three selection rules give three tables") {
    c.selection_rules = {"training_domain_validation", "leave_one_domain_out", "oracle"};
    r = cmd_benchmark(c, quiet_options());
    CHECK(r.exit_code == kExitSuccess);
    CHECK(r.summary.at("full_runs") == 4);
    CHECK(r.summary.at("aux_runs") == 8);
    CHECK(count_files(dir / "out/benchmark/tables", ".csv") == 3);
    const std::string txt = slurp(dir / "out/benchmark/tables/oracle.txt");
    CHECK(txt.find(" ± ") != std::string::npos);
  }
  SUBCASE("byte-identical CSV on rerun with a fixed seed") {
    const std::string first = slurp(dir / "out/benchmark/tables/oracle.csv");
    auto c2 = c;
    c2.output_root = dir / "out2";
    REQUIRE(cmd_benchmark(c2, quiet_options()).exit_code == kExitSuccess);
    CHECK(slurp(dir / "out2/benchmark/tables/oracle.csv") == first);
    CHECK(slurp(dir / "out2/benchmark/tables/training_domain_validation.csv") ==
          slurp(dir / "out/benchmark/tables/training_domain_validation.csv"));
  }
  SUBCASE("unchanged config is skipped") { CHECK(cmd_benchmark(c, quiet_options()).skipped); }
  SUBCASE("a failed run leaves an explicit gap and exit 2") {
    const fs::path run = dir / "out/benchmark/runs/ERM/alpha/h1_t0.json";
    REQUIRE(fs::exists(run));
    json doc = read_json(run);
    doc["failed"] = true;
    doc["failure"] = "injected";
    std::ofstream(run) << doc.dump();
    // the ledger notices the edited artifact; the stored run is reused as is
    r = cmd_benchmark(c, quiet_options());
    CHECK(r.exit_code == kExitPartial);
    const auto trials = read_json(dir / "out/benchmark/trials.json");
    REQUIRE(trials.at("missing").size() == 1);
    CHECK(trials.at("missing")[0].at("reason") == "injected");
    CHECK(fs::exists(dir / "out/benchmark/tables/oracle.csv"));
  }
  SUBCASE("augmented algorithms need generate first") {
    c.algorithms = {"ERM+CDGA"};
    CHECK_THROWS_AS(cmd_benchmark(c, quiet_options()), InvalidArgument);
  }
}

TEST_CASE("diagnose: all sections, one-section toggle and sharpness traces") {
  test::TempDir dir;
  auto c = toy_config(dir);
  c.targets = {"gamma"};
  REQUIRE(cmd_generate(c, quiet_options()).exit_code == kExitSuccess);

  SUBCASE("all sections present and finite") {
    const auto r = cmd_diagnose(c, quiet_options());
    REQUIRE(r.exit_code == kExitSuccess);
    CHECK(r.summary.at("finite") == true);
    const auto doc = read_json(dir / "out/diagnose/report.json");
    const auto report = DiagnosticReport::from_json(doc);
    for (const char* s : kDiagnosticSections) {
      CAPTURE(s);
      REQUIRE(report.sections.count(s));
      CHECK_FALSE(report.skipped(s));
    }
    CHECK(all_finite(doc));
    CHECK(doc.at("config_hash") == config_hash(c));
    CHECK(report.sections.at("near_dup").at("threshold") == 0.95);
    CHECK(count_files(dir / "out/diagnose/tsne", ".svg") == 3);
    // sharpness: ERM and ERM+CDGA traces on one plot
    const auto& sharp = report.sections.at("sharpness");
    REQUIRE(sharp.size() == 2);
    CHECK(sharp[0].at("label") == "ERM");
    CHECK(sharp[1].at("label") == "ERM+CDGA");
    for (const auto& t : sharp) {
      for (double s : t.at("sharpness")) CHECK(s >= -1e-8);
    }
    const std::string csv = slurp(dir / "out/diagnose/plots/sharpness.csv");
    CHECK(csv.find("ERM,") != std::string::npos);
    CHECK(csv.find("ERM+CDGA,") != std::string::npos);
    CHECK(fs::exists(dir / "out/diagnose/plots/sharpness.svg"));
    CHECK(cmd_diagnose(c, quiet_options()).skipped);
  }
  SUBCASE("only near-dup enabled") {
    auto& d = c.diagnostics;
    d.tsne = d.hessian = d.diversity = d.robustness = d.sharpness = false;
    const auto r = cmd_diagnose(c, quiet_options());
    REQUIRE(r.exit_code == kExitSuccess);
    CHECK(r.summary.at("sections") == json::array({"near_dup"}));
    const auto report = DiagnosticReport::from_json(read_json(dir / "out/diagnose/report.json"));
    for (const char* s : kDiagnosticSections) {
      if (std::string(s) == "near_dup") continue;
      CHECK(report.skipped(s));
      CHECK(report.sections.at(s).at("reason") == "disabled in config");
    }
  }
}

TEST_CASE("report summarises the benchmark") {
  test::TempDir dir;
  auto c = toy_config(dir);
  c.targets = {"alpha"};
  c.algorithms = {"ERM"};
  c.selection_rules = {"oracle"};
  CHECK_THROWS(cmd_report(c, quiet_options()));
  REQUIRE(cmd_benchmark(c, quiet_options()).exit_code == kExitSuccess);
  const auto r = cmd_report(c, quiet_options());
  CHECK(r.exit_code == kExitSuccess);
  const std::string md = slurp(dir / "out/report/summary.md");
  CHECK(md.find("oracle") != std::string::npos);
  CHECK(md.find(config_hash(c)) != std::string::npos);
}
