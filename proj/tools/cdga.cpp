// cdga: command-line front end for the generate -> benchmark -> diagnose pipeline.
#include <csignal>
#include <iostream>
#include <stop_token>

#include <CLI11.hpp>

#include "cdga/core/error.hpp"
#include "cdga/pipeline/commands.hpp"

namespace {

std::stop_source g_stop;

extern "C" void on_signal(int) { g_stop.request_stop(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-domain generative augmentation pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  bool resume = false;
  bool stub = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool quiet = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_flag("--resume", resume, "Reuse partial work from an interrupted run");
    sub->add_flag("--stub-backend", stub, "Use the built-in stub generator and encoder");
    sub->add_option("--seed", seed, "Override the global seed");
    sub->add_option("--out", out, "Override the output root");
    sub->add_flag("-q,--quiet", quiet, "Suppress progress messages");
  };
  for (const char* name : {"scan", "generate", "benchmark", "diagnose", "report"}) {
    add_common(app.add_subcommand(name, std::string(name) + " stage"));
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? cdga::kExitSuccess : cdga::kExitFatal;
  }

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    cdga::CommandOptions options;
    options.resume = resume;
    options.stub_backend = stub;
    options.seed = seed;
    if (out) options.out = *out;
    options.log = quiet ? nullptr : &std::cerr;
    options.stop = g_stop.get_token();
    const auto config = cdga::apply_overrides(cdga::load_experiment_config(config_path), options);

    cdga::CommandResult result;
    if (command == "scan") result = cdga::cmd_scan(config, options);
    else if (command == "generate") result = cdga::cmd_generate(config, options);
    else if (command == "benchmark") result = cdga::cmd_benchmark(config, options);
    else if (command == "diagnose") result = cdga::cmd_diagnose(config, options);
    else result = cdga::cmd_report(config, options);
    std::cout << result.summary.dump() << '\n';
    return result.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "cdga " << command << ": " << e.what() << '\n';
    return cdga::kExitFatal;
  }
}
