// simctl: run experiment configurations and print the config schema.

#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "rwad/errors.hpp"
#include "rwad/experiments/config.hpp"
#include "rwad/experiments/runners.hpp"
#include "rwad/schema_text.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 2, kRefusal = 3, kCheck = 4 };

int thread_count(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("SIMCTL_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
    fmt::print(stderr, "warning: ignoring SIMCTL_THREADS='{}'\n", env);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int run(const std::string& config_path, const std::string& out, int threads, bool allow_long, bool check) {
  using namespace rwad;
  using namespace rwad::experiments;
  try {
    ExperimentConfig cfg = load_config(config_path);
    RunOptions opts;
    opts.out_dir = out.empty() ? cfg.out_dir : std::filesystem::path(out);
    opts.threads = thread_count(threads);
    opts.allow_long = allow_long;
    const RunReport report = run_experiment(cfg, opts);
    for (const Check& c : report.checks)
      fmt::print("{} {}: {}\n", c.passed ? "ok  " : "FAIL", c.name, c.detail);
    fmt::print("{} files written to {}\n", report.files.size(), opts.out_dir.string());
    if (check && !report.all_passed()) {
      fmt::print(stderr, "check failed\n");
      return kCheck;
    }
    return kOk;
  } catch (const ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kConfig;
  } catch (const ValidationError& e) {
    fmt::print(stderr, "invalid input: {}\n", e.what());
    return kConfig;
  } catch (const NumericRefusal& e) {
    fmt::print(stderr, "refused: {}\n", e.what());
    return kRefusal;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulate oscillating controls against their decoupled reference dynamics"};
  app.require_subcommand(1);

  std::string config, out;
  int threads = 0;
  bool allow_long = false, check = false;
  CLI::App* run_cmd = app.add_subcommand("run", "Run an experiment configuration");
  run_cmd->add_option("config", config, "Config file")->required()->check(CLI::ExistingFile);
  run_cmd->add_flag("--long", allow_long, "Allow experiments marked long");
  run_cmd->add_flag("--check", check, "Exit with code 4 when a [check] threshold fails");
  run_cmd->add_option("--out", out, "Output directory (overrides [output] dir)");
  run_cmd->add_option("--threads", threads, "Worker threads (default: SIMCTL_THREADS, then all cores)")
      ->check(CLI::PositiveNumber);

  app.add_subcommand("schema", "Print the documented configuration schema");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfig;
  }

  if (app.got_subcommand("schema")) {
    std::cout << rwad::experiments::kConfigSchema;
    return kOk;
  }
  return run(config, out, threads, allow_long, check);
}
