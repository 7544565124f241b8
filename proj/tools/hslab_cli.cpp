// hslab: run experiment suites from a JSON config.
//
//   hslab run --config <path> --suite <name> [--out <dir>] [--jobs <k>]
//   hslab validate --config <path>
//   hslab list-suites
//
// HSLAB_OUT_DIR and HSLAB_JOBS override the config; flags override both.
// Exit status: 0 all checks pass, 1 a check failed, 2 invalid config,
// 3 capacity exceeded, 4 other errors.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hslab/harness/config.hpp"
#include "hslab/harness/report.hpp"
#include "hslab/harness/suites.hpp"

namespace {

int env_jobs(int fallback) {
  if (const char* v = std::getenv("HSLAB_JOBS")) {
    try {
      const int j = std::stoi(v);
      if (j >= 1) return j;
    } catch (const std::exception&) {
    }
    std::cerr << "ignoring HSLAB_JOBS='" << v << "'\n";
  }
  return fallback;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace hslab::harness;
  CLI::App app{"Square-function and functional-calculus experiment harness"};
  app.require_subcommand(1);

  std::string config_path, suite, out_dir;
  int jobs = 0;
  auto* run = app.add_subcommand("run", "Run a suite and write its report");
  run->add_option("--config", config_path, "Config file (JSON)")->required();
  run->add_option("--suite", suite, "Suite name or 'all'")->required();
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  auto* validate = app.add_subcommand("validate", "Check a config without running it");
  validate->add_option("--config", config_path, "Config file (JSON)")->required();

  app.add_subcommand("list-suites", "Print the available suites");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("list-suites")) {
      for (const auto& s : suite_names()) std::cout << s << "\n";
      std::cout << "all\n";
      return 0;
    }
    const ExperimentConfig cfg = load_config(config_path);
    if (app.got_subcommand("validate")) {
      validate_config(cfg);
      std::cout << "ok " << config_hash(cfg.echo) << "\n";
      return 0;
    }

    RunOptions opt;
    opt.jobs = jobs > 0 ? jobs : env_jobs(1);
    std::string dir = cfg.output_dir;
    if (const char* v = std::getenv("HSLAB_OUT_DIR")) dir = v;
    if (!out_dir.empty()) dir = out_dir;

    const Report rep = run_suite(cfg, suite, opt);
    const WrittenReport w = write_report(rep, dir);
    for (const auto& r : rep.records)
      std::cout << (r.check ? (r.pass ? "PASS " : "FAIL ") : "INFO ") << r.suite << "/" << r.name << "\n";
    std::cout << "report " << w.json_path.string() << "\n";
    return rep.passed() ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return 2;
  } catch (const hslab::CapacityError& e) {
    std::cerr << "capacity exceeded: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
