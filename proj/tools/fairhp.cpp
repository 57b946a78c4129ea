// fairhp: generate fairness traces over hyperparameter spaces, fit surrogate
// regressors on them, and evaluate prediction quality in-distribution and
// under synthetic distribution shift.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fairhp/study.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitStageFailure = 3;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  bool force = false;
  int64_t seed = -1;
  int jobs = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required = true) {
  cmd->add_option("--config", args.config_path, "study config JSON")->required(config_required);
  cmd->add_option("--out", args.out_dir, "output directory (overrides config out_dir)");
  cmd->add_flag("--force", args.force, "regenerate traces even when cached");
  cmd->add_option("--seed", args.seed, "override the config base seed");
  cmd->add_option("--jobs", args.jobs, "parallelism cap for tree fitting")
      ->check(CLI::PositiveNumber);
}

int execute(const CommonArgs& args, const std::string& stage) {
  fairhp::StudyConfig config;
  try {
    config = fairhp::StudyConfig::load(args.config_path);
  } catch (const fairhp::ConfigError& e) {
    std::cerr << "config error:\n";
    for (const auto& p : e.problems) std::cerr << "  - " << p << "\n";
    return kExitConfigError;
  }

  std::string out_dir = !args.out_dir.empty() ? args.out_dir : config.out_dir;
  if (out_dir.empty()) {
    std::cerr << "config error:\n  - no output directory (set out_dir or pass --out)\n";
    return kExitConfigError;
  }

  fairhp::RunOptions opts;
  opts.force = args.force;
  opts.jobs = args.jobs;
  if (args.seed >= 0) opts.seed_override = static_cast<uint64_t>(args.seed);

  fairhp::RunSummary summary;
  try {
    summary = stage.empty() ? fairhp::run_study(config, out_dir, opts)
                            : fairhp::run_stage(stage, config, out_dir, opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStageFailure;
  }

  for (const auto& hit : summary.cache_hits) std::cout << "reused " << hit << "\n";
  for (const auto& failure : summary.failures) std::cerr << "failed: " << failure << "\n";
  if (summary.exit_code == kExitOk)
    std::cout << "done; artifacts in " << out_dir << "\n";
  return summary.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fairness-of-hyperparameters surrogate toolkit"};
  app.require_subcommand(1);

  CommonArgs run_args, trace_args, fit_args, eval_args, shift_args, report_args;
  CLI::App* run = app.add_subcommand("run", "full pipeline: trace, fit, eval, shift, report");
  add_common(run, run_args);
  CLI::App* trace = app.add_subcommand("trace", "generate fairness traces");
  add_common(trace, trace_args);
  CLI::App* fit = app.add_subcommand("fit", "fit surrogates on existing traces");
  add_common(fit, fit_args);
  CLI::App* eval = app.add_subcommand("eval", "run the repeated benchmark on existing traces");
  add_common(eval, eval_args);
  CLI::App* shift = app.add_subcommand("shift", "run the shift study on existing traces");
  add_common(shift, shift_args);
  CLI::App* report = app.add_subcommand("report", "re-render report.md from report.json");
  add_common(report, report_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  if (run->parsed()) return execute(run_args, "");
  if (trace->parsed()) return execute(trace_args, "trace");
  if (fit->parsed()) return execute(fit_args, "fit");
  if (eval->parsed()) return execute(eval_args, "eval");
  if (shift->parsed()) return execute(shift_args, "shift");
  if (report->parsed()) return execute(report_args, "report");
  return kExitConfigError;
}
