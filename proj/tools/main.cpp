#include "commands.hpp"

#include <l2c/log.hpp>
#include <l2c/meta.hpp>

#include <CLI11.hpp>

#include <iostream>

namespace {

void add_common(CLI::App* cmd, l2c::cli::CommonOptions& o, bool need_scenario) {
  auto* s = cmd->add_option("--scenario", o.scenario, "Scenario JSON");
  if (need_scenario) s->required()->check(CLI::ExistingFile);
  cmd->add_option("--theta", o.theta, "Theta JSON or training checkpoint")->check(CLI::ExistingFile);
  cmd->add_option("--iters", o.iters, "ADMM iterations (a_max)")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "Seed recorded in the manifest and used for sampling");
  cmd->add_option("--out", o.out, "Output directory")->required();
  cmd->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Meta-learned ADMM-DDP trajectory optimization for cooperative cable transport"};
  app.require_subcommand(1);
  app.set_version_flag("--version", L2C_VERSION);

  l2c::cli::CommonOptions common;
  l2c::cli::GradcheckOptions grad;
  l2c::cli::BenchOptions bench;
  l2c::cli::TrainOptions train;

  auto* opt = app.add_subcommand("optimize", "Run the distributed forward pass and write trajectories");
  add_common(opt, common, true);

  auto* gc = app.add_subcommand("gradcheck", "Compare gradient solvers and finite differences");
  add_common(gc, common, true);
  gc->add_option("--fd-step", grad.h, "Relative finite-difference step");
  gc->add_option("--max-fd-params", grad.max_fd_params, "Skip finite differences above this many hyperparameters");

  auto* bc = app.add_subcommand("bench", "Time the three auxiliary LQR solvers");
  add_common(bc, common, false);
  bc->add_option("--horizon", bench.horizon, "Horizon N")->check(CLI::PositiveNumber);
  bc->add_option("--repeats", bench.repeats, "Timed repetitions (>= 20)")->check(CLI::Range(20, 1000000));
  bc->add_option("--a-max", bench.a_max, "Forward iterations before sampling the instance")->check(CLI::PositiveNumber);

  auto* tr = app.add_subcommand("train", "Two-phase meta-training of the hyperparameter networks");
  add_common(tr, common, false);
  tr->add_option("--tasks", train.tasks, "Tasks per episode (M)")->check(CLI::PositiveNumber);
  tr->add_option("--episodes", train.episodes, "Phase-2 episodes")->check(CLI::NonNegativeNumber);
  tr->add_option("--episodes-reference", train.episodes_reference, "Phase-1 episodes")->check(CLI::NonNegativeNumber);
  tr->add_option("--a-tc", train.a_tc, "Truncated ADMM iterations")->check(CLI::PositiveNumber);
  tr->add_option("--reference-iters", train.reference_iters, "ADMM iterations for phase-2 cable references")
      ->check(CLI::PositiveNumber);
  tr->add_option("--lr", train.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  tr->add_option("--rg-max", train.rg_max, "Largest CoM offset sampled [m]")->check(CLI::PositiveNumber);
  tr->add_option("--checkpoint-every", train.checkpoint_every, "Checkpoint period in episodes (0 disables)")
      ->check(CLI::NonNegativeNumber);
  tr->add_flag("--fixed-hyperparams", train.fixed, "Ablation: learn hyperparameters directly, no networks");

  auto* ex = app.add_subcommand("export", "Solve the cable-reference problem and export references");
  add_common(ex, common, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*opt) return l2c::cli::run_optimize(common);
    if (*gc) return l2c::cli::run_gradcheck(common, grad);
    if (*bc) return l2c::cli::run_bench(common, bench);
    if (*tr) return l2c::cli::run_train(common, train);
    if (*ex) return l2c::cli::run_export(common);
  } catch (const l2c::ConfigError& e) {
    l2c::log::error(e.what());
    return 1;
  } catch (const l2c::Error& e) {
    l2c::log::error(e.what());
    return 2;
  } catch (const std::exception& e) {
    l2c::log::error(std::string("unexpected failure: ") + e.what());
    return 2;
  }
  return 1;
}
