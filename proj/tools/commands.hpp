#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace l2c::cli {

struct CommonOptions {
  std::string scenario;
  std::string theta;  // theta JSON or training checkpoint; empty means defaults
  std::optional<int> iters;
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 1;
};

struct GradcheckOptions {
  double h = 1e-5;
  int max_fd_params = 60;
};

struct BenchOptions {
  int horizon = 100;
  int repeats = 20;
  int a_max = 2;
};

struct TrainOptions {
  int tasks = 10;
  int episodes = 30;
  int episodes_reference = 30;
  int a_tc = 2;
  int reference_iters = 10;
  double lr = 1e-3;
  double rg_max = 0.04;
  int checkpoint_every = 10;
  bool fixed = false;
};

/// Usage problems (bad flags, unreadable config) are reported as ConfigError and map to exit 1;
/// solver, oracle and training failures map to exit 2.
int run_optimize(const CommonOptions& o);
int run_gradcheck(const CommonOptions& o, const GradcheckOptions& g);
int run_bench(const CommonOptions& o, const BenchOptions& b);
int run_train(const CommonOptions& o, const TrainOptions& t);
int run_export(const CommonOptions& o);

}  // namespace l2c::cli
