#pragma once

#include "l2c/meta.hpp"
#include "l2c/multilift_problems.hpp"

#include <cstdint>
#include <functional>
#include <string>

namespace l2c {

struct TaskSpec {
  Vec3 r_g = Vec3::Zero();
  Vector input_ref;  // [|r_g| / rg_max]
  Vector input;      // [x; y] / rg_max
};

TaskSpec make_task(const Vec3& r_g, double rg_max);

/// |r_g| ~ U(0, rg_max), planar angle ~ U(0, 2 pi).
std::vector<TaskSpec> sample_tasks(int count, double rg_max, std::uint64_t seed);

struct TrainingConfig {
  MultiliftConfig base = MultiliftConfig::symmetric(3);
  Vec3 start = Vec3(0, 0, 1);
  Vec3 goal = Vec3(1, 0, 1);
  int tasks = 10;
  int episodes_reference = 30;
  int episodes = 30;
  int a_tc = 2;
  int reference_iters = 10;  // ADMM iterations when exporting cable references for phase 2
  double rg_max = 0.04;
  AdamOptions adam;
  std::uint64_t seed = 7;
  bool adaptive = true;  // false: optimize Theta = sigmoid(phi) directly, no networks
  int threads = 1;
};

/// Network architectures: 1-16-32-36, 2-16-32-33, 2-10-20-21.
std::vector<int> reference_net_dims();
std::vector<int> load_net_dims();
std::vector<int> cable_net_dims();

/// Learned hyperparameter sources for both phases.
struct HyperModel {
  bool adaptive = true;
  Mlp net_ls, net_l, net_c;
  Vector phi_ls, phi;  // fixed-mode logits (36 and 54)

  static HyperModel initial(bool adaptive, std::uint64_t seed);
  HyperParams reference_theta(const TaskSpec& task, Matrix* jac = nullptr) const;
  /// jac_l (33 x params) and jac_c (21 x params) for adaptive mode; 54 x 54 diagonal in fixed mode via jac_l.
  HyperParams full_theta(const TaskSpec& task, Matrix* jac_l = nullptr, Matrix* jac_c = nullptr) const;
};

struct TrainingResult;

struct EpisodeLog {
  int phase = 1;
  int episode = 0;
  double mean_loss = 0.0;
  int failed_tasks = 0;
  std::vector<double> task_losses;         // NaN for skipped tasks
  const TrainingResult* state = nullptr;   // model and curves after this episode's update
};

struct TrainingResult {
  std::vector<double> loss_reference;  // episodes_reference + 1 entries (last is after the final update)
  std::vector<double> loss;            // episodes + 1 entries
  HyperModel model;
  AdamState adam_ls, adam_l, adam_c;
  std::uint64_t seed = 0;
  double rg_max = 0.04;  // network input scaling used during training
};

TrainingResult train(const TrainingConfig& cfg, const std::function<void(const EpisodeLog&)>& on_episode = {});

/// Mean loss over tasks for one phase at the current model (forward + loss only).
double evaluate_reference_loss(const TrainingConfig& cfg, const HyperModel& model, const std::vector<TaskSpec>& tasks);

void save_checkpoint(const std::string& path, const TrainingResult& result);
TrainingResult load_checkpoint(const std::string& path);

}  // namespace l2c
