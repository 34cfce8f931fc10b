#pragma once

#include <optional>
#include <string>
#include <vector>

#include "moba/eval/elo.h"
#include "moba/runtime/trainer.h"

namespace moba::eval {

// One variant of the training setup. Base has no action mask, no target
// attention and no LSTM; Full has all three.
struct AblationArm {
  std::string name;
  bool mask = false;
  bool attention = false;
  bool lstm = false;
  int rollout_ticks = 0;  // 0 = full rollouts, otherwise partial rollouts of N ticks
  env::StartMode start_mode = env::StartMode::kZeroStart;

  // Parses "Base", "Full", "Base+AM", "Base+TA+LSTM", "Full+PR1000", "Full+RIF", ...
  static AblationArm parse(const std::string& spec);
  void apply(net::NetConfig& net, runtime::ExplorationConfig& explore) const;
};

struct AblationConfig {
  std::vector<AblationArm> arms;
  net::NetConfig net;
  learner::PPOConfig ppo;
  // Identical for every arm: same seed, same learner update budget.
  runtime::TrainerConfig trainer;
  int probe_every = 250;
  int probe_games = 20;
  double probe_temperature = 0.0;
  // Convergence: first probe whose Elo against the scripted bot reaches this.
  double elo_threshold = 1200.0;
  // The snapshot an arm is judged by: the last one, or the best probe.
  bool select_best_probe = false;
  // Games of each arm against the first arm (the reference, normally Base).
  int games_vs_reference = 300;
  uint64_t eval_seed = 7;
  double confidence_z = 1.959963984540054;
};

struct ArmReport {
  AblationArm arm;
  std::vector<std::pair<int, Probe>> probes;  // (update, probe)
  std::optional<int> updates_to_threshold;
  int selected_update = 0;
  net::Params selected;
  double train_seconds = 0;
  // Against the reference arm; empty for the reference itself.
  WinStats vs_reference;
  std::pair<double, double> win_rate_ci{0, 0};
};

struct AblationReport {
  std::vector<ArmReport> arms;
  const ArmReport* find(const std::string& name) const;
};

using AblationLog = std::function<void(const std::string&)>;

AblationReport run_ablation(const env::EnvConfig& env_cfg, const AblationConfig& cfg, const AblationLog& log = {});

std::string ablation_csv_header();
std::string ablation_csv_row(const ArmReport& r);

}  // namespace moba::eval
