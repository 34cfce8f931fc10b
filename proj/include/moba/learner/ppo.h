#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "moba/common/kv_config.h"
#include "moba/learner/segment.h"
#include "moba/net/network.h"

namespace moba::learner {

struct PPOConfig {
  double gamma = 0.997;
  double lambda = 0.95;
  double clip_eps = 0.2;
  double dual_clip_c = 3.0;
  double learning_rate = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_segments = 32;
  int epochs = 1;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  bool normalize_advantages = true;

  static PPOConfig from_kv(const KvConfig& kv);
  void validate() const;
};

struct Advantages {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// delta_t = r_t + gamma V(s_{t+1}) (1 - done_t) - V(s_t), V(s_T) = bootstrap;
// A_t = delta_t + gamma lambda (1 - done_t) A_{t+1}; returns = A + V.
Advantages gae(std::span<const double> rewards, std::span<const double> values, double bootstrap,
               std::span<const uint8_t> dones, double gamma, double lambda);

// Per-sample surrogate (maximized): standard clip for A >= 0, with the extra
// lower bound c A for A < 0.
double dual_clip_term(double ratio, double advantage, double eps, double c);
// d term / d ratio, the one-sided branch taken at the clip boundaries.
double dual_clip_slope(double ratio, double advantage, double eps, double c);

// A segment with its precomputed advantages and value targets.
struct PreparedSegment {
  const TrajectorySegment* segment = nullptr;
  std::vector<double> advantages;
  std::vector<double> returns;
};

// GAE per segment, then (optionally) batch-wide advantage normalization.
std::vector<PreparedSegment> prepare_batch(std::span<const TrajectorySegment> batch, const PPOConfig& cfg);

struct LossDiagnostics {
  double loss = 0;
  double policy_loss = 0;
  double value_loss = 0;
  double entropy = 0;  // sum over heads of the mean entropy
  std::array<double, net::kNumHeads> clip_fraction{};
  std::array<double, net::kNumHeads> mean_ratio{};
  double max_ratio = 0;
  double dual_clip_fraction = 0;
  double value_error = 0;  // mean |V - R|
  size_t steps = 0;
};

// Loss over `segments` with every step weighted 1/normalizer. The gradient is
// accumulated (scaled by `grad_scale`) into `grad` when it is non-empty.
// When `branch_signature` is set it receives a digest of every piecewise
// branch taken (activations, pooling winners, clip regions).
LossDiagnostics ppo_loss(const net::Network& network, std::span<const double> params,
                         std::span<const PreparedSegment> segments, const PPOConfig& cfg,
                         double normalizer, std::span<double> grad = {}, double grad_scale = 1.0,
                         uint64_t* branch_signature = nullptr);

std::string diagnostics_csv_header();
std::string diagnostics_csv_row(const LossDiagnostics& d);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  uint64_t t = 0;
};

// Bias-corrected Adam. Throws ContractError on a non-finite gradient entry.
void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// Element-wise mean, summed in shard order.
std::vector<double> average_gradients(std::span<const std::vector<double>> shards);

}  // namespace moba::learner
