#include "moba/learner/learner.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "moba/common/error.h"

namespace moba::learner {

Learner::Learner(const net::Network& network, net::Params initial, PPOConfig cfg)
    : network_(network), params_(std::move(initial)), cfg_(cfg) {
  cfg_.validate();
  if (params_.values.size() != network_.layout().total())
    throw ContractError("initial params do not match the network layout");
}

std::vector<double> Learner::gradient(std::span<const PreparedSegment> batch, int shards,
                                      LossDiagnostics* diag) const {
  if (shards < 1) throw ContractError("shard count must be >= 1");
  size_t total_steps = 0;
  for (const auto& p : batch) total_steps += p.segment->size();
  if (total_steps == 0) throw ContractError("empty batch");
  const size_t n = params_.values.size();

  // Each shard scales its partial sum by K / N so that the mean over shards is
  // the full-batch gradient regardless of how steps fall into shards.
  std::vector<std::vector<double>> grads(shards, std::vector<double>(n, 0.0));
  std::vector<LossDiagnostics> diags(shards);
  std::vector<std::exception_ptr> errors(shards);
  auto work = [&](int k) {
    size_t begin = batch.size() * k / shards, end = batch.size() * (k + 1) / shards;
    try {
      diags[k] = ppo_loss(network_, params_.values, batch.subspan(begin, end - begin), cfg_,
                          static_cast<double>(total_steps), grads[k], static_cast<double>(shards));
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };
  if (shards == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (int k = 0; k < shards; ++k) threads.emplace_back(work, k);
    for (auto& t : threads) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<double> g = average_gradients(grads);

  if (diag) {
    LossDiagnostics d;
    for (const auto& s : diags) {
      d.policy_loss += s.policy_loss;
      d.value_loss += s.value_loss;
      d.entropy += s.entropy;
      d.max_ratio = std::max(d.max_ratio, s.max_ratio);
      d.steps += s.steps;
      for (int h = 0; h < net::kNumHeads; ++h) {
        d.clip_fraction[h] += s.clip_fraction[h] * s.steps;
        d.mean_ratio[h] += s.mean_ratio[h] * s.steps;
      }
      d.dual_clip_fraction += s.dual_clip_fraction * s.steps;
      d.value_error += s.value_error * s.steps;
    }
    for (int h = 0; h < net::kNumHeads; ++h) {
      d.clip_fraction[h] /= d.steps;
      d.mean_ratio[h] /= d.steps;
    }
    d.dual_clip_fraction /= d.steps;
    d.value_error /= d.steps;
    d.loss = d.policy_loss + d.value_loss - cfg_.entropy_coef * d.entropy;
    *diag = d;
  }
  return g;
}

UpdateStats Learner::update(std::span<const TrajectorySegment> batch, int shards) {
  UpdateStats stats;
  std::vector<PreparedSegment> prepared = prepare_batch(batch, cfg_);
  for (const auto& s : batch) {
    uint64_t age = params_.version >= s.model_version ? params_.version - s.model_version : 0;
    stats.mean_staleness += static_cast<double>(age) / static_cast<double>(batch.size());
    stats.max_staleness = std::max(stats.max_staleness, age);
  }
  for (int e = 0; e < cfg_.epochs; ++e) {
    LossDiagnostics d;
    std::vector<double> g = gradient(prepared, shards, &d);
    for (size_t i = 0; i < g.size(); ++i)
      if (!std::isfinite(g[i]))
        throw ContractError("non-finite gradient in parameter " + network_.layout().owner(i).name);
    adam_step(params_.values, g, adam_, cfg_.learning_rate, cfg_.adam_beta1, cfg_.adam_beta2, cfg_.adam_eps);
    if (e == 0) stats.diag = d;
  }
  ++params_.version;
  stats.version = params_.version;
  return stats;
}

net::Params Learner::snapshot() const {
  net::Params p = params_;
  p.round_to_float();
  return p;
}

}  // namespace moba::learner
