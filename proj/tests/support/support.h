#pragma once

#include <cstdint>
#include <vector>

#include "moba/common/rng.h"
#include "moba/learner/ppo.h"
#include "moba/learner/segment.h"
#include "moba/net/network.h"

namespace moba::testkit {

double normal(SplitMix64& rng);
double uniform(SplitMix64& rng, double lo, double hi);

// Tiny network with every component on (conv, pooling, attention, LSTM-16, masks).
net::NetConfig random_small_config(SplitMix64& rng);

features::Observation random_observation(const net::NetConfig& cfg, SplitMix64& rng);
net::HeadMasks random_masks(const net::NetConfig& cfg, size_t num_units, SplitMix64& rng);

// Init followed by Gaussian noise of `scale` on every parameter, so policy
// heads and biases are no longer zero.
net::Params noisy_params(const net::Network& network, uint64_t seed, double scale);

// Random segment: labels drawn from the allowed set, behavior probabilities
// in (0.05, 1], random rewards and values. `done_last` ends it terminally.
learner::TrajectorySegment random_segment(const net::NetConfig& cfg, SplitMix64& rng, int steps,
                                          bool done_last);

// Segment whose behavior probabilities are the probabilities `params`
// assigns to the sampled labels, so every ratio is 1 under `params`.
learner::TrajectorySegment on_policy_segment(const net::Network& network, const net::Params& params,
                                             SplitMix64& rng, int steps, bool done_last);

// Reference GAE as the explicit double sum
// A_t = sum_{l>=0} (gamma lambda)^l delta_{t+l}, truncated at the first done.
std::vector<double> gae_direct_sum(const std::vector<double>& rewards, const std::vector<double>& values,
                                   double bootstrap, const std::vector<uint8_t>& dones, double gamma,
                                   double lambda);

struct GradCheckResult {
  double max_rel_error = 0;
  int checked = 0;
  int skipped_kinks = 0;
};

// Five-point finite differences of the full PPO loss against the tape gradient
// on `coords` random coordinates (plus every coordinate of the smallest
// layers). Coordinates whose perturbation changes a piecewise branch are
// skipped and counted.
GradCheckResult finite_difference_check(const net::Network& network, const net::Params& params,
                                        const std::vector<learner::TrajectorySegment>& segments,
                                        const learner::PPOConfig& cfg, SplitMix64& rng, int coords,
                                        double h = 1e-3);

}  // namespace moba::testkit
