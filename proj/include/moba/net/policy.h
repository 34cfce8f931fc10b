#pragma once

#include <array>
#include <span>
#include <vector>

#include "moba/common/rng.h"
#include "moba/env/types.h"
#include "moba/net/network.h"

namespace moba::net {

// Masked logits are replaced by this value before exponentiation, and their
// probabilities are then set to exactly zero.
inline constexpr double kMaskedLogit = -1e9;

// Softmax over the unmasked entries; masked entries get probability 0.
// Throws ContractError when no entry is allowed.
std::vector<double> masked_softmax(std::span<const double> logits, std::span<const uint8_t> mask);

// logits[i] = keys[i] . query; keys is row-major [n x width].
std::vector<double> target_attention(std::span<const double> query, std::span<const double> keys, int width);

struct SampledAction {
  env::ActionCommand command;
  std::array<int, kNumHeads> labels{};
  // Probability of each chosen label under the sampling distribution.
  std::array<double, kNumHeads> probs{};
};

// Independent Boltzmann sample per head at `temperature` (> 0).
SampledAction sample_action(const PolicyOutput& policy, const HeadMasks& masks, SplitMix64& rng,
                            double temperature = 1.0);
// Per-head argmax over allowed labels (the temperature -> 0 limit).
SampledAction greedy_action(const PolicyOutput& policy, const HeadMasks& masks);

env::ActionCommand to_command(const std::array<int, kNumHeads>& labels);

}  // namespace moba::net
