#include "moba/net/policy.h"

#include <algorithm>
#include <cmath>

#include "moba/common/error.h"

namespace moba::net {

std::vector<double> masked_softmax(std::span<const double> logits, std::span<const uint8_t> mask) {
  if (logits.size() != mask.size())
    throw ContractError("mask width " + std::to_string(mask.size()) + " != logits width " +
                        std::to_string(logits.size()));
  double mx = kMaskedLogit;
  bool any = false;
  for (size_t i = 0; i < logits.size(); ++i)
    if (mask[i]) {
      mx = any ? std::max(mx, logits[i]) : logits[i];
      any = true;
    }
  if (!any) throw ContractError("masked_softmax: every entry is masked");
  std::vector<double> p(logits.size(), 0.0);
  double z = 0;
  for (size_t i = 0; i < logits.size(); ++i) {
    double l = mask[i] ? logits[i] : kMaskedLogit;
    p[i] = std::exp(l - mx);
    z += mask[i] ? p[i] : 0.0;
  }
  for (size_t i = 0; i < p.size(); ++i) p[i] = mask[i] ? p[i] / z : 0.0;
  return p;
}

std::vector<double> target_attention(std::span<const double> query, std::span<const double> keys, int width) {
  if (static_cast<int>(query.size()) != width || keys.size() % width != 0)
    throw ContractError("target_attention: query width does not match key width");
  size_t n = keys.size() / width;
  std::vector<double> logits(n, 0.0);
  for (size_t i = 0; i < n; ++i)
    for (int j = 0; j < width; ++j) logits[i] += keys[i * width + j] * query[j];
  return logits;
}

env::ActionCommand to_command(const std::array<int, kNumHeads>& labels) {
  env::ActionCommand a;
  a.button = static_cast<env::Button>(labels[kButtonHead]);
  a.move_x = labels[kMoveXHead];
  a.move_y = labels[kMoveYHead];
  a.offset_x = labels[kOffsetXHead];
  a.offset_y = labels[kOffsetYHead];
  a.target_index = labels[kTargetHead];
  return a;
}

SampledAction sample_action(const PolicyOutput& policy, const HeadMasks& masks, SplitMix64& rng,
                            double temperature) {
  if (!(temperature > 0)) throw ContractError("sample_action: temperature must be > 0");
  SampledAction s;
  std::vector<double> scaled;
  for (int k = 0; k < kNumHeads; ++k) {
    scaled.assign(policy.logits[k].begin(), policy.logits[k].end());
    for (double& l : scaled) l /= temperature;
    std::vector<double> p = masked_softmax(scaled, masks[k]);
    double u = rng.uniform();
    int pick = -1;
    double acc = 0;
    for (size_t i = 0; i < p.size(); ++i) {
      if (p[i] <= 0) continue;
      pick = static_cast<int>(i);
      acc += p[i];
      if (u < acc) break;
    }
    s.labels[k] = pick;
    s.probs[k] = p[pick];
  }
  s.command = to_command(s.labels);
  return s;
}

SampledAction greedy_action(const PolicyOutput& policy, const HeadMasks& masks) {
  SampledAction s;
  for (int k = 0; k < kNumHeads; ++k) {
    int best = -1;
    for (size_t i = 0; i < policy.logits[k].size(); ++i)
      if (masks[k][i] && (best < 0 || policy.logits[k][i] > policy.logits[k][best])) best = static_cast<int>(i);
    if (best < 0) throw ContractError("greedy_action: every entry is masked");
    s.labels[k] = best;
    s.probs[k] = 1.0;
  }
  s.command = to_command(s.labels);
  return s;
}

}  // namespace moba::net
