#include "support.h"

#include "moba/net/policy.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>

namespace moba::testkit {

double normal(SplitMix64& rng) {
  double u1 = rng.uniform(), u2 = rng.uniform();
  if (u1 <= 0) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

double uniform(SplitMix64& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

namespace {

int pick(SplitMix64& rng, int lo, int hi) { return lo + static_cast<int>(rng.below(hi - lo + 1)); }

}  // namespace

net::NetConfig random_small_config(SplitMix64& rng) {
  net::NetConfig c;
  c.image_size = pick(rng, 4, 7);
  c.conv1 = pick(rng, 2, 3);
  c.conv2 = pick(rng, 2, 3);
  c.image_hidden = pick(rng, 4, 6);
  c.unit_width = pick(rng, 4, 6);
  c.unit_hidden = pick(rng, 3, 5);
  c.key_width = pick(rng, 3, 4);
  c.global_width = pick(rng, 3, 5);
  c.global_hidden = pick(rng, 3, 4);
  c.trunk = pick(rng, 6, 10);
  c.lstm = 16;
  c.num_buttons = pick(rng, 3, 6);
  c.move_bins = pick(rng, 3, 5);
  c.offset_bins = pick(rng, 2, 4);
  c.max_units = 8;
  c.use_lstm = c.use_attention = c.use_mask = true;
  return c;
}

features::Observation random_observation(const net::NetConfig& cfg, SplitMix64& rng) {
  features::Observation o;
  o.image_size = cfg.image_size;
  o.image.resize(static_cast<size_t>(cfg.image_channels) * cfg.image_size * cfg.image_size);
  for (float& v : o.image) v = rng.bernoulli(0.3) ? 1.f : 0.f;
  size_t n = 2 + rng.below(6);
  for (size_t i = 0; i < n; ++i)
    o.unit_types.push_back(i < 2 ? env::UnitType::kHero : static_cast<env::UnitType>(1 + rng.below(3)));
  std::sort(o.unit_types.begin(), o.unit_types.end());
  o.unit_width = cfg.unit_width;
  o.units.resize(n * cfg.unit_width);
  for (float& v : o.units) v = static_cast<float>(uniform(rng, -1, 1));
  o.global.resize(cfg.global_width);
  for (float& v : o.global) v = static_cast<float>(uniform(rng, -1, 1));
  for (size_t i = 0; i < n; ++i) o.unit_registry.push_back(static_cast<int>(i));
  return o;
}

net::HeadMasks random_masks(const net::NetConfig& cfg, size_t num_units, SplitMix64& rng) {
  net::HeadMasks m;
  for (int k = 0; k < net::kNumHeads; ++k) {
    int w = cfg.head_width(k);
    if (w < 0) w = static_cast<int>(num_units);
    m[k].assign(w, 0);
    for (int i = 0; i < w; ++i) m[k][i] = rng.bernoulli(0.7);
    if (k == net::kTargetHead && !cfg.use_attention)
      for (int i = static_cast<int>(num_units); i < w; ++i) m[k][i] = 0;
    int limit = k == net::kTargetHead ? std::min<int>(w, static_cast<int>(num_units)) : w;
    m[k][rng.below(limit)] = 1;
  }
  return m;
}

net::Params noisy_params(const net::Network& network, uint64_t seed, double scale) {
  net::Params p = network.init(seed);
  SplitMix64 rng(derive_seed(seed, 0x401));
  for (double& v : p.values) v += scale * normal(rng);
  return p;
}

learner::TrajectorySegment random_segment(const net::NetConfig& cfg, SplitMix64& rng, int steps,
                                          bool done_last) {
  learner::TrajectorySegment seg;
  seg.entry_h.resize(cfg.lstm);
  seg.entry_c.resize(cfg.lstm);
  for (float& v : seg.entry_h) v = static_cast<float>(uniform(rng, -0.5, 0.5));
  for (float& v : seg.entry_c) v = static_cast<float>(uniform(rng, -0.5, 0.5));
  for (int t = 0; t < steps; ++t) {
    learner::SegmentStep st;
    st.obs = random_observation(cfg, rng);
    st.mask = random_masks(cfg, st.obs.num_units(), rng);
    for (int k = 0; k < net::kNumHeads; ++k) {
      std::vector<int> allowed;
      for (size_t i = 0; i < st.mask[k].size(); ++i)
        if (st.mask[k][i]) allowed.push_back(static_cast<int>(i));
      st.labels[k] = allowed[rng.below(allowed.size())];
      st.behavior[k] = static_cast<float>(uniform(rng, 0.05, 1.0));
    }
    st.reward = static_cast<float>(uniform(rng, -1, 1));
    st.value = static_cast<float>(uniform(rng, -1, 1));
    st.done = done_last && t == steps - 1;
    seg.steps.push_back(std::move(st));
  }
  seg.bootstrap_value = done_last ? 0.f : static_cast<float>(uniform(rng, -1, 1));
  return seg;
}

learner::TrajectorySegment on_policy_segment(const net::Network& network, const net::Params& params,
                                             SplitMix64& rng, int steps, bool done_last) {
  learner::TrajectorySegment seg = random_segment(network.config(), rng, steps, done_last);
  net::HiddenState h = seg.entry_state();
  for (auto& st : seg.steps) {
    net::PolicyOutput out = network.forward(params, st.obs, h);
    net::SampledAction a = net::sample_action(out, st.mask, rng, 1.0);
    for (int k = 0; k < net::kNumHeads; ++k) {
      st.labels[k] = a.labels[k];
      st.behavior[k] = static_cast<float>(a.probs[k]);
    }
  }
  return seg;
}

std::vector<double> gae_direct_sum(const std::vector<double>& r, const std::vector<double>& v, double bootstrap,
                                   const std::vector<uint8_t>& dones, double gamma, double lambda) {
  const size_t n = r.size();
  std::vector<double> out(n, 0.0);
  auto value_after = [&](size_t t) { return t + 1 < n ? v[t + 1] : bootstrap; };
  for (size_t t = 0; t < n; ++t) {
    double sum = 0, coef = 1;
    for (size_t l = t; l < n; ++l) {
      double delta = r[l] + (dones[l] ? 0.0 : gamma * value_after(l)) - v[l];
      sum += coef * delta;
      if (dones[l]) break;
      coef *= gamma * lambda;
    }
    out[t] = sum;
  }
  return out;
}

GradCheckResult finite_difference_check(const net::Network& network, const net::Params& params,
                                        const std::vector<learner::TrajectorySegment>& segments,
                                        const learner::PPOConfig& cfg, SplitMix64& rng, int coords, double h) {
  std::vector<learner::PreparedSegment> prepared = learner::prepare_batch(segments, cfg);
  double normalizer = 0;
  for (const auto& s : segments) normalizer += static_cast<double>(s.size());

  std::vector<double> grad(params.values.size(), 0.0);
  uint64_t sig0 = 0;
  learner::ppo_loss(network, params.values, prepared, cfg, normalizer, grad, 1.0, &sig0);

  std::vector<double> theta = params.values;
  auto loss_at = [&](size_t i, double x, uint64_t& sig) {
    double saved = theta[i];
    theta[i] = x;
    double l = learner::ppo_loss(network, theta, prepared, cfg, normalizer, {}, 1.0, &sig).loss;
    theta[i] = saved;
    return l;
  };

  // Spread the coordinates over every layer.
  std::vector<size_t> picks;
  const auto& entries = network.layout().entries();
  int per_entry = std::max(1, coords / static_cast<int>(entries.size()));
  for (const auto& e : entries)
    for (int j = 0; j < per_entry; ++j) picks.push_back(e.offset + rng.below(e.size));

  GradCheckResult res;
  for (size_t i : picks) {
    // Five-point stencil: O(h^4) truncation keeps h large enough that
    // cancellation noise stays far below the tolerance.
    std::array<uint64_t, 4> sig{};
    double f2p = loss_at(i, theta[i] + 2 * h, sig[0]);
    double f1p = loss_at(i, theta[i] + h, sig[1]);
    double f1m = loss_at(i, theta[i] - h, sig[2]);
    double f2m = loss_at(i, theta[i] - 2 * h, sig[3]);
    if (std::any_of(sig.begin(), sig.end(), [&](uint64_t s) { return s != sig0; })) {
      ++res.skipped_kinks;
      continue;
    }
    double fd = (-f2p + 8 * f1p - 8 * f1m + f2m) / (12 * h);
    double an = grad[i];
    double denom = std::max({std::abs(fd), std::abs(an), 1e-6});
    res.max_rel_error = std::max(res.max_rel_error, std::abs(fd - an) / denom);
    ++res.checked;
  }
  return res;
}

}  // namespace moba::testkit
