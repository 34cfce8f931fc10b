#include "moba/learner/ppo.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "moba/common/error.h"
#include "moba/net/policy.h"

namespace moba::learner {

net::HiddenState TrajectorySegment::entry_state() const {
  net::HiddenState s;
  s.h.assign(entry_h.begin(), entry_h.end());
  s.c.assign(entry_c.begin(), entry_c.end());
  return s;
}

PPOConfig PPOConfig::from_kv(const KvConfig& kv) {
  PPOConfig c;
  c.gamma = kv.get_double("ppo.gamma", c.gamma);
  c.lambda = kv.get_double("ppo.lambda", c.lambda);
  c.clip_eps = kv.get_double("ppo.clip_eps", c.clip_eps);
  c.dual_clip_c = kv.get_double("ppo.dual_clip_c", c.dual_clip_c);
  c.learning_rate = kv.get_double("ppo.learning_rate", c.learning_rate);
  c.batch_segments = static_cast<int>(kv.get_int("ppo.batch_segments", c.batch_segments));
  c.epochs = static_cast<int>(kv.get_int("ppo.epochs", c.epochs));
  c.value_coef = kv.get_double("ppo.value_coef", c.value_coef);
  c.entropy_coef = kv.get_double("ppo.entropy_coef", c.entropy_coef);
  c.normalize_advantages = kv.get_bool("ppo.normalize_advantages", c.normalize_advantages);
  c.validate();
  return c;
}

void PPOConfig::validate() const {
  if (!(gamma > 0 && gamma <= 1)) throw ConfigError("ppo.gamma", "must be in (0,1]");
  if (!(lambda >= 0 && lambda <= 1)) throw ConfigError("ppo.lambda", "must be in [0,1]");
  if (!(clip_eps > 0 && clip_eps < 1)) throw ConfigError("ppo.clip_eps", "must be in (0,1)");
  if (!(dual_clip_c > 1)) throw ConfigError("ppo.dual_clip_c", "must be > 1");
  if (!(learning_rate > 0)) throw ConfigError("ppo.learning_rate", "must be > 0");
  if (batch_segments < 1) throw ConfigError("ppo.batch_segments", "must be >= 1");
  if (epochs < 1) throw ConfigError("ppo.epochs", "must be >= 1");
  if (value_coef < 0) throw ConfigError("ppo.value_coef", "must be >= 0");
  if (entropy_coef < 0) throw ConfigError("ppo.entropy_coef", "must be >= 0");
}

Advantages gae(std::span<const double> rewards, std::span<const double> values, double bootstrap,
               std::span<const uint8_t> dones, double gamma, double lambda) {
  const size_t T = rewards.size();
  if (values.size() != T || dones.size() != T) throw ContractError("gae: sequence lengths differ");
  Advantages out;
  out.advantages.assign(T, 0.0);
  out.returns.assign(T, 0.0);
  double next_adv = 0.0;
  for (size_t i = T; i-- > 0;) {
    double next_value = i + 1 < T ? values[i + 1] : bootstrap;
    double live = dones[i] ? 0.0 : 1.0;
    double delta = rewards[i] + gamma * next_value * live - values[i];
    next_adv = delta + gamma * lambda * live * next_adv;
    out.advantages[i] = next_adv;
    out.returns[i] = next_adv + values[i];
  }
  return out;
}

double dual_clip_term(double r, double a, double eps, double c) {
  double clipped = std::clamp(r, 1.0 - eps, 1.0 + eps);
  double standard = std::min(r * a, clipped * a);
  return a >= 0 ? standard : std::max(standard, c * a);
}

double dual_clip_slope(double r, double a, double eps, double c) {
  if (a >= 0) return r < 1.0 + eps ? a : 0.0;
  if (r > c) return 0.0;
  return r > 1.0 - eps ? a : 0.0;
}

std::vector<PreparedSegment> prepare_batch(std::span<const TrajectorySegment> batch, const PPOConfig& cfg) {
  std::vector<PreparedSegment> out;
  out.reserve(batch.size());
  std::vector<double> r, v;
  std::vector<uint8_t> d;
  for (const TrajectorySegment& seg : batch) {
    r.clear();
    v.clear();
    d.clear();
    for (const SegmentStep& s : seg.steps) {
      r.push_back(s.reward);
      v.push_back(s.value);
      d.push_back(s.done);
    }
    Advantages a = gae(r, v, seg.bootstrap_value, d, cfg.gamma, cfg.lambda);
    out.push_back({&seg, std::move(a.advantages), std::move(a.returns)});
  }
  if (cfg.normalize_advantages) {
    double n = 0, mean = 0, sq = 0;
    for (const auto& p : out)
      for (double x : p.advantages) {
        n += 1;
        mean += x;
      }
    if (n > 1) {
      mean /= n;
      for (const auto& p : out)
        for (double x : p.advantages) sq += (x - mean) * (x - mean);
      double sd = std::sqrt(sq / n);
      for (auto& p : out)
        for (double& x : p.advantages) x = (x - mean) / (sd + 1e-8);
    }
  }
  return out;
}

LossDiagnostics ppo_loss(const net::Network& network, std::span<const double> params,
                         std::span<const PreparedSegment> segments, const PPOConfig& cfg, double normalizer,
                         std::span<double> grad, double grad_scale, uint64_t* branch_signature) {
  if (!(normalizer > 0)) throw ContractError("ppo_loss: normalizer must be > 0");
  LossDiagnostics d;
  std::array<double, net::kNumHeads> clipped{}, ratio_sum{};
  double dual = 0, abs_err = 0;
  const double w = grad_scale / normalizer;
  const double eps = cfg.clip_eps, c = cfg.dual_clip_c;
  uint64_t sig = 0;

  for (const PreparedSegment& ps : segments) {
    const TrajectorySegment& seg = *ps.segment;
    if (seg.steps.empty()) continue;
    net::Tape tape(params, grad);
    tape.set_track_branches(branch_signature != nullptr);
    std::vector<const features::Observation*> obs;
    for (const auto& s : seg.steps) obs.push_back(&s.obs);
    auto steps = network.unroll(tape, obs, seg.entry_state());
    std::vector<net::Tape::Var> terms;

    for (size_t t = 0; t < seg.steps.size(); ++t) {
      const SegmentStep& st = seg.steps[t];
      const double adv = ps.advantages[t];
      for (int k = 0; k < net::kNumHeads; ++k) {
        const int label = st.labels[k];
        const double behavior = st.behavior[k];
        if (!(behavior > 0)) throw ContractError("ppo_loss: zero behavior probability (rejected sample)");
        const std::vector<uint8_t>& mask = st.mask[k];
        double ratio = 0, entropy = 0;
        terms.push_back(tape.scalar_fn(steps[t].logits[k], [&](std::span<const double> z, std::span<double> dz) {
          std::vector<double> p = net::masked_softmax(z, mask);
          if (label < 0 || label >= static_cast<int>(p.size()) || p[label] <= 0)
            throw ContractError(std::string("ppo_loss: label outside mask on head ") + net::head_name(k));
          ratio = p[label] / behavior;
          entropy = 0;
          for (size_t j = 0; j < p.size(); ++j)
            if (p[j] > 0) entropy -= p[j] * std::log(p[j]);
          double slope = dual_clip_slope(ratio, adv, eps, c);
          for (size_t j = 0; j < p.size(); ++j) {
            if (!mask[j]) continue;
            double dlogp = (static_cast<int>(j) == label ? 1.0 : 0.0) - p[j];
            double dent = p[j] > 0 ? -p[j] * (std::log(p[j]) + entropy) : 0.0;
            dz[j] = w * (-slope * ratio * dlogp - cfg.entropy_coef * dent);
          }
          return (-dual_clip_term(ratio, adv, eps, c) - cfg.entropy_coef * entropy) / normalizer;
        }));
        d.policy_loss -= dual_clip_term(ratio, adv, eps, c) / normalizer;
        d.entropy += entropy / normalizer;
        ratio_sum[k] += ratio;
        d.max_ratio = std::max(d.max_ratio, ratio);
        bool clip = adv >= 0 ? ratio > 1 + eps : (ratio < 1 - eps || ratio > c);
        if (branch_signature) {
          int region = ratio < 1 - eps ? 0 : ratio <= 1 + eps ? 1 : ratio <= c ? 2 : 3;
          tape.note_branch(static_cast<uint64_t>(region) * 7919u + static_cast<uint64_t>(k));
        }
        clipped[k] += clip;
        if (adv < 0 && ratio > c) dual += 1;
      }
      const double ret = ps.returns[t];
      terms.push_back(tape.scalar_fn(steps[t].value, [&](std::span<const double> v, std::span<double> dv) {
        double e = v[0] - ret;
        dv[0] = w * cfg.value_coef * 2.0 * e;
        return cfg.value_coef * e * e / normalizer;
      }));
      double e = tape.value(steps[t].value)[0] - ret;
      d.value_loss += cfg.value_coef * e * e / normalizer;
      abs_err += std::abs(e);
      ++d.steps;
    }
    sig = sig * 0x100000001b3ULL ^ tape.branch_signature();
    // The per-term callbacks already carry the weight, so only seed the sum.
    if (!grad.empty()) {
      net::Tape::Var total = tape.sum(terms);
      tape.backward(total);
    }
  }
  if (branch_signature) *branch_signature = sig;
  d.loss = d.policy_loss + d.value_loss - cfg.entropy_coef * d.entropy;
  if (d.steps > 0) {
    for (int k = 0; k < net::kNumHeads; ++k) {
      d.clip_fraction[k] = clipped[k] / d.steps;
      d.mean_ratio[k] = ratio_sum[k] / d.steps;
    }
    d.dual_clip_fraction = dual / (d.steps * net::kNumHeads);
    d.value_error = abs_err / d.steps;
  }
  return d;
}

std::string diagnostics_csv_header() {
  std::ostringstream o;
  o << "loss,policy_loss,value_loss,entropy,value_error,max_ratio,dual_clip_fraction";
  for (int k = 0; k < net::kNumHeads; ++k) o << ",clip_" << net::head_name(k);
  for (int k = 0; k < net::kNumHeads; ++k) o << ",ratio_" << net::head_name(k);
  return o.str();
}

std::string diagnostics_csv_row(const LossDiagnostics& d) {
  std::ostringstream o;
  o.precision(9);
  o << d.loss << ',' << d.policy_loss << ',' << d.value_loss << ',' << d.entropy << ',' << d.value_error << ','
    << d.max_ratio << ',' << d.dual_clip_fraction;
  for (double v : d.clip_fraction) o << ',' << v;
  for (double v : d.mean_ratio) o << ',' << v;
  return o.str();
}

void adam_step(std::span<double> params, std::span<const double> grad, AdamState& s, double lr, double beta1,
               double beta2, double eps) {
  if (grad.size() != params.size()) throw ContractError("adam_step: gradient size mismatch");
  for (size_t i = 0; i < grad.size(); ++i)
    if (!std::isfinite(grad[i])) throw ContractError("adam_step: non-finite gradient at index " + std::to_string(i));
  if (s.m.empty()) {
    s.m.assign(params.size(), 0.0);
    s.v.assign(params.size(), 0.0);
  }
  ++s.t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(s.t));
  for (size_t i = 0; i < params.size(); ++i) {
    s.m[i] = beta1 * s.m[i] + (1 - beta1) * grad[i];
    s.v[i] = beta2 * s.v[i] + (1 - beta2) * grad[i] * grad[i];
    double mhat = s.m[i] / c1, vhat = s.v[i] / c2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

std::vector<double> average_gradients(std::span<const std::vector<double>> shards) {
  if (shards.empty()) throw ContractError("average_gradients: no shards");
  std::vector<double> out(shards[0].size(), 0.0);
  for (const auto& g : shards) {
    if (g.size() != out.size()) throw ContractError("average_gradients: length mismatch");
    for (size_t i = 0; i < g.size(); ++i) out[i] += g[i];
  }
  const double k = static_cast<double>(shards.size());
  for (double& v : out) v /= k;
  return out;
}

}  // namespace moba::learner
