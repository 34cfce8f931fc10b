#include <gtest/gtest.h>

#include <cmath>

#include "moba/common/error.h"
#include "moba/learner/learner.h"
#include "moba/net/policy.h"
#include "support/support.h"

using namespace moba;
using namespace moba::learner;

namespace {

std::vector<uint8_t> no_dones(size_t n) { return std::vector<uint8_t>(n, 0); }

// Literal transcription of the clipped objectives, independent of ppo.cc.
double oracle_term(double r, double a, double eps, double c) {
  double clipped = std::min(std::max(r, 1 - eps), 1 + eps);
  double standard = std::min(r * a, clipped * a);
  return a < 0 ? std::max(standard, c * a) : standard;
}

std::vector<double> oracle_softmax(const std::vector<double>& z, const std::vector<uint8_t>& m) {
  double mx = -1e300;
  for (size_t i = 0; i < z.size(); ++i)
    if (m[i]) mx = std::max(mx, z[i]);
  std::vector<double> p(z.size(), 0.0);
  double s = 0;
  for (size_t i = 0; i < z.size(); ++i)
    if (m[i]) s += (p[i] = std::exp(z[i] - mx));
  for (double& x : p) x /= s;
  return p;
}

// Scalar-by-scalar loss over a batch, from forward() logits.
double oracle_loss(const net::Network& net, const net::Params& params, const std::vector<TrajectorySegment>& segs,
                   const PPOConfig& cfg) {
  std::vector<std::vector<double>> adv, ret;
  std::vector<double> all;
  for (const auto& s : segs) {
    std::vector<double> r, v;
    std::vector<uint8_t> d;
    for (const auto& st : s.steps) {
      r.push_back(st.reward);
      v.push_back(st.value);
      d.push_back(st.done);
    }
    adv.push_back(testkit::gae_direct_sum(r, v, s.bootstrap_value, d, cfg.gamma, cfg.lambda));
    ret.emplace_back();
    for (size_t t = 0; t < r.size(); ++t) ret.back().push_back(adv.back()[t] + v[t]);
    all.insert(all.end(), adv.back().begin(), adv.back().end());
  }
  if (cfg.normalize_advantages) {
    double mean = 0, var = 0;
    for (double a : all) mean += a;
    mean /= all.size();
    for (double a : all) var += (a - mean) * (a - mean);
    double sd = std::sqrt(var / all.size());
    for (auto& a : adv)
      for (double& x : a) x = (x - mean) / (sd + 1e-8);
  }
  double n = static_cast<double>(all.size());
  double policy = 0, value = 0, entropy = 0;
  for (size_t i = 0; i < segs.size(); ++i) {
    net::HiddenState h = segs[i].entry_state();
    for (size_t t = 0; t < segs[i].steps.size(); ++t) {
      const SegmentStep& st = segs[i].steps[t];
      net::PolicyOutput out = net.forward(params, st.obs, h);
      for (int k = 0; k < net::kNumHeads; ++k) {
        std::vector<double> p = oracle_softmax(out.logits[k], st.mask[k]);
        double r = p[st.labels[k]] / st.behavior[k];
        policy += oracle_term(r, adv[i][t], cfg.clip_eps, cfg.dual_clip_c);
        for (double x : p)
          if (x > 0) entropy -= x * std::log(x);
      }
      double e = out.value - ret[i][t];
      value += e * e;
    }
  }
  return -policy / n + cfg.value_coef * value / n - cfg.entropy_coef * entropy / n;
}

}  // namespace

TEST(Gae, SingleTerminalStep) {
  std::vector<double> r{1}, v{0};
  Advantages a = gae(r, v, 0.0, std::vector<uint8_t>{1}, 0.997, 0.95);
  EXPECT_EQ(a.advantages[0], 1.0);
  EXPECT_EQ(a.returns[0], 1.0);
}

TEST(Gae, AllZero) {
  std::vector<double> z(5, 0.0);
  for (double x : gae(z, z, 0.0, no_dones(5), 0.997, 0.95).advantages) EXPECT_EQ(x, 0.0);
}

TEST(Gae, ThreeStepsMatchDirectSum) {
  std::vector<double> r{1, 0, 1}, v{0.5, 0.2, 0.1};
  Advantages a = gae(r, v, 0.3, no_dones(3), 0.997, 0.95);
  std::vector<double> o = testkit::gae_direct_sum(r, v, 0.3, no_dones(3), 0.997, 0.95);
  for (int t = 0; t < 3; ++t) {
    EXPECT_NEAR(a.advantages[t], o[t], 1e-12);
    EXPECT_NEAR(a.returns[t], o[t] + v[t], 1e-12);
  }
}

TEST(Gae, RandomSequencesWithDonesMatchDirectSum) {
  SplitMix64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    size_t n = 1 + rng.below(40);
    std::vector<double> r(n), v(n);
    std::vector<uint8_t> d(n);
    for (size_t t = 0; t < n; ++t) {
      r[t] = testkit::normal(rng);
      v[t] = testkit::normal(rng);
      d[t] = rng.bernoulli(0.1);
    }
    double gamma = testkit::uniform(rng, 0.9, 1.0), lambda = testkit::uniform(rng, 0.0, 1.0);
    double boot = testkit::normal(rng);
    Advantages a = gae(r, v, boot, d, gamma, lambda);
    std::vector<double> o = testkit::gae_direct_sum(r, v, boot, d, gamma, lambda);
    for (size_t t = 0; t < n; ++t) ASSERT_NEAR(a.advantages[t], o[t], 1e-10);
  }
}

TEST(Gae, LengthMismatchRejected) {
  std::vector<double> r{1, 2}, v{1};
  EXPECT_THROW(gae(r, v, 0, no_dones(2), 0.9, 0.9), ContractError);
}

TEST(DualClip, Examples) {
  EXPECT_DOUBLE_EQ(dual_clip_term(1, 0.5, 0.2, 3), 0.5);
  EXPECT_DOUBLE_EQ(dual_clip_term(2, 1, 0.2, 3), 1.2);
  EXPECT_DOUBLE_EQ(dual_clip_term(10, -1, 0.2, 3), -3);
  EXPECT_DOUBLE_EQ(dual_clip_term(0.5, -1, 0.2, 3), -0.8);
}

TEST(DualClip, MatchesLiteralFormulaAndLowerBound) {
  SplitMix64 rng(8);
  for (int i = 0; i < 20000; ++i) {
    double r = testkit::uniform(rng, 0, 12), a = testkit::uniform(rng, -5, 5);
    double v = dual_clip_term(r, a, 0.2, 3);
    ASSERT_NEAR(v, oracle_term(r, a, 0.2, 3), 1e-12);
    if (a < 0) ASSERT_GE(v, 3 * a - 1e-12);
  }
}

TEST(DualClip, SlopeMatchesDerivativeAwayFromKinks) {
  SplitMix64 rng(2);
  for (int i = 0; i < 5000; ++i) {
    double r = testkit::uniform(rng, 0, 6), a = testkit::uniform(rng, -3, 3);
    double h = 1e-7;
    if (std::abs(r - 0.8) < 1e-5 || std::abs(r - 1.2) < 1e-5 || std::abs(r - 3) < 1e-5) continue;
    double fd = (dual_clip_term(r + h, a, 0.2, 3) - dual_clip_term(r - h, a, 0.2, 3)) / (2 * h);
    ASSERT_NEAR(dual_clip_slope(r, a, 0.2, 3), fd, 1e-6) << r << ' ' << a;
  }
}

class PpoLossTest : public ::testing::Test {
 protected:
  void SetUp() override {
    SplitMix64 rng(17);
    cfg_ = testkit::random_small_config(rng);
    net_ = std::make_unique<net::Network>(cfg_);
    params_ = testkit::noisy_params(*net_, 5, 0.2);
  }
  net::NetConfig cfg_;
  std::unique_ptr<net::Network> net_;
  net::Params params_;
};

TEST_F(PpoLossTest, OnPolicyRatiosAreOne) {
  SplitMix64 rng(3);
  std::vector<TrajectorySegment> segs{testkit::on_policy_segment(*net_, params_, rng, 5, false),
                                      testkit::on_policy_segment(*net_, params_, rng, 3, true)};
  PPOConfig ppo;
  auto prepared = prepare_batch(segs, ppo);
  LossDiagnostics d = ppo_loss(*net_, params_.values, prepared, ppo, 8.0);
  double mean_adv = 0;
  for (const auto& p : prepared)
    for (double a : p.advantages) mean_adv += a / 8.0;
  for (int k = 0; k < net::kNumHeads; ++k) {
    EXPECT_NEAR(d.mean_ratio[k], 1.0, 1e-6);
    EXPECT_EQ(d.clip_fraction[k], 0.0);
  }
  EXPECT_NEAR(d.policy_loss, -net::kNumHeads * mean_adv, 1e-6);
  EXPECT_EQ(d.steps, 8u);
}

TEST_F(PpoLossTest, SingleSampleReducesToDualClipTerm) {
  SplitMix64 rng(5);
  TrajectorySegment seg = testkit::random_segment(cfg_, rng, 1, true);
  // Leave one label allowed on every head but the button head.
  for (int k = 1; k < net::kNumHeads; ++k) {
    std::fill(seg.steps[0].mask[k].begin(), seg.steps[0].mask[k].end(), 0);
    seg.steps[0].mask[k][seg.steps[0].labels[k]] = 1;
    seg.steps[0].behavior[k] = 1.0f;
  }
  PPOConfig ppo;
  ppo.normalize_advantages = false;
  ppo.entropy_coef = 0;
  std::vector<TrajectorySegment> segs{seg};
  auto prepared = prepare_batch(segs, ppo);
  double adv = prepared[0].advantages[0];
  net::HiddenState h = seg.entry_state();
  net::PolicyOutput out = net_->forward(params_, seg.steps[0].obs, h);
  double p = oracle_softmax(out.logits[0], seg.steps[0].mask[0])[seg.steps[0].labels[0]];
  double r = p / seg.steps[0].behavior[0];
  LossDiagnostics d = ppo_loss(*net_, params_.values, prepared, ppo, 1.0);
  EXPECT_NEAR(d.policy_loss, -(dual_clip_term(r, adv, 0.2, 3) + 5 * adv), 1e-12);
}

TEST_F(PpoLossTest, CraftedBatchMatchesScalarOracle) {
  SplitMix64 rng(6);
  PPOConfig ppo;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<TrajectorySegment> segs{testkit::random_segment(cfg_, rng, 3, false),
                                        testkit::random_segment(cfg_, rng, 1, true)};
    auto prepared = prepare_batch(segs, ppo);
    LossDiagnostics d = ppo_loss(*net_, params_.values, prepared, ppo, 4.0);
    EXPECT_NEAR(d.loss, oracle_loss(*net_, params_, segs, ppo), 1e-10);
  }
}

TEST_F(PpoLossTest, RejectsZeroBehaviorAndOutOfMaskLabel) {
  SplitMix64 rng(7);
  PPOConfig ppo;
  TrajectorySegment seg = testkit::random_segment(cfg_, rng, 2, false);
  seg.steps[1].behavior[2] = 0.f;
  std::vector<TrajectorySegment> segs{seg};
  EXPECT_THROW(ppo_loss(*net_, params_.values, prepare_batch(segs, ppo), ppo, 2.0), ContractError);
  seg = testkit::random_segment(cfg_, rng, 2, false);
  auto& m = seg.steps[0].mask[0];
  int masked = -1;
  for (size_t i = 0; i < m.size(); ++i)
    if (!m[i]) masked = static_cast<int>(i);
  if (masked < 0) {
    m[(seg.steps[0].labels[0] + 1) % m.size()] = 0;
    masked = (seg.steps[0].labels[0] + 1) % static_cast<int>(m.size());
  }
  seg.steps[0].labels[0] = masked;
  segs = {seg};
  EXPECT_THROW(ppo_loss(*net_, params_.values, prepare_batch(segs, ppo), ppo, 2.0), ContractError);
}

TEST_F(PpoLossTest, UpdatesMovePolicyTowardPositiveAdvantage) {
  SplitMix64 rng(8);
  TrajectorySegment seg = testkit::on_policy_segment(*net_, params_, rng, 4, true);
  for (auto& st : seg.steps) st.reward = 0;
  seg.steps.back().reward = 1;
  PPOConfig ppo;
  ppo.normalize_advantages = false;
  ppo.learning_rate = 1e-3;
  ppo.batch_segments = 1;
  std::vector<TrajectorySegment> batch{seg};
  auto prob_of_labels = [&](const net::Params& p) {
    net::HiddenState h = seg.entry_state();
    double lp = 0;
    for (const auto& st : seg.steps) {
      net::PolicyOutput out = net_->forward(p, st.obs, h);
      for (int k = 0; k < net::kNumHeads; ++k) lp += std::log(oracle_softmax(out.logits[k], st.mask[k])[st.labels[k]]);
    }
    return lp;
  };
  Learner l(*net_, params_, ppo);
  double before = prob_of_labels(l.params());
  for (int i = 0; i < 5; ++i) l.update(batch);
  EXPECT_GT(prob_of_labels(l.params()), before);
  EXPECT_EQ(l.version(), 5u);
}

TEST(Adam, ZeroGradientLeavesParams) {
  std::vector<double> p{1.0, -2.0};
  AdamState st;
  std::vector<double> g{0.0, 0.0};
  adam_step(p, g, st, 1e-3);
  EXPECT_EQ(p[0], 1.0);
  EXPECT_EQ(p[1], -2.0);
}

TEST(Adam, FirstStepIsLrTimesSign) {
  std::vector<double> p{1.0, -2.0, 0.5};
  std::vector<double> g{0.3, -4.0, 2.5};
  AdamState st;
  adam_step(p, g, st, 1e-4);
  EXPECT_NEAR(p[0], 1.0 - 1e-4, 1e-9);
  EXPECT_NEAR(p[1], -2.0 + 1e-4, 1e-9);
  EXPECT_NEAR(p[2], 0.5 - 1e-4, 1e-9);
}

TEST(Adam, TwoStepsMatchRecurrence) {
  std::vector<double> p{0.7};
  AdamState st;
  double g1 = 0.2, g2 = -0.5, lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  adam_step(p, std::vector<double>{g1}, st, lr);
  adam_step(p, std::vector<double>{g2}, st, lr);
  double x = 0.7, m = 0, v = 0;
  for (int t = 1; t <= 2; ++t) {
    double g = t == 1 ? g1 : g2;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    double mh = m / (1 - std::pow(b1, t)), vh = v / (1 - std::pow(b2, t));
    x -= lr * mh / (std::sqrt(vh) + eps);
  }
  EXPECT_NEAR(p[0], x, 1e-15);
  EXPECT_EQ(st.t, 2u);
}

TEST(Adam, NonFiniteGradientRejected) {
  std::vector<double> p{1.0};
  AdamState st;
  EXPECT_THROW(adam_step(p, std::vector<double>{std::nan("")}, st, 1e-3), ContractError);
}

TEST(AverageGradients, Examples) {
  std::vector<std::vector<double>> one{{1, 2, 3}};
  EXPECT_EQ(average_gradients(one), one[0]);
  std::vector<std::vector<double>> pm{{1.5, -2}, {-1.5, 2}};
  for (double x : average_gradients(pm)) EXPECT_EQ(x, 0.0);
  SplitMix64 rng(1);
  std::vector<std::vector<double>> four(4, std::vector<double>(10));
  for (auto& v : four)
    for (double& x : v) x = testkit::normal(rng);
  auto avg = average_gradients(four);
  for (size_t i = 0; i < 10; ++i)
    EXPECT_NEAR(avg[i], (four[0][i] + four[1][i] + four[2][i] + four[3][i]) / 4, 1e-15);
}

TEST(LearnerShards, TwoShardsMatchOneShard) {
  SplitMix64 rng(12);
  net::NetConfig cfg = testkit::random_small_config(rng);
  net::Network net(cfg);
  net::Params p = testkit::noisy_params(net, 1, 0.1);
  std::vector<TrajectorySegment> batch;
  for (int i = 0; i < 5; ++i) batch.push_back(testkit::random_segment(cfg, rng, 1 + static_cast<int>(rng.below(4)), i == 2));
  PPOConfig ppo;
  Learner a(net, p, ppo), b(net, p, ppo);
  a.update(batch, 1);
  b.update(batch, 2);
  for (size_t i = 0; i < p.values.size(); ++i) ASSERT_NEAR(a.params().values[i], b.params().values[i], 1e-8);
}

TEST(LearnerShards, ShardGradientsAverageToFullBatch) {
  SplitMix64 rng(13);
  net::NetConfig cfg = testkit::random_small_config(rng);
  net::Network net(cfg);
  net::Params p = testkit::noisy_params(net, 2, 0.1);
  std::vector<TrajectorySegment> batch;
  for (int i = 0; i < 6; ++i) batch.push_back(testkit::random_segment(cfg, rng, 3, false));
  PPOConfig ppo;
  Learner l(net, p, ppo);
  auto prepared = prepare_batch(batch, ppo);
  auto g1 = l.gradient(prepared, 1), g3 = l.gradient(prepared, 3);
  for (size_t i = 0; i < g1.size(); ++i) ASSERT_NEAR(g1[i], g3[i], 1e-12);
}

TEST(LearnerSnapshot, RoundedToFloat) {
  SplitMix64 rng(14);
  net::NetConfig cfg = testkit::random_small_config(rng);
  net::Network net(cfg);
  Learner l(net, net.init(1), PPOConfig{});
  std::vector<TrajectorySegment> batch{testkit::random_segment(cfg, rng, 4, false)};
  l.update(batch);
  net::Params s = l.snapshot();
  EXPECT_EQ(s.version, 1u);
  for (double v : s.values) ASSERT_EQ(v, static_cast<double>(static_cast<float>(v)));
}

TEST(PpoConfigTest, FromKvValidates) {
  PPOConfig c = PPOConfig::from_kv(KvConfig::parse("[ppo]\nlearning_rate = 0.001\nclip_eps = 0.1\n"));
  EXPECT_EQ(c.learning_rate, 0.001);
  EXPECT_EQ(c.clip_eps, 0.1);
  EXPECT_EQ(c.gamma, 0.997);
  EXPECT_THROW(PPOConfig::from_kv(KvConfig::parse("[ppo]\ndual_clip_c = 0.5\n")), ConfigError);
}
