// Acceptance run: one pass/fail line per criterion, exit status 0 only when
// every criterion passes. Criteria 8 and 9 evaluate the stored training and
// ablation artifacts on fresh seeds.
#include <sys/socket.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include "moba/common/error.h"
#include "moba/eval/ablation.h"
#include "moba/eval/elo.h"
#include "moba/learner/learner.h"
#include "moba/net/policy.h"
#include "moba/runtime/frame.h"
#include "moba/runtime/half.h"
#include "moba/runtime/services.h"
#include "plot.h"
#include "run_config.h"
#include "support/support.h"

namespace fs = std::filesystem;
using namespace moba;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

template <typename... A>
std::string fmt(const char* f, A... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. Dual clip against direct substitution into the clipped objectives.
Outcome dual_clip_grid() {
  const auto t0 = std::chrono::steady_clock::now();
  const double eps = 0.2, c = 3.0;
  double max_err = 0;
  int bound_violations = 0, points = 0;
  for (int i = 0; i < 100; ++i) {
    for (int j = 0; j < 100; ++j) {
      double r = 100.0 * i / 99.0, a = -10.0 + 20.0 * j / 99.0;
      double clipped = r < 1 - eps ? 1 - eps : (r > 1 + eps ? 1 + eps : r);
      double standard = std::min(r * a, clipped * a);
      double expected = a < 0 ? std::max(standard, c * a) : standard;
      double got = learner::dual_clip_term(r, a, eps, c);
      max_err = std::max(max_err, std::abs(got - expected));
      if (a < 0 && got < c * a) ++bound_violations;
      ++points;
    }
  }
  double dt = seconds_since(t0);
  return {max_err <= 1e-12 && bound_violations == 0 && points == 10000 && dt < 1.0,
          fmt("%d points, max |err| %.3g, lower-bound violations %d, %.3f s", points, max_err, bound_violations, dt)};
}

// 2. GAE recursion against the explicit double sum.
Outcome gae_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  SplitMix64 rng(2024);
  double max_err = 0;
  for (int s = 0; s < 1000; ++s) {
    size_t n = 1 + rng.below(64);
    std::vector<double> r(n), v(n);
    std::vector<uint8_t> d(n);
    for (size_t t = 0; t < n; ++t) {
      r[t] = testkit::normal(rng);
      v[t] = testkit::normal(rng);
      d[t] = rng.bernoulli(0.05);
    }
    double boot = testkit::normal(rng);
    auto a = learner::gae(r, v, boot, d, 0.997, 0.95);
    auto o = testkit::gae_direct_sum(r, v, boot, d, 0.997, 0.95);
    for (size_t t = 0; t < n; ++t) max_err = std::max(max_err, std::abs(a.advantages[t] - o[t]));
  }
  double dt = seconds_since(t0);
  return {max_err <= 1e-10 && dt < 10, fmt("1000 sequences, max |err| %.3g, %.2f s", max_err, dt)};
}

// 3. Finite differences of the full loss on random small networks.
Outcome gradient_fidelity() {
  const auto t0 = std::chrono::steady_clock::now();
  SplitMix64 rng(3003);
  learner::PPOConfig ppo;
  ppo.entropy_coef = 0.05;
  double worst = 0;
  int checked = 0, skipped = 0, nets = 0;
  for (int n = 0; n < 20; ++n) {
    net::NetConfig cfg = testkit::random_small_config(rng);
    if (cfg.lstm != 16 || !cfg.use_attention || !cfg.use_mask) return {false, "random config lost a component"};
    net::Network network(cfg);
    net::Params p = testkit::noisy_params(network, 500 + n, 0.3);
    std::vector<learner::TrajectorySegment> segs{testkit::random_segment(cfg, rng, 3, false),
                                                 testkit::random_segment(cfg, rng, 2, true)};
    auto r = testkit::finite_difference_check(network, p, segs, ppo, rng, 80);
    worst = std::max(worst, r.max_rel_error);
    checked += r.checked;
    skipped += r.skipped_kinks;
    ++nets;
  }
  double dt = seconds_since(t0);
  return {worst < 1e-4 && nets >= 20 && dt < 300,
          fmt("%d nets, %d coordinates (%d skipped at kinks), max rel err %.3g, %.1f s", nets, checked, skipped,
              worst, dt)};
}

// 4. Sampled actions never take a masked label and are never coerced.
Outcome mask_soundness() {
  const auto t0 = std::chrono::steady_clock::now();
  env::EnvConfig ec;
  env::Game game(ec);
  features::FeatureExtractor fx(game);
  net::Network network(net::NetConfig::small());
  // Large weights give peaked policies that would expose any mask leak.
  net::Params params = testkit::noisy_params(network, 44, 0.6);
  SplitMix64 rng(4004);
  const long long target = 1000000;
  const int draws_per_state = 8;
  long long sampled = 0, masked = 0, coerced = 0, env_illegal = 0;
  uint64_t seed = 1;
  while (sampled < target) {
    env::WorldState s = game.reset(seed, rng.bernoulli(0.5) ? env::StartMode::kRandomInitialFrame
                                                           : env::StartMode::kZeroStart,
                                   true);
    ++seed;
    std::array<net::HiddenState, 2> h{net::HiddenState::zeros(network.config()),
                                      net::HiddenState::zeros(network.config())};
    for (int tick = 0; tick < 1500 && !s.terminal && sampled < target; ++tick) {
      env::ActionPair pair;
      for (int side = 0; side < 2; ++side) {
        features::Observation obs = fx.extract(s, side);
        env::ActionMask mask = game.legal_action_mask(s, side);
        net::HeadMasks hm = net::head_masks(network.config(), mask, obs.num_units());
        net::PolicyOutput out = network.forward(params, obs, h[side]);
        double temp = rng.bernoulli(0.5) ? 1.0 : 3.0;
        for (int k = 0; k < draws_per_state; ++k) {
          net::SampledAction a = net::sample_action(out, hm, rng, temp);
          ++sampled;
          for (int head = 0; head < net::kNumHeads; ++head)
            if (!hm[head][a.labels[head]]) ++masked;
          if (!env::Game::is_legal(mask, a.command)) ++env_illegal;
          if (k == 0) pair[side] = a.command;
        }
      }
      env::WorldState next = game.step(s, pair).state;
      coerced += (next.illegal_actions[0] - s.illegal_actions[0]) + (next.illegal_actions[1] - s.illegal_actions[1]);
      s = std::move(next);
    }
  }
  double dt = seconds_since(t0);
  return {masked == 0 && coerced == 0 && env_illegal == 0 && dt < 300,
          fmt("%lld sampled actions, %lld masked labels, %lld failing the env mask, %lld coercions, %.1f s", sampled,
              masked, env_illegal, coerced, dt)};
}

// 5. reward_0 + reward_1 == 0 exactly on every step of scripted playouts.
Outcome zero_sum() {
  env::EnvConfig ec;
  env::Game game(ec);
  long long steps = 0, violations = 0;
  int finished = 0;
  for (uint64_t seed = 1; seed <= 100; ++seed) {
    env::WorldState s = game.reset(seed, env::StartMode::kZeroStart, seed % 2 == 0);
    while (!s.terminal) {
      env::StepResult r = game.step(s, {game.scripted_bot_action(s, 0), game.scripted_bot_action(s, 1)});
      double r0 = env::compute_reward(s, r.state, 0, ec.reward), r1 = env::compute_reward(s, r.state, 1, ec.reward);
      if (r0 + r1 != 0.0) ++violations;
      ++steps;
      s = std::move(r.state);
    }
    ++finished;
  }
  return {violations == 0 && finished == 100,
          fmt("%d playouts to termination, %lld steps, %lld nonzero sums", finished, steps, violations)};
}

// 6. Actor -> dispatch -> pool server -> learner round trip, plus corruption.
Outcome pipeline_fidelity() {
  env::EnvConfig ec;
  ec.tick_cap = 600;
  env::Game game(ec);
  features::FeatureExtractor fx(game);
  net::Network network(net::NetConfig::small());
  net::Params params = testkit::noisy_params(network, 66, 0.2);
  std::vector<learner::TrajectorySegment> produced;
  runtime::EpisodeSpec spec;
  spec.game = &game;
  spec.features = &fx;
  spec.network = &network;
  spec.learner = &params;
  spec.opponent = &params;
  spec.opponent_learns = true;
  runtime::ExplorationConfig ex;
  for (uint64_t seed = 1; seed <= 2; ++seed) {
    spec.seed = seed;
    runtime::play_episode(spec, ex, [&](learner::TrajectorySegment&& s) { produced.push_back(std::move(s)); });
  }
  for (size_t i = 0; i < produced.size(); ++i) produced[i].timestamp_us = i;  // identity key

  runtime::PoolServerConfig pc;
  pc.endpoint = runtime::Endpoint::parse("unix:" + (fs::temp_directory_path() /
                                                    ("moba_accept_" + std::to_string(::getpid()) + ".sock"))
                                                       .string());
  pc.capacity = produced.size() + 16;
  std::atomic<bool> stop{false};
  std::thread server([&] { runtime::run_pool_server(pc, stop); });
  runtime::PoolClient actor(pc.endpoint), learner_side(pc.endpoint);
  for (size_t i = 0; i < produced.size(); i += 8) {
    auto frames = runtime::dispatch_pack(std::span(produced).subspan(i, std::min<size_t>(8, produced.size() - i)));
    for (const auto& f : frames) actor.push(f);
  }
  runtime::Pool::Sample got = learner_side.sample(static_cast<uint32_t>(produced.size()), 0.0, 9);

  long long f32_fields = 0, f32_mismatch = 0, f16_fields = 0, f16_out_of_bound = 0, structural = 0;
  auto half_ok = [&](float orig, float back) {
    ++f16_fields;
    float bound = std::abs(orig) >= 0x1p-14f ? std::abs(orig) * 0x1p-11f : 0x1p-25f;
    if (!(std::abs(back - orig) <= bound)) ++f16_out_of_bound;
  };
  if (got.segments.size() != produced.size()) ++structural;
  for (const auto& b : got.segments) {
    if (b.timestamp_us >= produced.size()) {
      ++structural;
      continue;
    }
    const auto& a = produced[b.timestamp_us];
    if (a.size() != b.size() || a.episode_id != b.episode_id || a.side != b.side) {
      ++structural;
      continue;
    }
    for (size_t t = 0; t < a.size(); ++t) {
      const auto& x = a.steps[t];
      const auto& y = b.steps[t];
      ++f32_fields;
      if (std::bit_cast<uint32_t>(x.reward) != std::bit_cast<uint32_t>(y.reward)) ++f32_mismatch;
      for (int k = 0; k < net::kNumHeads; ++k) {
        ++f32_fields;
        if (std::bit_cast<uint32_t>(x.behavior[k]) != std::bit_cast<uint32_t>(y.behavior[k])) ++f32_mismatch;
      }
      if (x.labels != y.labels || x.mask != y.mask || x.done != y.done || x.obs.unit_types != y.obs.unit_types)
        ++structural;
      for (size_t j = 0; j < x.obs.image.size(); ++j) half_ok(x.obs.image[j], y.obs.image[j]);
      for (size_t j = 0; j < x.obs.units.size(); ++j) half_ok(x.obs.units[j], y.obs.units[j]);
      for (size_t j = 0; j < x.obs.global.size(); ++j) half_ok(x.obs.global[j], y.obs.global[j]);
      half_ok(x.value, y.value);
    }
    half_ok(a.bootstrap_value, b.bootstrap_value);
    for (size_t j = 0; j < a.entry_h.size(); ++j) half_ok(a.entry_h[j], b.entry_h[j]);
  }

  // Corruption: random bytes of a valid frame, pushed raw to the pool.
  SplitMix64 rng(6006);
  std::vector<learner::TrajectorySegment> some(produced.begin(), produced.begin() + 4);
  std::vector<uint8_t> clean = runtime::dispatch_pack(some)[0].to_bytes();
  uint64_t size_before = learner_side.info(runtime::kRoleObserver, 0).size;
  int rejected = 0;
  const int trials = 100;
  for (int i = 0; i < trials; ++i) {
    std::vector<uint8_t> bad = clean;
    int flips = 1 + static_cast<int>(rng.below(4));
    for (int f = 0; f < flips; ++f) bad[rng.below(bad.size())] ^= static_cast<uint8_t>(1u << rng.below(8));
    if (bad == clean) bad[0] ^= 1;
    runtime::Message reply = actor.raw_request(runtime::Command::kPush, bad);
    if (reply.command == runtime::Command::kAck && runtime::PayloadReader(reply.payload).get<uint8_t>() == 0)
      ++rejected;
  }
  runtime::PoolInfo info = learner_side.info(runtime::kRoleObserver, 0);
  stop = true;
  server.join();
  bool ok = f32_mismatch == 0 && f16_out_of_bound == 0 && structural == 0 && rejected == trials &&
            info.size == size_before && info.counters.rejected_frames == static_cast<uint64_t>(trials);
  return {ok, fmt("%zu segments; f32 %lld/%lld bit-exact; f16 %lld/%lld within rounding; structural mismatches %lld; "
                  "corruption rejected %d/%d",
                  got.segments.size(), f32_fields - f32_mismatch, f32_fields, f16_fields - f16_out_of_bound,
                  f16_fields, structural, rejected, trials)};
}

// 7. Two-shard gradient averaging plus one Adam step equals the full batch.
Outcome distributed_equivalence() {
  double worst = 0;
  int trials = 0;
  SplitMix64 rng(7007);
  for (int n = 0; n < 5; ++n, ++trials) {
    net::NetConfig cfg = testkit::random_small_config(rng);
    net::Network network(cfg);
    net::Params p = testkit::noisy_params(network, 700 + n, 0.2);
    std::vector<learner::TrajectorySegment> batch;
    for (int i = 0; i < 6; ++i)
      batch.push_back(testkit::random_segment(cfg, rng, 1 + static_cast<int>(rng.below(6)), i % 3 == 2));
    learner::PPOConfig ppo;
    learner::Learner one(network, p, ppo), two(network, p, ppo);
    one.update(batch, 1);
    two.update(batch, 2);
    for (size_t i = 0; i < p.values.size(); ++i)
      worst = std::max(worst, std::abs(one.params().values[i] - two.params().values[i]));
  }
  // The production network on real self-play segments.
  {
    env::EnvConfig ec;
    ec.tick_cap = 200;
    env::Game game(ec);
    features::FeatureExtractor fx(game);
    net::Network network(net::NetConfig::small());
    net::Params p = testkit::noisy_params(network, 77, 0.1);
    std::vector<learner::TrajectorySegment> batch;
    runtime::EpisodeSpec spec;
    spec.game = &game;
    spec.features = &fx;
    spec.network = &network;
    spec.learner = &p;
    spec.opponent = &p;
    spec.opponent_learns = true;
    spec.seed = 3;
    runtime::play_episode(spec, runtime::ExplorationConfig{}, [&](learner::TrajectorySegment&& s) {
      batch.push_back(std::move(s));
    });
    learner::PPOConfig ppo;
    learner::Learner one(network, p, ppo), two(network, p, ppo);
    one.update(batch, 1);
    two.update(batch, 2);
    for (size_t i = 0; i < p.values.size(); ++i)
      worst = std::max(worst, std::abs(one.params().values[i] - two.params().values[i]));
    ++trials;
  }
  return {worst <= 1e-8, fmt("%d batches, max |param diff| %.3g", trials, worst)};
}

struct Loaded {
  cli::RunConfig cfg;
  std::unique_ptr<env::Game> game;
  std::unique_ptr<features::FeatureExtractor> fx;
};

Loaded load_run(const fs::path& dir) {
  Loaded l{cli::RunConfig::load(dir / "config.cfg"), nullptr, nullptr};
  l.game = std::make_unique<env::Game>(l.cfg.env);
  l.fx = std::make_unique<features::FeatureExtractor>(*l.game);
  return l;
}

std::vector<fs::path> checkpoints(const fs::path& run) {
  std::vector<fs::path> out;
  if (fs::exists(run / "checkpoints"))
    for (const auto& e : fs::directory_iterator(run / "checkpoints"))
      if (e.path().extension() == ".bin") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

// 8. A stored training run: best-probe checkpoint vs the scripted bot on
// fresh seeds, and the Elo series over checkpoints.
Outcome training_progression(const fs::path& run) {
  if (!fs::exists(run / "config.cfg")) return {false, "no training run at " + run.string()};
  Loaded l = load_run(run);
  net::Network network(l.cfg.net);
  auto cps = checkpoints(run);
  if (cps.size() < 2) return {false, "fewer than two checkpoints"};

  // Selection uses only the probes recorded during training.
  cli::Table probes = cli::Table::read(run / "probes.csv");
  auto versions = probes.values("version"), elos = probes.values("elo_vs_scripted");
  std::optional<uint64_t> best;
  double best_elo = -1e300;
  for (size_t i = 0; i < versions.size(); ++i) {
    uint64_t v = static_cast<uint64_t>(versions[i]);
    if (!fs::exists(runtime::checkpoint_path(run.string(), v))) continue;
    if (elos[i] >= best_elo) best_elo = elos[i], best = v;
  }
  if (!best) return {false, "no probed checkpoint on disk"};
  net::Params chosen = net::load_params_file(runtime::checkpoint_path(run.string(), *best), network.layout());
  const double temp = l.cfg.eval.temperature;
  eval::Participant me{"model", chosen.version,
                       [&] { return std::make_unique<eval::NetAgent>(*l.game, *l.fx, network, chosen, temp); }};
  eval::Participant bot{"scripted", 0, [&] { return std::make_unique<eval::ScriptedAgent>(*l.game); }};
  eval::WinStats w = eval::tally(eval::head_to_head(*l.game, me, bot, 200, 0xacce55), "model");

  // Elo series over evenly spaced checkpoints (first and last included) plus the bot.
  const size_t k = std::min<size_t>(8, cps.size());
  std::vector<net::Params> snaps;
  for (size_t i = 0; i < k; ++i) {
    size_t idx = k == 1 ? 0 : i * (cps.size() - 1) / (k - 1);
    snaps.push_back(net::load_params_file(cps[idx].string(), network.layout()));
  }
  std::vector<eval::Participant> ps;
  for (size_t i = 0; i < snaps.size(); ++i)
    ps.push_back({"v" + std::to_string(snaps[i].version), snaps[i].version, [&, i] {
                    return std::make_unique<eval::NetAgent>(*l.game, *l.fx, network, snaps[i], temp);
                  }});
  ps.push_back(bot);
  eval::TournamentConfig tc;
  tc.games_per_pair = 10;
  tc.passes = 3;
  tc.seed = 0xe10;
  eval::TournamentResult tr = eval::run_tournament(*l.game, ps, tc);
  double first = tr.table.rating(ps.front().id), last = tr.table.rating(ps[snaps.size() - 1].id);
  std::ostringstream series;
  for (size_t i = 0; i < snaps.size(); ++i) series << (i ? " " : "") << std::lround(tr.table.rating(ps[i].id));

  double hours = 0;
  {
    cli::Table metrics = cli::Table::read(run / "metrics.csv");
    auto wall = metrics.values("wall_s");
    if (!wall.empty()) hours = wall.back() / 3600.0;
  }
  bool ok = w.wins >= 180 && last > first;
  return {ok, fmt("run %.2f h, %d actors; checkpoint v%llu beats scripted %d/%d (%.1f%%); Elo v%llu..v%llu: %s",
                  hours, l.cfg.runtime.actors, static_cast<unsigned long long>(*best), w.wins, w.games,
                  100.0 * w.wins / w.games, static_cast<unsigned long long>(snaps.front().version),
                  static_cast<unsigned long long>(snaps.back().version), series.str().c_str())};
}

std::string arm_file(const std::string& name) {
  std::string s = name;
  std::replace(s.begin(), s.end(), '+', '_');
  return "arm_" + s + ".bin";
}

// 9. Stored ablation: Full vs Base on fresh seeds, and convergence of the
// AM arm against the no-AM arm from the probes recorded during training.
Outcome ablation_direction(const fs::path& dir) {
  if (!fs::exists(dir / "config.cfg")) return {false, "no ablation output at " + dir.string()};
  Loaded l = load_run(dir);
  auto build = [&](const std::string& name) {
    net::NetConfig nc = l.cfg.net;
    runtime::ExplorationConfig ex;
    eval::AblationArm::parse(name).apply(nc, ex);
    return std::make_unique<net::Network>(nc);
  };
  auto full_net = build("Full"), base_net = build("Base");
  if (!fs::exists(dir / arm_file("Full")) || !fs::exists(dir / arm_file("Base")))
    return {false, "missing Full or Base snapshot"};
  net::Params full = net::load_params_file((dir / arm_file("Full")).string(), full_net->layout());
  net::Params base = net::load_params_file((dir / arm_file("Base")).string(), base_net->layout());
  const double temp = l.cfg.eval.temperature;
  eval::Participant pf{"Full", 0, [&] { return std::make_unique<eval::NetAgent>(*l.game, *l.fx, *full_net, full, temp); }};
  eval::Participant pb{"Base", 0, [&] { return std::make_unique<eval::NetAgent>(*l.game, *l.fx, *base_net, base, temp); }};
  const int games = std::max(300, l.cfg.ablation.games_vs_reference);
  eval::WinStats w = eval::tally(eval::head_to_head(*l.game, pf, pb, games, 0xab1a7e), "Full");
  auto [lo, hi] = eval::wilson_interval(w.wins + 0.5 * w.draws, w.games, 1.959963984540054);

  cli::Table probes = cli::Table::read(dir / "probes.csv");
  std::map<std::string, std::optional<int>> reach;
  std::map<std::string, int> last_update;
  {
    std::ifstream in(dir / "probes.csv");
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      std::stringstream ss(line);
      std::string arm, u, wr, elo;
      std::getline(ss, arm, ',');
      std::getline(ss, u, ',');
      std::getline(ss, wr, ',');
      std::getline(ss, elo, ',');
      int update = std::stoi(u);
      last_update[arm] = std::max(last_update[arm], update);
      if (!reach[arm] && std::stod(elo) >= l.cfg.ablation.elo_threshold) reach[arm] = update;
    }
  }
  auto show = [&](const std::string& arm) {
    return reach[arm] ? std::to_string(*reach[arm]) : ">" + std::to_string(last_update[arm]);
  };
  bool am_faster = reach["Base+AM"] && (!reach["Base"] || *reach["Base+AM"] < *reach["Base"]);
  bool ok = w.games >= 300 && lo > 0.5 && am_faster;
  return {ok, fmt("Full vs Base %d-%d-%d over %d games, win rate %.3f, 95%% CI [%.3f, %.3f]; updates to Elo %.0f: "
                  "Base+AM %s, Base %s",
                  w.wins, w.losses, w.draws, w.games, w.win_rate(), lo, hi, l.cfg.ablation.elo_threshold,
                  show("Base+AM").c_str(), show("Base").c_str())};
}

// 10. Identical snapshots on mirrored sides.
Outcome self_play_symmetry(const fs::path& run) {
  env::EnvConfig ec;
  env::Game game(ec);
  features::FeatureExtractor fx(game);
  net::Network network(net::NetConfig::small());
  net::Params p = testkit::noisy_params(network, 1010, 0.1);
  std::string which = "noisy init";
  auto cps = checkpoints(run);
  std::optional<Loaded> l;
  std::unique_ptr<net::Network> trained;
  if (!cps.empty() && fs::exists(run / "config.cfg")) {
    l = load_run(run);
    trained = std::make_unique<net::Network>(l->cfg.net);
    p = net::load_params_file(cps.back().string(), trained->layout());
    which = cps.back().filename().string();
  }
  const env::Game& g = l ? *l->game : game;
  const features::FeatureExtractor& f = l ? *l->fx : fx;
  const net::Network& n = trained ? *trained : network;
  eval::Participant a{"a", 0, [&] { return std::make_unique<eval::NetAgent>(g, f, n, p); }};
  eval::Participant b{"b", 0, [&] { return std::make_unique<eval::NetAgent>(g, f, n, p); }};
  eval::WinStats w = eval::tally(eval::head_to_head(g, a, b, 400, 0x5e1f), "a");
  auto [lo, hi] = eval::binomial_acceptance(400, 0.99);
  double score2 = 2 * (w.wins + 0.5 * w.draws);  // in half-games
  bool ok = score2 >= 2 * lo && score2 <= 2 * hi;
  return {ok, fmt("%s vs itself: %d-%d-%d over 400 games, score %.1f, 99%% band [%d, %d]", which.c_str(), w.wins,
                  w.losses, w.draws, score2 / 2, lo, hi)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string train_run = MOBA_ARTIFACTS "/train", ablation_dir = MOBA_ARTIFACTS "/ablation";
  std::vector<int> only;
  app.add_option("--train-run", train_run, "Run directory of the stored training run")->capture_default_str();
  app.add_option("--ablation", ablation_dir, "Output directory of the stored ablation")->capture_default_str();
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"dual-clip grid", dual_clip_grid},
      {"GAE oracle", gae_oracle},
      {"gradient fidelity", gradient_fidelity},
      {"mask soundness", mask_soundness},
      {"zero-sum reward", zero_sum},
      {"pipeline fidelity", pipeline_fidelity},
      {"distributed equivalence", distributed_equivalence},
      {"training progression", [&] { return training_progression(train_run); }},
      {"ablation direction", [&] { return ablation_direction(ablation_dir); }},
      {"self-play symmetry", [&] { return self_play_symmetry(train_run); }},
  };
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s  %2d %-24s %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
