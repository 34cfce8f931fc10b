#include "moba/runtime/episode.h"

#include "moba/common/error.h"
#include "moba/common/rng.h"
#include "moba/net/policy.h"
#include "moba/runtime/frame.h"

namespace moba::runtime {

using learner::SegmentStep;
using learner::TrajectorySegment;

ExplorationConfig ExplorationConfig::from_kv(const KvConfig& kv) {
  ExplorationConfig c;
  c.temperature = kv.get_double("actor.temperature", c.temperature);
  c.latest_prob = kv.get_double("actor.latest_prob", c.latest_prob);
  c.scripted_prob = kv.get_double("actor.scripted_prob", c.scripted_prob);
  c.window = static_cast<int>(kv.get_int("actor.window", c.window));
  std::string start = kv.get_string("actor.start", "zero");
  if (start == "zero") c.start_mode = env::StartMode::kZeroStart;
  else if (start == "random_frame") c.start_mode = env::StartMode::kRandomInitialFrame;
  else throw ConfigError("actor.start", "expected zero|random_frame, got '" + start + "'");
  c.randomize_positions = kv.get_bool("actor.randomize_positions", c.randomize_positions);
  c.rollout_ticks = static_cast<int>(kv.get_int("actor.rollout_ticks", c.rollout_ticks));
  if (!(c.temperature > 0)) throw ConfigError("actor.temperature", "must be > 0");
  if (c.latest_prob < 0 || c.latest_prob > 1) throw ConfigError("actor.latest_prob", "must be in [0,1]");
  if (c.scripted_prob < 0 || c.scripted_prob > 1) throw ConfigError("actor.scripted_prob", "must be in [0,1]");
  if (c.window < 1) throw ConfigError("actor.window", "must be >= 1");
  if (c.rollout_ticks < 0) throw ConfigError("actor.rollout_ticks", "must be >= 0");
  return c;
}

namespace {

std::vector<float> to_float(const std::vector<double>& v) { return {v.begin(), v.end()}; }

}  // namespace

EpisodeStats play_episode(const EpisodeSpec& spec, const ExplorationConfig& cfg,
                          const std::function<void(TrajectorySegment&&)>& emit) {
  const env::Game& game = *spec.game;
  const net::Network& network = *spec.network;
  const std::array<const net::Params*, 2> params{spec.learner, spec.opponent};
  const bool scripted = spec.opponent == nullptr;
  const std::array<bool, 2> learns{true, spec.opponent_learns && !scripted};

  EpisodeStats stats;
  stats.episode_id = spec.episode_id;
  stats.seed = spec.seed;
  stats.model_version = spec.learner->version;
  stats.opponent_version = scripted ? 0 : spec.opponent->version;
  stats.opponent_scripted = scripted;

  SplitMix64 rng(derive_seed(spec.seed, 0xac7));
  env::WorldState state = game.reset(spec.seed, cfg.start_mode, cfg.randomize_positions);
  stats.start_tick = state.tick;
  const int cap = game.config().tick_cap;

  std::array<net::HiddenState, 2> hidden{net::HiddenState::zeros(network.config()),
                                         net::HiddenState::zeros(network.config())};
  std::array<TrajectorySegment, 2> open;
  // A full segment waiting for the value of the following state.
  std::array<std::optional<TrajectorySegment>, 2> pending;

  auto start_segment = [&](int side) {
    TrajectorySegment& s = open[side];
    s = TrajectorySegment{};
    s.entry_h = to_float(hidden[side].h);
    s.entry_c = to_float(hidden[side].c);
    s.model_version = params[side]->version;
    s.actor_id = spec.actor_id;
    s.episode_id = spec.episode_id;
    s.side = static_cast<uint32_t>(side);
  };
  auto ship = [&](TrajectorySegment&& s, float bootstrap) {
    s.bootstrap_value = bootstrap;
    s.timestamp_us = now_us();
    ++stats.segments;
    emit(std::move(s));
  };

  int steps = 0;
  for (;;) {
    env::ActionPair actions;
    std::array<SegmentStep, 2> rec;
    for (int side = 0; side < 2; ++side) {
      if (!params[side]) {
        actions[side] = game.scripted_bot_action(state, side);
        continue;
      }
      features::Observation obs = spec.features->extract(state, side);
      env::ActionMask mask = game.legal_action_mask(state, side);
      net::HeadMasks hm = net::head_masks(network.config(), mask, obs.num_units());
      if (learns[side] && open[side].steps.empty()) start_segment(side);
      net::PolicyOutput out = network.forward(*params[side], obs, hidden[side]);
      if (pending[side]) {
        ship(std::move(*pending[side]), static_cast<float>(out.value));
        pending[side].reset();
      }
      net::SampledAction a = net::sample_action(out, hm, rng, cfg.temperature);
      actions[side] = a.command;
      if (learns[side]) {
        SegmentStep& st = rec[side];
        st.obs = std::move(obs);
        for (int k = 0; k < net::kNumHeads; ++k) {
          st.labels[k] = a.labels[k];
          st.behavior[k] = static_cast<float>(a.probs[k]);
        }
        st.mask = std::move(hm);
        st.value = static_cast<float>(out.value);
      }
    }
    env::StepResult r = game.step(state, actions);
    ++steps;
    const bool truncate = !r.terminal && (r.state.tick >= cap || (cfg.rollout_ticks > 0 && steps >= cfg.rollout_ticks));
    for (int side = 0; side < 2; ++side) {
      double reward = env::compute_reward(state, r.state, side, game.config().reward);
      stats.reward_sums[side] += reward;
      const auto& raw = r.raw[side];
      auto& tot = stats.raw_totals[side];
      tot.hp_point += raw.hp_point;
      tot.tower_hp_point += raw.tower_hp_point;
      tot.money += raw.money;
      tot.ep_rate += raw.ep_rate;
      tot.death += raw.death;
      tot.kill += raw.kill;
      tot.exp += raw.exp;
      tot.last_hit += raw.last_hit;
      if (!learns[side]) continue;
      rec[side].reward = static_cast<float>(reward);
      rec[side].done = r.terminal;
      open[side].steps.push_back(std::move(rec[side]));
      if (r.terminal) {
        ship(std::move(open[side]), 0.0f);
        open[side] = TrajectorySegment{};
      } else if (static_cast<int>(open[side].steps.size()) == cfg.window) {
        pending[side] = std::move(open[side]);
        open[side] = TrajectorySegment{};
      }
    }
    state = std::move(r.state);
    if (r.terminal || truncate) {
      stats.truncated = truncate;
      break;
    }
  }

  if (stats.truncated) {
    // Bootstrap every unfinished segment from the value of the final state.
    for (int side = 0; side < 2; ++side) {
      if (!learns[side]) continue;
      TrajectorySegment* seg = pending[side] ? &*pending[side] : (open[side].steps.empty() ? nullptr : &open[side]);
      if (!seg) continue;
      features::Observation obs = spec.features->extract(state, side);
      net::PolicyOutput out = network.forward(*params[side], obs, hidden[side]);
      ship(std::move(*seg), static_cast<float>(out.value));
    }
  }
  stats.ticks = state.tick - stats.start_tick;
  stats.winner = state.winner;
  stats.illegal_actions = state.illegal_actions;
  return stats;
}

}  // namespace moba::runtime
