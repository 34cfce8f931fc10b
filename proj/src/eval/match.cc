#include "moba/eval/match.h"

#include <sstream>

#include "moba/net/policy.h"

namespace moba::eval {

env::ActionCommand RandomAgent::act(const env::WorldState& s, int side) {
  env::ActionMask m = game_.legal_action_mask(s, side);
  auto pick = [&](const std::vector<uint8_t>& v) {
    std::vector<int> ok;
    for (size_t i = 0; i < v.size(); ++i)
      if (v[i]) ok.push_back(static_cast<int>(i));
    return ok.empty() ? 0 : ok[rng_.below(ok.size())];
  };
  env::ActionCommand a;
  a.button = static_cast<env::Button>(pick(m.button));
  a.move_x = pick(m.move_x);
  a.move_y = pick(m.move_y);
  a.offset_x = pick(m.offset_x);
  a.offset_y = pick(m.offset_y);
  a.target_index = pick(m.target);
  return a;
}

NetAgent::NetAgent(const env::Game& game, const features::FeatureExtractor& fx, const net::Network& network,
                   const net::Params& params, double temperature)
    : game_(game), fx_(fx), network_(network), params_(params), temperature_(temperature),
      hidden_(net::HiddenState::zeros(network.config())) {}

void NetAgent::reset(uint64_t seed) {
  hidden_ = net::HiddenState::zeros(network_.config());
  rng_ = SplitMix64(derive_seed(seed, 0x9e7));
}

env::ActionCommand NetAgent::act(const env::WorldState& s, int side) {
  features::Observation obs = fx_.extract(s, side);
  net::HeadMasks hm = net::head_masks(network_.config(), game_.legal_action_mask(s, side), obs.num_units());
  net::PolicyOutput out = network_.forward(params_, obs, hidden_);
  return temperature_ > 0 ? net::sample_action(out, hm, rng_, temperature_).command
                          : net::greedy_action(out, hm).command;
}

MatchResult play_match(const env::Game& game, Agent& a, Agent& b, uint64_t seed, int a_side,
                       const MatchOptions& opt) {
  a.reset(derive_seed(seed, 1));
  b.reset(derive_seed(seed, 2));
  env::WorldState s = game.reset(seed, opt.start_mode, opt.randomize_positions);
  const int start = s.tick;
  const std::array<Agent*, 2> by_side = a_side == 0 ? std::array<Agent*, 2>{&a, &b} : std::array<Agent*, 2>{&b, &a};
  while (!s.terminal && s.tick < game.config().tick_cap) {
    env::ActionPair act{by_side[0]->act(s, 0), by_side[1]->act(s, 1)};
    s = game.step(s, act).state;
  }
  MatchResult m;
  m.a_side = a_side;
  m.seed = seed;
  m.ticks = s.tick - start;
  m.winner = s.winner ? (*s.winner == a_side ? 0 : 1) : -1;
  const double minutes = std::max(ticks_to_minutes(m.ticks, game.config().tick_ms), 1e-9);
  for (int who = 0; who < 2; ++who) {
    const env::HeroState& h = s.heroes[who == 0 ? a_side : 1 - a_side];
    m.kills[who] = h.kills;
    m.gold_per_min[who] = h.gold / minutes;
    m.exp_per_min[who] = h.exp / minutes;
  }
  return m;
}

std::string match_csv_header() {
  return "a,b,version_a,version_b,a_side,winner,ticks,kills_a,kills_b,gold_per_min_a,gold_per_min_b,"
         "exp_per_min_a,exp_per_min_b,seed";
}

std::string match_csv_row(const MatchResult& m) {
  std::ostringstream o;
  o << m.a << ',' << m.b << ',' << m.version_a << ',' << m.version_b << ',' << m.a_side << ','
    << (m.winner == 0 ? "a" : m.winner == 1 ? "b" : "draw") << ',' << m.ticks << ',' << m.kills[0] << ','
    << m.kills[1] << ',' << m.gold_per_min[0] << ',' << m.gold_per_min[1] << ',' << m.exp_per_min[0] << ','
    << m.exp_per_min[1] << ',' << m.seed;
  return o.str();
}

double ticks_to_minutes(int ticks, double tick_ms) { return ticks * tick_ms / 60000.0; }

}  // namespace moba::eval
