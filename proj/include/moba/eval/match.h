#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "moba/common/rng.h"
#include "moba/env/game.h"
#include "moba/features/observation.h"
#include "moba/net/network.h"
#include "moba/net/params.h"

namespace moba::eval {

class Agent {
 public:
  virtual ~Agent() = default;
  virtual void reset(uint64_t seed) = 0;
  virtual env::ActionCommand act(const env::WorldState& state, int side) = 0;
};

class ScriptedAgent : public Agent {
 public:
  explicit ScriptedAgent(const env::Game& game) : game_(game) {}
  void reset(uint64_t) override {}
  env::ActionCommand act(const env::WorldState& s, int side) override { return game_.scripted_bot_action(s, side); }

 private:
  const env::Game& game_;
};

// Uniform over legal labels on every head.
class RandomAgent : public Agent {
 public:
  explicit RandomAgent(const env::Game& game) : game_(game) {}
  void reset(uint64_t seed) override { rng_ = SplitMix64(derive_seed(seed, 0x4a4d)); }
  env::ActionCommand act(const env::WorldState& s, int side) override;

 private:
  const env::Game& game_;
  SplitMix64 rng_;
};

// Network policy; temperature 0 selects the per-head argmax.
class NetAgent : public Agent {
 public:
  NetAgent(const env::Game& game, const features::FeatureExtractor& fx, const net::Network& network,
           const net::Params& params, double temperature = 0.0);
  void reset(uint64_t seed) override;
  env::ActionCommand act(const env::WorldState& s, int side) override;

 private:
  const env::Game& game_;
  const features::FeatureExtractor& fx_;
  const net::Network& network_;
  const net::Params& params_;
  double temperature_;
  net::HiddenState hidden_;
  SplitMix64 rng_;
};

struct MatchResult {
  std::string a;
  std::string b;
  uint64_t version_a = 0;
  uint64_t version_b = 0;
  int a_side = 0;
  // 0 = a won, 1 = b won, -1 = draw by tick cap.
  int winner = -1;
  int ticks = 0;
  std::array<int, 2> kills{};  // [a, b]
  std::array<double, 2> gold_per_min{};
  std::array<double, 2> exp_per_min{};
  uint64_t seed = 0;

  double score_a() const { return winner == 0 ? 1.0 : winner == 1 ? 0.0 : 0.5; }
};

struct MatchOptions {
  env::StartMode start_mode = env::StartMode::kZeroStart;
  bool randomize_positions = false;
};

// Plays one game with `a` on side `a_side`. Both agents are reset with `seed`.
MatchResult play_match(const env::Game& game, Agent& a, Agent& b, uint64_t seed, int a_side,
                       const MatchOptions& opt = {});

std::string match_csv_header();
std::string match_csv_row(const MatchResult& m);

// Minutes of nominal game time for a tick count.
double ticks_to_minutes(int ticks, double tick_ms);

}  // namespace moba::eval
