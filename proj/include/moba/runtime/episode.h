#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>

#include "moba/common/kv_config.h"
#include "moba/env/game.h"
#include "moba/features/observation.h"
#include "moba/learner/segment.h"
#include "moba/net/network.h"

namespace moba::runtime {

struct ExplorationConfig {
  double temperature = 1.0;
  // Opponent is the latest snapshot with this probability, else an archived one.
  double latest_prob = 0.8;
  // Probability that an episode is played against the scripted bot instead
  // of a snapshot (a fixed curriculum opponent; 0 is pure self-play).
  double scripted_prob = 0.0;
  int window = 16;
  env::StartMode start_mode = env::StartMode::kZeroStart;
  bool randomize_positions = true;
  // Episode truncated after this many ticks (0 = full rollout to termination).
  int rollout_ticks = 0;

  static ExplorationConfig from_kv(const KvConfig& kv);
};

struct EpisodeStats {
  uint64_t episode_id = 0;
  uint64_t seed = 0;
  int start_tick = 0;
  int ticks = 0;
  std::optional<int> winner;
  bool truncated = false;
  std::array<env::RewardComponents, env::kNumSides> raw_totals{};
  std::array<double, env::kNumSides> reward_sums{};
  std::array<int, env::kNumSides> illegal_actions{};
  size_t segments = 0;
  uint64_t model_version = 0;
  uint64_t opponent_version = 0;
  bool opponent_scripted = false;
};

// Self-play episode: side 0 plays `learner`, side 1 plays `opponent`. Side 0
// always ships segments; side 1 ships too when `opponent_learns` (mirror game
// against the latest snapshot). Segments of `window` steps are handed to
// `emit` as soon as their bootstrap value is known. A null `opponent` plays
// the scripted bot on side 1.
struct EpisodeSpec {
  const env::Game* game = nullptr;
  const features::FeatureExtractor* features = nullptr;
  const net::Network* network = nullptr;
  const net::Params* learner = nullptr;
  const net::Params* opponent = nullptr;
  bool opponent_learns = false;
  uint64_t seed = 0;
  uint32_t actor_id = 0;
  uint64_t episode_id = 0;
};

EpisodeStats play_episode(const EpisodeSpec& spec, const ExplorationConfig& cfg,
                          const std::function<void(learner::TrajectorySegment&&)>& emit);

}  // namespace moba::runtime
