#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "moba/env/game.h"
#include "moba/features/observation.h"
#include "moba/learner/learner.h"
#include "moba/learner/ppo.h"
#include "moba/net/network.h"
#include "moba/runtime/episode.h"
#include "moba/runtime/pool.h"

namespace moba::runtime {

struct TrainerConfig {
  uint64_t seed = 1;
  int updates = 1000;
  int shards = 1;
  size_t pool_capacity = 1024;
  size_t warmup_segments = 64;
  double recency_bias = 0.0;
  // Segment draws per produced segment; sets the update/episode interleave.
  double reuse = 1.0;
  int archive_every = 20;
  size_t max_archive = 64;
  ExplorationConfig explore;
};

struct TrainerProgress {
  int update = 0;
  uint64_t episodes = 0;
  uint64_t samples_generated = 0;
  uint64_t samples_consumed = 0;
  double seconds = 0;
};

// Single-process, deterministic schedule of the same components: episodes
// are packed with dispatch_pack into frames, pushed into a Pool, sampled, and
// fed to the Learner. Used for equal-budget ablations and reproducibility.
class Trainer {
 public:
  Trainer(const env::Game& game, const features::FeatureExtractor& fx, const net::Network& network,
          learner::PPOConfig ppo, TrainerConfig cfg);

  using UpdateHook = std::function<void(const TrainerProgress&, const learner::UpdateStats&)>;
  using EpisodeHook = std::function<void(const TrainerProgress&, const EpisodeStats&)>;
  // Runs until `cfg.updates` learner updates have been made.
  void run(const UpdateHook& on_update = {}, const EpisodeHook& on_episode = {});

  const learner::Learner& learner() const { return learner_; }
  net::Params snapshot() const { return learner_.snapshot(); }
  const TrainerProgress& progress() const { return progress_; }

 private:
  void play_one();

  const env::Game& game_;
  const features::FeatureExtractor& fx_;
  const net::Network& network_;
  TrainerConfig cfg_;
  learner::Learner learner_;
  Pool pool_;
  std::vector<net::Params> archive_;
  SplitMix64 rng_;
  TrainerProgress progress_;
  double credit_ = 0;
  EpisodeHook on_episode_;
};

}  // namespace moba::runtime
