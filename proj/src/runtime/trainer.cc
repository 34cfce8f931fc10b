#include "moba/runtime/trainer.h"

#include <chrono>

#include "moba/runtime/frame.h"

namespace moba::runtime {

Trainer::Trainer(const env::Game& game, const features::FeatureExtractor& fx, const net::Network& network,
                 learner::PPOConfig ppo, TrainerConfig cfg)
    : game_(game), fx_(fx), network_(network), cfg_(cfg), learner_(network, network.init(cfg.seed), ppo),
      pool_(cfg.pool_capacity), rng_(derive_seed(cfg.seed, 0x7a1)) {
  archive_.push_back(learner_.snapshot());
}

void Trainer::play_one() {
  net::Params mine = learner_.snapshot();
  const net::Params* opponent = &mine;
  bool mirror = true;
  if (cfg_.explore.scripted_prob > 0 && rng_.bernoulli(cfg_.explore.scripted_prob)) {
    opponent = nullptr;
    mirror = false;
  } else if (!archive_.empty() && !rng_.bernoulli(cfg_.explore.latest_prob)) {
    const net::Params& pick = archive_[rng_.below(archive_.size())];
    if (pick.version != mine.version) {
      opponent = &pick;
      mirror = false;
    }
  }
  EpisodeSpec spec;
  spec.game = &game_;
  spec.features = &fx_;
  spec.network = &network_;
  spec.learner = &mine;
  spec.opponent = opponent;
  spec.opponent_learns = mirror;
  spec.seed = derive_seed(cfg_.seed, 0xe000000 + progress_.episodes);
  spec.episode_id = progress_.episodes;
  std::vector<learner::TrajectorySegment> segs;
  EpisodeStats st = play_episode(spec, cfg_.explore, [&](learner::TrajectorySegment&& s) { segs.push_back(std::move(s)); });
  for (const auto& s : segs) progress_.samples_generated += s.size();
  if (!segs.empty())
    for (const SampleFrame& f : dispatch_pack(segs)) pool_.push_frame(f.to_bytes());
  ++progress_.episodes;
  credit_ += cfg_.reuse * static_cast<double>(segs.size()) / learner_.config().batch_segments;
  if (on_episode_) on_episode_(progress_, st);
}

void Trainer::run(const UpdateHook& on_update, const EpisodeHook& on_episode) {
  on_episode_ = on_episode;
  const auto t0 = std::chrono::steady_clock::now();
  while (pool_.counters().pushed < cfg_.warmup_segments) play_one();
  while (progress_.update < cfg_.updates) {
    while (credit_ < 1.0) play_one();
    credit_ -= 1.0;
    SplitMix64 rng(derive_seed(cfg_.seed, 0x5a00000 + progress_.update));
    Pool::Sample batch = pool_.sample(learner_.config().batch_segments, cfg_.recency_bias, rng);
    learner::UpdateStats st = learner_.update(batch.segments, cfg_.shards);
    for (const auto& s : batch.segments) progress_.samples_consumed += s.size();
    ++progress_.update;
    if (cfg_.archive_every > 0 && progress_.update % cfg_.archive_every == 0) {
      archive_.push_back(learner_.snapshot());
      if (archive_.size() > cfg_.max_archive) archive_.erase(archive_.begin());
    }
    progress_.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (on_update) on_update(progress_, st);
  }
}

}  // namespace moba::runtime
