#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "moba/env/game.h"
#include "moba/features/observation.h"
#include "moba/learner/ppo.h"
#include "moba/net/network.h"
#include "moba/net/params.h"
#include "moba/runtime/episode.h"
#include "moba/runtime/frame.h"
#include "moba/runtime/pool.h"
#include "moba/runtime/wire.h"

namespace moba::runtime {

struct ModelSnapshot {
  uint64_t version = 0;
  std::vector<uint8_t> blob;  // serialized Params
  uint64_t digest = 0;        // FNV-1a-64 of blob

  static ModelSnapshot make(const net::Params& p, const net::ParamLayout& layout);
  // Digest and layout check, then decode. Throws FormatError on mismatch.
  net::Params open(const net::ParamLayout& layout) const;
};

// Model store behind the pool service: latest snapshot plus an archive used
// for opponent sampling.
class ModelStore {
 public:
  explicit ModelStore(size_t max_archive = 64) : max_archive_(max_archive) {}
  // Rejects version regressions and digest mismatches (returns the reason).
  std::optional<std::string> publish(ModelSnapshot s, bool archive);
  const ModelSnapshot* find(uint64_t version) const;  // 0 = latest
  const ModelSnapshot* latest() const { return latest_ ? &*latest_ : nullptr; }
  std::vector<uint64_t> archived_versions() const;

 private:
  size_t max_archive_;
  std::optional<ModelSnapshot> latest_;
  std::vector<ModelSnapshot> archive_;
};

struct PoolServerConfig {
  Endpoint endpoint;
  size_t capacity = 1024;
  size_t max_archive = 64;
};

// Single-threaded poll loop; every queue mutation happens on this thread.
// Returns when `stop` is set.
void run_pool_server(const PoolServerConfig& cfg, const std::atomic<bool>& stop);

struct PoolInfo {
  bool has_model = false;
  uint64_t latest_version = 0;
  PoolCounters counters;
  uint64_t size = 0;
  std::vector<uint64_t> archive;
};

class PoolClient {
 public:
  explicit PoolClient(Endpoint ep, int connect_timeout_ms = 10000);
  ~PoolClient();
  PoolClient(const PoolClient&) = delete;
  PoolClient& operator=(const PoolClient&) = delete;

  // Accepted segment count, -1 when the pool rejected the frame.
  int push(const SampleFrame& frame);
  Pool::Sample sample(uint32_t n, double recency_bias, uint64_t seed, uint64_t max_serial = 0);
  PoolInfo info(uint8_t role, uint32_t id);
  // Throws std::runtime_error with the server's reason on rejection.
  void publish(const ModelSnapshot& s, bool archive);
  std::optional<ModelSnapshot> fetch(uint64_t version);
  void reconnect();
  // Sends raw bytes as a PUSH payload (tests inject corruption this way).
  Message raw_request(Command c, std::span<const uint8_t> payload);

 private:
  Message call(Command c, std::span<const uint8_t> payload);
  Endpoint ep_;
  int timeout_ms_;
  int fd_ = -1;
};

enum Role : uint8_t { kRoleActor = 1, kRoleLearner = 2, kRoleObserver = 3 };

struct ActorProcessConfig {
  Endpoint pool;
  uint32_t actor_id = 0;
  uint64_t seed = 1;
  ExplorationConfig explore;
  int dispatch_segments = 8;
  int max_episodes = 0;  // 0 = until stopped
  std::string episodes_csv;
};

// Self-play actor with an in-process dispatch stage.
void run_actor(const env::Game& game, const features::FeatureExtractor& fx, const net::Network& network,
               const ActorProcessConfig& cfg, const std::atomic<bool>& stop);

std::string episode_csv_header();
std::string episode_csv_row(double wall_s, uint32_t actor, const EpisodeStats& s);

struct LearnerServiceConfig {
  Endpoint pool;
  uint64_t seed = 1;
  int shards = 1;
  int max_updates = 1000;
  double max_seconds = 0;  // 0 = no wall-clock limit
  uint32_t warmup_segments = 64;
  double recency_bias = 0.0;
  int publish_every = 1;
  int archive_every = 20;
  int checkpoint_every = 100;
  int probe_games = 0;
  double probe_temperature = 0.0;
  std::string run_dir;
};

// Returns the final version. Writes metrics.csv, probes.csv and checkpoints
// under run_dir.
uint64_t run_learner_service(const env::Game& game, const features::FeatureExtractor& fx,
                             const net::Network& network, const learner::PPOConfig& ppo,
                             const LearnerServiceConfig& cfg, const std::atomic<bool>& stop);

std::string checkpoint_path(const std::string& run_dir, uint64_t version);

}  // namespace moba::runtime
