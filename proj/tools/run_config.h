#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "moba/common/kv_config.h"
#include "moba/env/config.h"
#include "moba/eval/ablation.h"
#include "moba/learner/ppo.h"
#include "moba/net/network.h"
#include "moba/runtime/episode.h"

namespace moba::cli {

struct RuntimeSection {
  uint64_t seed = 1;
  int actors = 4;
  int shards = 1;
  size_t pool_capacity = 1024;
  uint32_t warmup_segments = 64;
  double recency_bias = 0.0;
  int dispatch_segments = 8;
  int publish_every = 1;
  int archive_every = 20;
  int checkpoint_every = 100;
  int max_updates = 1000;
  double max_seconds = 0;
  int probe_games = 20;
  // Empty: a unix socket inside the run directory.
  std::string endpoint;
};

struct EvalSection {
  int games = 200;
  double temperature = 0.0;
  uint64_t seed = 11;
};

struct RunConfig {
  KvConfig kv;
  env::EnvConfig env;
  net::NetConfig net;
  learner::PPOConfig ppo;
  runtime::ExplorationConfig explore;
  RuntimeSection runtime;
  EvalSection eval;
  eval::AblationConfig ablation;

  // Parses and validates every section (the map file is loaded as part of
  // validation). Throws ConfigError naming the offending key.
  static RunConfig from_kv(const KvConfig& kv);
  static RunConfig load(const std::filesystem::path& path);
};

}  // namespace moba::cli
