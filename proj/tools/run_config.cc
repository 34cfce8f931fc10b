#include "run_config.h"

#include <sstream>

#include "moba/common/error.h"
#include "moba/env/game.h"
#include "moba/runtime/wire.h"

namespace moba::cli {

namespace {

template <typename T>
T positive(const KvConfig& kv, const std::string& key, T fallback) {
  long long v = kv.get_int(key, static_cast<long long>(fallback));
  if (v <= 0) throw ConfigError(key, "must be positive");
  return static_cast<T>(v);
}

double non_negative(const KvConfig& kv, const std::string& key, double fallback) {
  double v = kv.get_double(key, fallback);
  if (!(v >= 0)) throw ConfigError(key, "must be >= 0");
  return v;
}

}  // namespace

RunConfig RunConfig::from_kv(const KvConfig& kv) {
  RunConfig c;
  c.kv = kv;
  c.env = env::EnvConfig::from_kv(kv);
  env::Game probe(c.env);  // loads and checks the map
  c.net = net::NetConfig::from_kv(kv, net::NetConfig{});
  c.net.move_bins = c.env.move_bins;
  c.net.offset_bins = c.env.offset_bins;
  c.net.validate();
  c.ppo = learner::PPOConfig::from_kv(kv);
  c.ppo.validate();
  c.explore = runtime::ExplorationConfig::from_kv(kv);

  RuntimeSection& r = c.runtime;
  r.seed = static_cast<uint64_t>(kv.get_int("runtime.seed", static_cast<long long>(r.seed)));
  r.actors = positive(kv, "runtime.actors", r.actors);
  r.shards = positive(kv, "runtime.shards", r.shards);
  r.pool_capacity = positive(kv, "runtime.pool_capacity", r.pool_capacity);
  r.warmup_segments = positive(kv, "runtime.warmup_segments", r.warmup_segments);
  r.recency_bias = non_negative(kv, "runtime.recency_bias", r.recency_bias);
  r.dispatch_segments = positive(kv, "runtime.dispatch_segments", r.dispatch_segments);
  r.publish_every = positive(kv, "runtime.publish_every", r.publish_every);
  r.archive_every = positive(kv, "runtime.archive_every", r.archive_every);
  r.checkpoint_every = positive(kv, "runtime.checkpoint_every", r.checkpoint_every);
  r.max_updates = positive(kv, "runtime.max_updates", r.max_updates);
  r.max_seconds = non_negative(kv, "runtime.max_seconds", r.max_seconds);
  r.probe_games = static_cast<int>(kv.get_int("runtime.probe_games", r.probe_games));
  if (r.probe_games < 0) throw ConfigError("runtime.probe_games", "must be >= 0");
  r.endpoint = kv.get_string("runtime.endpoint", r.endpoint);
  if (!r.endpoint.empty()) {
    try {
      runtime::Endpoint::parse(r.endpoint);
    } catch (const ConfigError& e) {
      throw ConfigError("runtime.endpoint", e.what());
    }
  }
  if (r.pool_capacity < r.warmup_segments)
    throw ConfigError("runtime.pool_capacity", "must hold at least warmup_segments");
  if (static_cast<size_t>(c.ppo.batch_segments) > r.pool_capacity)
    throw ConfigError("ppo.batch_segments", "exceeds runtime.pool_capacity");

  c.eval.games = positive(kv, "eval.games", c.eval.games);
  c.eval.temperature = non_negative(kv, "eval.temperature", c.eval.temperature);
  c.eval.seed = static_cast<uint64_t>(kv.get_int("eval.seed", static_cast<long long>(c.eval.seed)));

  eval::AblationConfig& a = c.ablation;
  std::stringstream arms(kv.get_string("ablation.arms", "Base,Base+AM,Base+TA,Base+LSTM,Full"));
  for (std::string arm; std::getline(arms, arm, ',');) {
    arm.erase(0, arm.find_first_not_of(" \t"));
    arm.erase(arm.find_last_not_of(" \t") + 1);
    if (!arm.empty()) a.arms.push_back(eval::AblationArm::parse(arm));
  }
  if (a.arms.size() < 2) throw ConfigError("ablation.arms", "need a reference arm and at least one other");
  a.net = c.net;
  a.ppo = c.ppo;
  a.trainer.seed = r.seed;
  a.trainer.updates = positive(kv, "ablation.updates", 1500);
  a.trainer.shards = r.shards;
  a.trainer.pool_capacity = r.pool_capacity;
  a.trainer.warmup_segments = r.warmup_segments;
  a.trainer.recency_bias = r.recency_bias;
  a.trainer.archive_every = r.archive_every;
  a.trainer.reuse = kv.get_double("ablation.reuse", a.trainer.reuse);
  if (!(a.trainer.reuse > 0)) throw ConfigError("ablation.reuse", "must be positive");
  a.trainer.explore = c.explore;
  a.probe_every = positive(kv, "ablation.probe_every", a.probe_every);
  a.probe_games = positive(kv, "ablation.probe_games", a.probe_games);
  a.probe_temperature = c.eval.temperature;
  a.elo_threshold = kv.get_double("ablation.elo_threshold", a.elo_threshold);
  a.games_vs_reference = positive(kv, "ablation.games_vs_reference", a.games_vs_reference);
  std::string select = kv.get_string("ablation.select", "final");
  if (select != "final" && select != "best_probe") throw ConfigError("ablation.select", "final or best_probe");
  a.select_best_probe = select == "best_probe";
  a.eval_seed = c.eval.seed;
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config", "no such file " + path.string());
  return from_kv(KvConfig::load(path));
}

}  // namespace moba::cli
