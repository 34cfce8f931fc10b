#include "moba/runtime/services.h"

#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include "moba/common/error.h"
#include "moba/common/fnv.h"
#include "moba/eval/elo.h"
#include "moba/learner/learner.h"

namespace moba::runtime {

ModelSnapshot ModelSnapshot::make(const net::Params& p, const net::ParamLayout& layout) {
  ModelSnapshot s;
  s.version = p.version;
  s.blob = net::serialize_params(p, layout);
  s.digest = fnv1a64(s.blob);
  return s;
}

net::Params ModelSnapshot::open(const net::ParamLayout& layout) const {
  if (fnv1a64(blob) != digest) throw FormatError("snapshot digest mismatch");
  net::Params p = net::deserialize_params(blob, layout);
  if (p.version != version) throw FormatError("snapshot version does not match its blob");
  return p;
}

std::optional<std::string> ModelStore::publish(ModelSnapshot s, bool archive) {
  if (fnv1a64(s.blob) != s.digest) return "digest mismatch";
  try {
    if (net::read_params_header(s.blob).version != s.version) return "version does not match blob header";
  } catch (const FormatError& e) {
    return e.what();
  }
  if (latest_ && s.version <= latest_->version)
    return "version regression (" + std::to_string(s.version) + " <= " + std::to_string(latest_->version) + ")";
  if (archive) {
    archive_.push_back(s);
    if (archive_.size() > max_archive_) archive_.erase(archive_.begin());
  }
  latest_ = std::move(s);
  return std::nullopt;
}

const ModelSnapshot* ModelStore::find(uint64_t version) const {
  if (version == 0 || (latest_ && latest_->version == version)) return latest_ ? &*latest_ : nullptr;
  for (const auto& s : archive_)
    if (s.version == version) return &s;
  return nullptr;
}

std::vector<uint64_t> ModelStore::archived_versions() const {
  std::vector<uint64_t> v;
  for (const auto& s : archive_) v.push_back(s.version);
  return v;
}

namespace {

std::vector<uint8_t> ack(bool ok, int32_t value, const std::string& msg = {}) {
  PayloadWriter w;
  w.put<uint8_t>(ok ? 1 : 0).put<int32_t>(value);
  w.append(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(msg.data()), msg.size()));
  return w.bytes;
}

struct Reply {
  Command command;
  std::vector<uint8_t> payload;
};

Reply handle(const Message& m, Pool& pool, ModelStore& models) {
  switch (m.command) {
    case Command::kPush: {
      int n = pool.push_frame(m.payload);
      return {Command::kAck, n < 0 ? ack(false, -1, "frame rejected") : ack(true, n)};
    }
    case Command::kSample: {
      PayloadReader r(m.payload);
      uint32_t n = r.get<uint32_t>();
      double bias = r.get<double>();
      uint64_t seed = r.get<uint64_t>();
      uint64_t max_serial = r.get<uint64_t>();
      PayloadWriter w;
      if (pool.size() == 0) {
        w.put<uint8_t>(1).put<uint32_t>(0);
        return {Command::kSample, w.bytes};
      }
      SplitMix64 rng(seed);
      Pool::Sample s = pool.sample(n, bias, rng, max_serial);
      w.put<uint8_t>(s.shortfall ? 1 : 0).put<uint32_t>(static_cast<uint32_t>(s.segments.size()));
      if (!s.segments.empty()) {
        auto frames = dispatch_pack(s.segments, kMaxWirePayload - 64);
        if (frames.size() != 1) throw ContractError("sample reply does not fit one frame");
        w.append(frames[0].to_bytes());
      }
      return {Command::kSample, w.bytes};
    }
    case Command::kModel: {
      PayloadReader r(m.payload);
      uint8_t op = r.get<uint8_t>();
      if (op == 0) {
        bool archive = r.get<uint8_t>() != 0;
        ModelSnapshot s;
        s.digest = r.get<uint64_t>();
        auto blob = r.rest();
        s.blob.assign(blob.begin(), blob.end());
        try {
          s.version = net::read_params_header(s.blob).version;
        } catch (const FormatError& e) {
          return {Command::kAck, ack(false, 0, e.what())};
        }
        auto err = models.publish(std::move(s), archive);
        return {Command::kAck, err ? ack(false, 0, *err) : ack(true, 0)};
      }
      uint64_t version = r.get<uint64_t>();
      PayloadWriter w;
      const ModelSnapshot* s = models.find(version);
      w.put<uint8_t>(s ? 1 : 0);
      if (s) w.put<uint64_t>(s->digest).append(s->blob);
      return {Command::kModel, w.bytes};
    }
    case Command::kRegister: {
      PayloadWriter w;
      const ModelSnapshot* latest = models.latest();
      const PoolCounters& c = pool.counters();
      w.put<uint8_t>(latest ? 1 : 0).put<uint64_t>(latest ? latest->version : 0);
      w.put<uint64_t>(c.pushed).put<uint64_t>(c.evicted).put<uint64_t>(c.sampled).put<uint64_t>(c.rejected_frames);
      w.put<uint64_t>(pool.size());
      auto arch = models.archived_versions();
      w.put<uint32_t>(static_cast<uint32_t>(arch.size()));
      for (uint64_t v : arch) w.put<uint64_t>(v);
      return {Command::kRegister, w.bytes};
    }
    case Command::kAck: break;
  }
  return {Command::kAck, ack(false, 0, "unexpected command")};
}

}  // namespace

void run_pool_server(const PoolServerConfig& cfg, const std::atomic<bool>& stop) {
  Pool pool(cfg.capacity);
  ModelStore models(cfg.max_archive);
  int listener = listen_endpoint(cfg.endpoint);
  std::vector<pollfd> fds{{listener, POLLIN, 0}};
  while (!stop.load()) {
    int n = ::poll(fds.data(), fds.size(), 100);
    if (n <= 0) continue;
    if (fds[0].revents & POLLIN) {
      int c = ::accept4(listener, nullptr, nullptr, SOCK_CLOEXEC);
      if (c >= 0) fds.push_back({c, POLLIN, 0});
    }
    for (size_t i = 1; i < fds.size(); ++i) {
      if (!(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      bool drop = false;
      try {
        auto msg = read_message(fds[i].fd);
        if (!msg) {
          drop = true;
        } else {
          Reply r = handle(*msg, pool, models);
          write_message(fds[i].fd, r.command, r.payload);
        }
      } catch (const FormatError& e) {
        // A corrupted message cannot be resynchronized on a stream; answer
        // with a negative ack and drop the connection.
        pool.note_rejected();
        try {
          write_message(fds[i].fd, Command::kAck, ack(false, -1, e.what()));
        } catch (const IoError&) {
        }
        drop = true;
      } catch (const IoError&) {
        drop = true;
      }
      if (drop) {
        ::close(fds[i].fd);
        fds[i].fd = -1;
      }
    }
    fds.erase(std::remove_if(fds.begin() + 1, fds.end(), [](const pollfd& p) { return p.fd < 0; }), fds.end());
  }
  for (auto& p : fds) ::close(p.fd);
  if (cfg.endpoint.kind == Endpoint::kUnix) ::unlink(cfg.endpoint.path.c_str());
}

PoolClient::PoolClient(Endpoint ep, int connect_timeout_ms) : ep_(std::move(ep)), timeout_ms_(connect_timeout_ms) {
  fd_ = connect_endpoint(ep_, timeout_ms_);
}

PoolClient::~PoolClient() {
  if (fd_ >= 0) ::close(fd_);
}

void PoolClient::reconnect() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
  fd_ = connect_endpoint(ep_, timeout_ms_);
}

Message PoolClient::call(Command c, std::span<const uint8_t> payload) {
  if (fd_ < 0) reconnect();
  try {
    return request(fd_, c, payload);
  } catch (const IoError&) {
    reconnect();
    return request(fd_, c, payload);
  }
}

Message PoolClient::raw_request(Command c, std::span<const uint8_t> payload) { return call(c, payload); }

int PoolClient::push(const SampleFrame& frame) {
  Message m = call(Command::kPush, frame.to_bytes());
  PayloadReader r(m.payload);
  bool ok = r.get<uint8_t>() != 0;
  int32_t n = r.get<int32_t>();
  return ok ? n : -1;
}

Pool::Sample PoolClient::sample(uint32_t n, double recency_bias, uint64_t seed, uint64_t max_serial) {
  PayloadWriter w;
  w.put<uint32_t>(n).put<double>(recency_bias).put<uint64_t>(seed).put<uint64_t>(max_serial);
  Message m = call(Command::kSample, w.bytes);
  if (m.command != Command::kSample) throw IoError("unexpected reply to SAMPLE");
  PayloadReader r(m.payload);
  Pool::Sample s;
  s.shortfall = r.get<uint8_t>() != 0;
  uint32_t count = r.get<uint32_t>();
  if (count > 0) s.segments = dispatch_unpack(SampleFrame::from_bytes(r.rest()));
  if (s.segments.size() != count) throw FormatError("sample reply count mismatch");
  return s;
}

PoolInfo PoolClient::info(uint8_t role, uint32_t id) {
  PayloadWriter w;
  w.put<uint8_t>(role).put<uint32_t>(id);
  Message m = call(Command::kRegister, w.bytes);
  if (m.command != Command::kRegister) throw IoError("unexpected reply to REGISTER");
  PayloadReader r(m.payload);
  PoolInfo info;
  info.has_model = r.get<uint8_t>() != 0;
  info.latest_version = r.get<uint64_t>();
  info.counters.pushed = r.get<uint64_t>();
  info.counters.evicted = r.get<uint64_t>();
  info.counters.sampled = r.get<uint64_t>();
  info.counters.rejected_frames = r.get<uint64_t>();
  info.size = r.get<uint64_t>();
  uint32_t n = r.get<uint32_t>();
  for (uint32_t i = 0; i < n; ++i) info.archive.push_back(r.get<uint64_t>());
  return info;
}

void PoolClient::publish(const ModelSnapshot& s, bool archive) {
  PayloadWriter w;
  w.put<uint8_t>(0).put<uint8_t>(archive ? 1 : 0).put<uint64_t>(s.digest).append(s.blob);
  Message m = call(Command::kModel, w.bytes);
  PayloadReader r(m.payload);
  bool ok = r.get<uint8_t>() != 0;
  r.get<int32_t>();
  if (!ok) {
    auto rest = r.rest();
    throw std::runtime_error("model publish rejected: " + std::string(rest.begin(), rest.end()));
  }
}

std::optional<ModelSnapshot> PoolClient::fetch(uint64_t version) {
  PayloadWriter w;
  w.put<uint8_t>(1).put<uint64_t>(version);
  Message m = call(Command::kModel, w.bytes);
  if (m.command != Command::kModel) throw IoError("unexpected reply to MODEL");
  PayloadReader r(m.payload);
  if (r.get<uint8_t>() == 0) return std::nullopt;
  ModelSnapshot s;
  s.digest = r.get<uint64_t>();
  auto blob = r.rest();
  s.blob.assign(blob.begin(), blob.end());
  s.version = net::read_params_header(s.blob).version;
  return s;
}

std::string episode_csv_header() {
  std::ostringstream o;
  o << "wall_s,actor,episode,seed,model_version,opponent_version,opponent_scripted,start_tick,ticks,winner,truncated,segments,"
       "reward_0,reward_1,illegal_0,illegal_1";
  for (int s = 0; s < 2; ++s)
    for (const char* k : {"hp_point", "tower_hp_point", "money", "ep_rate", "death", "kill", "exp", "last_hit"})
      o << ",raw" << s << '_' << k;
  return o.str();
}

std::string episode_csv_row(double wall_s, uint32_t actor, const EpisodeStats& s) {
  std::ostringstream o;
  o.precision(10);
  o << wall_s << ',' << actor << ',' << s.episode_id << ',' << s.seed << ',' << s.model_version << ','
    << s.opponent_version << ',' << (s.opponent_scripted ? 1 : 0) << ',' << s.start_tick << ',' << s.ticks << ',' << (s.winner ? *s.winner : -1) << ','
    << (s.truncated ? 1 : 0) << ',' << s.segments << ',' << s.reward_sums[0] << ',' << s.reward_sums[1] << ','
    << s.illegal_actions[0] << ',' << s.illegal_actions[1];
  for (int side = 0; side < 2; ++side) {
    const auto& r = s.raw_totals[side];
    o << ',' << r.hp_point << ',' << r.tower_hp_point << ',' << r.money << ',' << r.ep_rate << ',' << r.death << ','
      << r.kill << ',' << r.exp << ',' << r.last_hit;
  }
  return o.str();
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

void run_actor(const env::Game& game, const features::FeatureExtractor& fx, const net::Network& network,
               const ActorProcessConfig& cfg, const std::atomic<bool>& stop) {
  const auto t0 = std::chrono::steady_clock::now();
  PoolClient client(cfg.pool, 30000);
  SplitMix64 rng(derive_seed(cfg.seed, 0xa000 + cfg.actor_id));
  std::map<uint64_t, net::Params> cache;
  uint64_t current = 0;
  bool have_model = false;
  std::ofstream csv;
  if (!cfg.episodes_csv.empty()) {
    bool fresh = !std::filesystem::exists(cfg.episodes_csv);
    csv.open(cfg.episodes_csv, std::ios::app);
    if (fresh) csv << episode_csv_header() << '\n';
  }
  int aborted = 0;

  auto load = [&](uint64_t version) -> const net::Params* {
    auto it = cache.find(version);
    if (it != cache.end()) return &it->second;
    auto snap = client.fetch(version);
    if (!snap) return nullptr;
    try {
      net::Params p = snap->open(network.layout());
      // Older archived versions are kept; bound the cache.
      if (cache.size() > 80) cache.erase(cache.begin());
      return &cache.emplace(snap->version, std::move(p)).first->second;
    } catch (const FormatError& e) {
      std::cerr << "actor " << cfg.actor_id << ": rejected snapshot " << version << ": " << e.what() << '\n';
      return nullptr;
    }
  };

  std::vector<learner::TrajectorySegment> outbox;
  auto flush = [&] {
    if (outbox.empty()) return;
    for (const SampleFrame& f : dispatch_pack(outbox))
      if (client.push(f) < 0) std::cerr << "actor " << cfg.actor_id << ": frame rejected by pool\n";
    outbox.clear();
  };

  for (uint64_t episode = 0; !stop.load(); ++episode) {
    if (cfg.max_episodes > 0 && episode >= static_cast<uint64_t>(cfg.max_episodes)) break;
    PoolInfo info = client.info(kRoleActor, cfg.actor_id);
    while (!info.has_model && !stop.load()) {
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
      info = client.info(kRoleActor, cfg.actor_id);
    }
    if (stop.load()) break;
    if (!have_model || info.latest_version > current) {
      if (load(info.latest_version)) {
        current = info.latest_version;
        have_model = true;
      }
    }
    if (!have_model) continue;
    const net::Params* learner_params = &cache.at(current);
    const net::Params* opponent = learner_params;
    bool mirror = true;
    bool vs_scripted = cfg.explore.scripted_prob > 0 && rng.bernoulli(cfg.explore.scripted_prob);
    if (vs_scripted) {
      mirror = false;
    } else if (!info.archive.empty() && !rng.bernoulli(cfg.explore.latest_prob)) {
      uint64_t v = info.archive[rng.below(info.archive.size())];
      if (v != current) {
        if (const net::Params* p = load(v)) {
          opponent = p;
          mirror = false;
        }
      }
    }
    // Copy: the cache may be trimmed by later loads.
    net::Params mine = *learner_params, theirs = *opponent;

    EpisodeSpec spec;
    spec.game = &game;
    spec.features = &fx;
    spec.network = &network;
    spec.learner = &mine;
    spec.opponent = vs_scripted ? nullptr : &theirs;
    spec.opponent_learns = mirror;
    spec.seed = derive_seed(cfg.seed, (static_cast<uint64_t>(cfg.actor_id) << 32) + episode);
    spec.actor_id = cfg.actor_id;
    spec.episode_id = episode;
    try {
      EpisodeStats st = play_episode(spec, cfg.explore, [&](learner::TrajectorySegment&& s) {
        outbox.push_back(std::move(s));
        if (static_cast<int>(outbox.size()) >= cfg.dispatch_segments) flush();
      });
      flush();
      if (csv) csv << episode_csv_row(seconds_since(t0), cfg.actor_id, st) << std::endl;
    } catch (const ContractError& e) {
      ++aborted;
      outbox.clear();
      std::cerr << "actor " << cfg.actor_id << ": episode " << episode << " aborted (" << aborted
                << " total): " << e.what() << '\n';
    }
  }
}

std::string checkpoint_path(const std::string& run_dir, uint64_t version) {
  char name[64];
  std::snprintf(name, sizeof name, "snapshot_%06llu.bin", static_cast<unsigned long long>(version));
  return (std::filesystem::path(run_dir) / "checkpoints" / name).string();
}


uint64_t run_learner_service(const env::Game& game, const features::FeatureExtractor& fx,
                             const net::Network& network, const learner::PPOConfig& ppo,
                             const LearnerServiceConfig& cfg, const std::atomic<bool>& stop) {
  namespace fs = std::filesystem;
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(fs::path(cfg.run_dir) / "checkpoints");
  PoolClient client(cfg.pool, 30000);
  learner::Learner learner(network, network.init(cfg.seed), ppo);

  std::ofstream metrics(fs::path(cfg.run_dir) / "metrics.csv");
  metrics << "wall_s,update,version,samples,samples_per_s,mean_staleness,max_staleness,pool_size,pool_pushed,"
          << learner::diagnostics_csv_header() << '\n';
  std::ofstream probes(fs::path(cfg.run_dir) / "probes.csv");
  probes << "wall_s,update,version,games,win_rate_vs_scripted,elo_vs_scripted\n";

  auto publish = [&](bool archive) {
    net::Params snap = learner.snapshot();
    client.publish(ModelSnapshot::make(snap, network.layout()), archive);
  };
  auto checkpoint = [&](int update) {
    net::Params snap = learner.snapshot();
    net::save_params_file(checkpoint_path(cfg.run_dir, snap.version), snap, network.layout());
    if (cfg.probe_games > 0) {
      auto [wr, elo] = eval::probe_vs_scripted(game, fx, network, snap, cfg.probe_games, derive_seed(cfg.seed, 0x9b0b),
                                                 cfg.probe_temperature);
      probes << seconds_since(t0) << ',' << update << ',' << snap.version << ',' << cfg.probe_games << ',' << wr
             << ',' << elo << std::endl;
    }
  };

  publish(true);
  checkpoint(0);

  PoolInfo info = client.info(kRoleLearner, 0);
  while (info.counters.pushed < cfg.warmup_segments && !stop.load()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    info = client.info(kRoleLearner, 0);
  }
  uint64_t samples = 0;
  int update = 0;
  for (; update < cfg.max_updates && !stop.load(); ++update) {
    if (cfg.max_seconds > 0 && seconds_since(t0) > cfg.max_seconds) break;
    // The first batch is drawn from the first `warmup` arrivals only, so a
    // single-actor run reproduces its first update exactly.
    // Falls back to the whole pool if fast actors already evicted them.
    uint64_t max_serial = update == 0 ? cfg.warmup_segments : 0;
    Pool::Sample batch = client.sample(static_cast<uint32_t>(ppo.batch_segments), cfg.recency_bias,
                                       derive_seed(cfg.seed, 0x5a00000 + update), max_serial);
    if (batch.segments.empty() && max_serial > 0)
      batch = client.sample(static_cast<uint32_t>(ppo.batch_segments), cfg.recency_bias,
                            derive_seed(cfg.seed, 0x5a00000 + update));
    if (batch.segments.empty()) {
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
      --update;
      continue;
    }
    learner::UpdateStats st = learner.update(batch.segments, cfg.shards);
    for (const auto& s : batch.segments) samples += s.size();
    info = client.info(kRoleLearner, 0);
    double wall = seconds_since(t0);
    metrics << wall << ',' << update + 1 << ',' << st.version << ',' << samples << ',' << samples / std::max(wall, 1e-9)
            << ',' << st.mean_staleness << ',' << st.max_staleness << ',' << info.size << ',' << info.counters.pushed
            << ',' << learner::diagnostics_csv_row(st.diag) << '\n';
    bool archive = cfg.archive_every > 0 && (update + 1) % cfg.archive_every == 0;
    if ((update + 1) % std::max(1, cfg.publish_every) == 0 || archive) publish(archive);
    if (cfg.checkpoint_every > 0 && (update + 1) % cfg.checkpoint_every == 0) {
      metrics.flush();
      checkpoint(update + 1);
    }
  }
  if (cfg.checkpoint_every <= 0 || update % cfg.checkpoint_every != 0) checkpoint(update);
  metrics.flush();
  return learner.version();
}

}  // namespace moba::runtime
