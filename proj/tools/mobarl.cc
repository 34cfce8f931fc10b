#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <thread>

#include "moba/common/error.h"
#include "moba/eval/ablation.h"
#include "moba/eval/elo.h"
#include "moba/runtime/services.h"
#include "plot.h"
#include "run_config.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace moba;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitComponent = 3;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop.store(true); }

void install_stop_handlers() {
  struct sigaction sa {};
  sa.sa_handler = on_signal;
  sigemptyset(&sa.sa_mask);
  sigaction(SIGTERM, &sa, nullptr);
  sigaction(SIGINT, &sa, nullptr);
  signal(SIGPIPE, SIG_IGN);
}

void write_json(const fs::path& path, const json& j) { std::ofstream(path) << j.dump(2) << '\n'; }

// A config file plus `section.key=value` overrides from the command line.
cli::RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  if (!fs::exists(path)) throw ConfigError("config", "no such file " + path);
  KvConfig kv = KvConfig::load(path);
  for (const auto& o : overrides) {
    auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set", "expected section.key=value, got " + o);
    kv.set(o.substr(0, eq), o.substr(eq + 1));
  }
  return cli::RunConfig::from_kv(kv);
}

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  void add(CLI::App* app, bool required = true) {
    app->add_option("-c,--config", config, "Run config file (sectioned key = value)")->required(required);
    app->add_option("--set", overrides, "Override a config key, e.g. --set ppo.learning_rate=0.001");
  }
};

runtime::Endpoint endpoint_for(const cli::RunConfig& cfg, const fs::path& run_dir) {
  if (!cfg.runtime.endpoint.empty()) return runtime::Endpoint::parse(cfg.runtime.endpoint);
  return runtime::Endpoint::parse("unix:" + fs::absolute(run_dir / "pool.sock").string());
}

// ---- hidden component entry points (spawned by `train`) ----

int serve_pool(const cli::RunConfig& cfg, const fs::path& run_dir) {
  runtime::PoolServerConfig pc;
  pc.endpoint = endpoint_for(cfg, run_dir);
  pc.capacity = cfg.runtime.pool_capacity;
  runtime::run_pool_server(pc, g_stop);
  return 0;
}

int run_actor(const cli::RunConfig& cfg, const fs::path& run_dir, uint32_t id) {
  env::Game game(cfg.env);
  features::FeatureExtractor fx(game);
  net::Network network(cfg.net);
  runtime::ActorProcessConfig ac;
  ac.pool = endpoint_for(cfg, run_dir);
  ac.actor_id = id;
  ac.seed = cfg.runtime.seed;
  ac.explore = cfg.explore;
  ac.dispatch_segments = cfg.runtime.dispatch_segments;
  ac.episodes_csv = (run_dir / ("episodes_" + std::to_string(id) + ".csv")).string();
  runtime::run_actor(game, fx, network, ac, g_stop);
  return 0;
}

int run_learner(const cli::RunConfig& cfg, const fs::path& run_dir) {
  env::Game game(cfg.env);
  features::FeatureExtractor fx(game);
  net::Network network(cfg.net);
  runtime::LearnerServiceConfig lc;
  lc.pool = endpoint_for(cfg, run_dir);
  lc.seed = cfg.runtime.seed;
  lc.shards = cfg.runtime.shards;
  lc.max_updates = cfg.runtime.max_updates;
  lc.max_seconds = cfg.runtime.max_seconds;
  lc.warmup_segments = cfg.runtime.warmup_segments;
  lc.recency_bias = cfg.runtime.recency_bias;
  lc.publish_every = cfg.runtime.publish_every;
  lc.archive_every = cfg.runtime.archive_every;
  lc.checkpoint_every = cfg.runtime.checkpoint_every;
  lc.probe_games = cfg.runtime.probe_games;
  lc.probe_temperature = cfg.eval.temperature;
  lc.run_dir = run_dir.string();
  uint64_t v = runtime::run_learner_service(game, fx, network, cfg.ppo, lc, g_stop);
  std::cout << "learner finished at version " << v << '\n';
  return 0;
}

// ---- train: supervisor over pool, actors and learner processes ----

pid_t spawn(const std::vector<std::string>& args, const fs::path& log) {
  pid_t pid = fork();
  if (pid < 0) throw std::runtime_error("fork failed");
  if (pid == 0) {
    FILE* f = std::fopen(log.c_str(), "a");
    if (f) {
      dup2(fileno(f), STDOUT_FILENO);
      dup2(fileno(f), STDERR_FILENO);
    }
    std::vector<char*> argv;
    for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    execv("/proc/self/exe", argv.data());
    _exit(127);
  }
  return pid;
}

int cmd_train(const cli::RunConfig& cfg, const fs::path& run_dir) {
  fs::create_directories(run_dir / "logs");
  const fs::path cfg_copy = run_dir / "config.cfg";
  std::ofstream(cfg_copy) << cfg.kv.to_string();
  const auto t0 = std::chrono::steady_clock::now();
  const std::string dir = fs::absolute(run_dir).string();
  const std::string cfg_path = fs::absolute(cfg_copy).string();
  auto component = [&](const std::string& sub) {
    return std::vector<std::string>{"mobarl", sub, "--config", cfg_path, "--run-dir", dir};
  };

  std::map<pid_t, std::string> children;
  pid_t pool = spawn(component("serve-pool"), run_dir / "logs" / "pool.log");
  children[pool] = "pool";
  for (int i = 0; i < cfg.runtime.actors; ++i) {
    auto args = component("run-actor");
    args.insert(args.end(), {"--id", std::to_string(i)});
    pid_t a = spawn(args, run_dir / "logs" / ("actor_" + std::to_string(i) + ".log"));
    children[a] = "actor " + std::to_string(i);
  }
  pid_t learner = spawn(component("run-learner"), run_dir / "logs" / "learner.log");
  children[learner] = "learner";
  std::cout << "run " << dir << ": pool, " << cfg.runtime.actors << " actors, learner (" << cfg.runtime.shards
            << " shards)" << std::endl;

  int exit_code = 0;
  std::string failure;
  bool shutting_down = false;
  auto stop_all = [&](const std::vector<pid_t>& order) {
    for (pid_t p : order)
      if (children.count(p)) kill(p, SIGTERM);
  };
  auto deadline = std::chrono::steady_clock::time_point::max();
  while (!children.empty()) {
    int status = 0;
    pid_t p = waitpid(-1, &status, WNOHANG);
    if (p > 0) {
      std::string name = children[p];
      children.erase(p);
      bool clean = WIFEXITED(status) && WEXITSTATUS(status) == 0;
      if (!clean && !shutting_down) {
        failure = name + (WIFEXITED(status) ? " exited with code " + std::to_string(WEXITSTATUS(status))
                                            : " killed by signal " + std::to_string(WTERMSIG(status)));
        exit_code = kExitComponent;
      }
      if (!shutting_down && (p == learner || !clean)) {
        shutting_down = true;
        std::vector<pid_t> order;
        for (auto& [pid, n] : children)
          if (pid != pool) order.push_back(pid);
        order.push_back(pool);
        stop_all(order);
        deadline = std::chrono::steady_clock::now() + std::chrono::seconds(30);
      }
      continue;
    }
    if (g_stop.load() && !shutting_down) {
      shutting_down = true;
      std::vector<pid_t> order;
      for (auto& [pid, n] : children) order.push_back(pid);
      stop_all(order);
      deadline = std::chrono::steady_clock::now() + std::chrono::seconds(30);
    }
    if (std::chrono::steady_clock::now() > deadline)
      for (auto& [pid, n] : children) kill(pid, SIGKILL);
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  fs::remove(run_dir / "pool.sock");

  json summary;
  summary["run_dir"] = dir;
  summary["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  summary["actors"] = cfg.runtime.actors;
  summary["shards"] = cfg.runtime.shards;
  std::vector<std::string> checkpoints;
  if (fs::exists(run_dir / "checkpoints"))
    for (const auto& e : fs::directory_iterator(run_dir / "checkpoints")) checkpoints.push_back(e.path().string());
  std::sort(checkpoints.begin(), checkpoints.end());
  summary["checkpoints"] = checkpoints;
  summary["status"] = exit_code == 0 ? "ok" : "component_failure";
  if (!failure.empty()) summary["failure"] = failure;
  write_json(run_dir / "summary.json", summary);
  if (exit_code) std::cerr << "component failure: " << failure << '\n';
  std::cout << summary.dump(2) << '\n';
  return exit_code;
}

// ---- eval ----

int cmd_eval(const cli::RunConfig& cfg, const std::vector<std::string>& snapshots, const std::string& baseline,
             int games, const fs::path& out) {
  if (snapshots.empty()) throw ConfigError("--snapshot", "at least one snapshot is required");
  if (baseline != "scripted" && baseline != "random" && baseline != "none")
    throw ConfigError("--baseline", "scripted, random or none");
  fs::create_directories(out);
  env::Game game(cfg.env);
  features::FeatureExtractor fx(game);
  net::Network network(cfg.net);
  std::vector<net::Params> params;
  for (const auto& s : snapshots) {
    if (!fs::exists(s)) throw ConfigError("--snapshot", "no such file " + s);
    params.push_back(net::load_params_file(s, network.layout()));
  }
  std::vector<eval::Participant> ps;
  for (size_t i = 0; i < params.size(); ++i) {
    const net::Params& p = params[i];
    std::string id = fs::path(snapshots[i]).stem().string();
    if (i > 0 && snapshots[i] == snapshots[0]) id += "#" + std::to_string(i);  // mirrored copy
    ps.push_back({id, p.version, [&, t = cfg.eval.temperature] {
                    return std::make_unique<eval::NetAgent>(game, fx, network, p, t);
                  }});
  }
  if (baseline == "scripted") ps.push_back({"scripted", 0, [&] { return std::make_unique<eval::ScriptedAgent>(game); }});
  if (baseline == "random") ps.push_back({"random", 0, [&] { return std::make_unique<eval::RandomAgent>(game); }});
  if (ps.size() < 2) throw ConfigError("--snapshot", "need two participants (add a snapshot or a baseline)");

  json summary;
  summary["games_requested"] = games;
  std::vector<eval::MatchResult> matches;
  if (ps.size() == 2) {
    matches = eval::head_to_head(game, ps[0], ps[1], games, cfg.eval.seed);
    eval::WinStats w = eval::tally(matches, ps[0].id);
    auto [lo, hi] = eval::wilson_interval(w.wins + 0.5 * w.draws, w.games, 1.959963984540054);
    auto [blo, bhi] = eval::binomial_acceptance(w.games, 0.99);
    summary["a"] = ps[0].id;
    summary["b"] = ps[1].id;
    summary["games"] = w.games;
    summary["wins"] = w.wins;
    summary["losses"] = w.losses;
    summary["draws"] = w.draws;
    summary["win_rate"] = w.win_rate();
    summary["wilson95"] = {lo, hi};
    summary["binomial99_wins_band"] = {blo, bhi};
    std::cout << ps[0].id << " vs " << ps[1].id << ": " << w.wins << "W " << w.losses << "L " << w.draws
              << "D  win rate " << w.win_rate() << '\n';
  } else {
    eval::TournamentConfig tc;
    tc.games_per_pair = games;
    tc.seed = cfg.eval.seed;
    tc.passes = 3;
    eval::TournamentResult r = eval::run_tournament(game, ps, tc);
    matches = r.matches;
    std::ofstream elo(out / "elo.csv");
    elo << "index,id,version,rating,games\n";
    json ratings = json::array();
    for (size_t i = 0; i < ps.size(); ++i) {
      elo << i << ',' << ps[i].id << ',' << ps[i].version << ',' << r.table.rating(ps[i].id) << ','
          << r.table.games(ps[i].id) << '\n';
      ratings.push_back({{"id", ps[i].id}, {"rating", r.table.rating(ps[i].id)}});
      std::cout << ps[i].id << "  Elo " << r.table.rating(ps[i].id) << '\n';
    }
    summary["ratings"] = ratings;
    summary["games"] = matches.size();
  }
  std::ofstream csv(out / "matches.csv");
  csv << eval::match_csv_header() << '\n';
  for (const auto& m : matches) csv << eval::match_csv_row(m) << '\n';
  write_json(out / "summary.json", summary);
  return 0;
}

// ---- ablate ----

int cmd_ablate(const cli::RunConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  std::ofstream(out / "config.cfg") << cfg.kv.to_string();
  std::ofstream log(out / "ablation.log");
  eval::AblationReport report = eval::run_ablation(cfg.env, cfg.ablation, [&](const std::string& line) {
    std::cout << line << std::endl;
    log << line << std::endl;
  });
  std::ofstream csv(out / "ablation.csv");
  csv << eval::ablation_csv_header() << '\n';
  std::ofstream probes(out / "probes.csv");
  probes << "arm,update,win_rate_vs_scripted,elo_vs_scripted\n";
  json arms = json::array();
  for (const auto& r : report.arms) {
    csv << eval::ablation_csv_row(r) << '\n';
    for (const auto& [u, p] : r.probes) probes << r.arm.name << ',' << u << ',' << p.win_rate << ',' << p.elo << '\n';
    json a;
    a["arm"] = r.arm.name;
    a["updates_to_threshold"] = r.updates_to_threshold ? json(*r.updates_to_threshold) : json(nullptr);
    a["selected_update"] = r.selected_update;
    a["win_rate_vs_reference"] = r.vs_reference.win_rate();
    a["games_vs_reference"] = r.vs_reference.games;
    a["ci95"] = {r.win_rate_ci.first, r.win_rate_ci.second};
    arms.push_back(a);
  }
  for (const auto& r : report.arms) {
    net::NetConfig nc = cfg.ablation.net;
    runtime::ExplorationConfig ex;
    r.arm.apply(nc, ex);
    std::string file = r.arm.name;
    std::replace(file.begin(), file.end(), '+', '_');
    net::save_params_file((out / ("arm_" + file + ".bin")).string(), r.selected, net::Network(nc).layout());
  }
  write_json(out / "summary.json", {{"reference", report.arms.front().arm.name}, {"arms", arms}});
  return 0;
}

// ---- bench ----

int cmd_bench(const cli::RunConfig& cfg, double seconds, int actors, const fs::path& out) {
  fs::create_directories(out);
  env::Game game(cfg.env);
  features::FeatureExtractor fx(game);
  net::Network network(cfg.net);
  json report;

  // Environment steps with scripted play on both sides.
  {
    auto t0 = std::chrono::steady_clock::now();
    uint64_t steps = 0;
    uint64_t seed = 1;
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
    while (elapsed() < seconds) {
      env::WorldState s = game.reset(seed++, env::StartMode::kZeroStart, true);
      while (!s.terminal && (steps % 256 != 0 || elapsed() < seconds)) {
        s = game.step(s, {game.scripted_bot_action(s, 0), game.scripted_bot_action(s, 1)}).state;
        ++steps;
      }
    }
    report["env_steps_per_s"] = steps / std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  // Actor threads pushing into an in-process pool server.
  {
    std::atomic<bool> stop{false};
    runtime::PoolServerConfig pc;
    pc.endpoint = runtime::Endpoint::parse("unix:" + fs::absolute(out / "bench.sock").string());
    pc.capacity = cfg.runtime.pool_capacity;
    std::thread server([&] { runtime::run_pool_server(pc, stop); });
    runtime::PoolClient client(pc.endpoint);
    net::Params init = network.init(cfg.runtime.seed);
    client.publish(runtime::ModelSnapshot::make(init, network.layout()), true);
    uint64_t before = client.info(runtime::kRoleObserver, 0).counters.pushed;
    auto t0 = std::chrono::steady_clock::now();
    std::vector<std::thread> threads;
    std::atomic<bool> actor_stop{false};
    for (int i = 0; i < actors; ++i)
      threads.emplace_back([&, i] {
        runtime::ActorProcessConfig ac;
        ac.pool = pc.endpoint;
        ac.actor_id = static_cast<uint32_t>(i);
        ac.seed = cfg.runtime.seed;
        ac.explore = cfg.explore;
        ac.explore.rollout_ticks = 600;
        ac.dispatch_segments = 1;
        runtime::run_actor(game, fx, network, ac, actor_stop);
      });
    std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
    actor_stop = true;
    for (auto& t : threads) t.join();
    double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    uint64_t pushed = client.info(runtime::kRoleObserver, 0).counters.pushed - before;
    report["actors"] = actors;
    report["pool_segments_per_s"] = pushed / dt;
    report["pool_samples_per_s"] = pushed * static_cast<double>(cfg.explore.window) / dt;
    stop = true;
    server.join();
    fs::remove(out / "bench.sock");
  }

  // Learner updates on self-play segments.
  {
    std::vector<learner::TrajectorySegment> segs;
    net::Params init = network.init(cfg.runtime.seed);
    runtime::EpisodeSpec spec;
    spec.game = &game;
    spec.features = &fx;
    spec.network = &network;
    spec.learner = &init;
    spec.opponent = &init;
    spec.opponent_learns = true;
    runtime::ExplorationConfig ex = cfg.explore;
    ex.rollout_ticks = 400;
    for (uint64_t s = 1; segs.size() < static_cast<size_t>(cfg.ppo.batch_segments); ++s) {
      spec.seed = s;
      runtime::play_episode(spec, ex, [&](learner::TrajectorySegment&& x) { segs.push_back(std::move(x)); });
    }
    segs.resize(cfg.ppo.batch_segments);
    learner::Learner l(network, init, cfg.ppo);
    auto t0 = std::chrono::steady_clock::now();
    int updates = 0;
    do {
      l.update(segs, cfg.runtime.shards);
      ++updates;
    } while (std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() < seconds);
    double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    size_t steps = 0;
    for (const auto& s : segs) steps += s.size();
    report["learner_updates_per_s"] = updates / dt;
    report["learner_samples_per_s"] = updates * static_cast<double>(steps) / dt;
  }
  write_json(out / "bench.json", report);
  std::cout << report.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mobarl: desk-scale MOBA 1v1 reinforcement learning (train, eval, ablate, plot, bench)"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  Common common;
  std::string run_dir, out_dir;

  auto* train = app.add_subcommand("train", "Launch pool, actors and learner processes; write a run directory");
  common.add(train);
  train->add_option("-o,--out", run_dir, "Run directory")->required();

  std::vector<std::string> snapshots;
  std::string baseline = "scripted";
  int games = 0;
  auto* ev = app.add_subcommand("eval", "Evaluate snapshots against each other or a baseline");
  common.add(ev);
  ev->add_option("-s,--snapshot", snapshots, "Snapshot file (repeatable; the same file twice plays a mirror match)")
      ->required();
  ev->add_option("-b,--baseline", baseline, "scripted, random or none")->capture_default_str();
  ev->add_option("-n,--games", games, "Games per pair (default eval.games)");
  ev->add_option("-o,--out", out_dir, "Output directory")->required();

  auto* ablate = app.add_subcommand("ablate", "Train every ablation arm on equal budgets and compare");
  common.add(ablate);
  ablate->add_option("-o,--out", out_dir, "Output directory")->required();

  auto* plot = app.add_subcommand("plot", "Emit SVG charts and data series from a run directory");
  plot->add_option("-r,--run", run_dir, "Run directory")->required();
  plot->add_option("-o,--out", out_dir, "Output directory (default <run>/plots)");

  double bench_seconds = 5;
  int bench_actors = 2;
  auto* bench = app.add_subcommand("bench", "Measure env steps/s, pool ingest samples/s and learner updates/s");
  common.add(bench);
  bench->add_option("--seconds", bench_seconds, "Seconds per phase")->capture_default_str();
  bench->add_option("--actors", bench_actors, "Actor threads for the ingest phase")->capture_default_str();
  bench->add_option("-o,--out", out_dir, "Output directory")->required();

  uint32_t actor_id = 0;
  auto hidden = [&](const char* name) {
    auto* c = app.add_subcommand(name)->group("");
    common.add(c);
    c->add_option("--run-dir", run_dir)->required();
    return c;
  };
  auto* serve = hidden("serve-pool");
  auto* actor = hidden("run-actor");
  actor->add_option("--id", actor_id)->required();
  auto* learn = hidden("run-learner");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    install_stop_handlers();
    if (plot->parsed()) {
      auto names = cli::plot_run(run_dir, out_dir.empty() ? fs::path(run_dir) / "plots" : fs::path(out_dir));
      for (const auto& n : names) std::cout << n << ".svg\n";
      return 0;
    }
    cli::RunConfig cfg = load_config(common.config, common.overrides);
    if (train->parsed()) return cmd_train(cfg, run_dir);
    if (ev->parsed()) return cmd_eval(cfg, snapshots, baseline, games > 0 ? games : cfg.eval.games, out_dir);
    if (ablate->parsed()) return cmd_ablate(cfg, out_dir);
    if (bench->parsed()) return cmd_bench(cfg, bench_seconds, bench_actors, out_dir);
    if (serve->parsed()) return serve_pool(cfg, run_dir);
    if (actor->parsed()) return run_actor(cfg, run_dir, actor_id);
    if (learn->parsed()) return run_learner(cfg, run_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitComponent;
  }
  return 0;
}
