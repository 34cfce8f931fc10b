#include "moba/eval/ablation.h"

#include <chrono>
#include <memory>
#include <sstream>

#include "moba/common/error.h"

namespace moba::eval {

AblationArm AblationArm::parse(const std::string& spec) {
  AblationArm a;
  a.name = spec;
  std::stringstream ss(spec);
  std::string tok;
  bool first = true;
  while (std::getline(ss, tok, '+')) {
    if (first) {
      if (tok == "Full") a.mask = a.attention = a.lstm = true;
      else if (tok != "Base") throw ConfigError("ablation.arms", "arm must start with Base or Full: " + spec);
      first = false;
    } else if (tok == "AM") {
      a.mask = true;
    } else if (tok == "TA") {
      a.attention = true;
    } else if (tok == "LSTM") {
      a.lstm = true;
    } else if (tok == "RIF") {
      a.start_mode = env::StartMode::kRandomInitialFrame;
    } else if (tok.rfind("PR", 0) == 0) {
      try {
        a.rollout_ticks = std::stoi(tok.substr(2));
      } catch (const std::exception&) {
        a.rollout_ticks = 0;
      }
      if (a.rollout_ticks <= 0) throw ConfigError("ablation.arms", "PR needs a positive tick count: " + spec);
    } else {
      throw ConfigError("ablation.arms", "unknown toggle '" + tok + "' in " + spec);
    }
  }
  if (first) throw ConfigError("ablation.arms", "empty arm");
  return a;
}

void AblationArm::apply(net::NetConfig& net, runtime::ExplorationConfig& explore) const {
  net.use_mask = mask;
  net.use_attention = attention;
  net.use_lstm = lstm;
  explore.rollout_ticks = rollout_ticks;
  explore.start_mode = start_mode;
}

const ArmReport* AblationReport::find(const std::string& name) const {
  for (const auto& a : arms)
    if (a.arm.name == name) return &a;
  return nullptr;
}

AblationReport run_ablation(const env::EnvConfig& env_cfg, const AblationConfig& cfg, const AblationLog& log) {
  if (cfg.arms.empty()) throw ConfigError("ablation.arms", "no arms");
  if (cfg.probe_every <= 0 || cfg.probe_games <= 0) throw ConfigError("ablation.probe_games", "must be positive");
  env::Game game(env_cfg);
  features::FeatureExtractor fx(game);
  std::vector<std::unique_ptr<net::Network>> networks;
  AblationReport report;

  for (const auto& arm : cfg.arms) {
    net::NetConfig nc = cfg.net;
    runtime::TrainerConfig tc = cfg.trainer;
    arm.apply(nc, tc.explore);
    networks.push_back(std::make_unique<net::Network>(nc));
    const net::Network& network = *networks.back();

    ArmReport r;
    r.arm = arm;
    const auto t0 = std::chrono::steady_clock::now();
    runtime::Trainer trainer(game, fx, network, cfg.ppo, tc);
    double best = -1e300;
    auto probe = [&](int update, const net::Params& snap) {
      Probe p = probe_vs_scripted(game, fx, network, snap, cfg.probe_games, derive_seed(cfg.eval_seed, 0x9b0b),
                                  cfg.probe_temperature);
      r.probes.emplace_back(update, p);
      if (!r.updates_to_threshold && p.elo >= cfg.elo_threshold) r.updates_to_threshold = update;
      if (!cfg.select_best_probe || p.elo > best) {
        best = p.elo;
        r.selected_update = update;
        r.selected = snap;
      }
      if (log) {
        std::ostringstream os;
        os << arm.name << " update " << update << " win_rate " << p.win_rate << " elo " << p.elo;
        log(os.str());
      }
    };
    trainer.run([&](const runtime::TrainerProgress& pr, const learner::UpdateStats&) {
      if (pr.update % cfg.probe_every == 0 || pr.update == tc.updates) probe(pr.update, trainer.snapshot());
    });
    r.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.arms.push_back(std::move(r));
  }

  const ArmReport& ref = report.arms.front();
  const net::Network& ref_net = *networks.front();
  for (size_t i = 1; i < report.arms.size(); ++i) {
    ArmReport& r = report.arms[i];
    const net::Network& network = *networks[i];
    Participant me{r.arm.name, r.selected.version, [&] {
                     return std::make_unique<NetAgent>(game, fx, network, r.selected, cfg.probe_temperature);
                   }};
    Participant base{ref.arm.name, ref.selected.version, [&] {
                       return std::make_unique<NetAgent>(game, fx, ref_net, ref.selected, cfg.probe_temperature);
                     }};
    r.vs_reference = tally(head_to_head(game, me, base, cfg.games_vs_reference, cfg.eval_seed), r.arm.name);
    r.win_rate_ci = wilson_interval(r.vs_reference.wins + 0.5 * r.vs_reference.draws, r.vs_reference.games,
                                    cfg.confidence_z);
    if (log) {
      std::ostringstream os;
      os << r.arm.name << " vs " << ref.arm.name << ": " << r.vs_reference.wins << "W " << r.vs_reference.losses
         << "L " << r.vs_reference.draws << "D, win rate " << r.vs_reference.win_rate() << " CI ["
         << r.win_rate_ci.first << ", " << r.win_rate_ci.second << "]";
      log(os.str());
    }
  }
  return report;
}

std::string ablation_csv_header() {
  return "arm,mask,attention,lstm,rollout_ticks,start_mode,updates_to_threshold,selected_update,final_elo,"
         "train_seconds,games_vs_reference,wins,losses,draws,win_rate,ci_low,ci_high";
}

std::string ablation_csv_row(const ArmReport& r) {
  std::ostringstream os;
  os << r.arm.name << ',' << r.arm.mask << ',' << r.arm.attention << ',' << r.arm.lstm << ',' << r.arm.rollout_ticks
     << ',' << (r.arm.start_mode == env::StartMode::kZeroStart ? "ZS" : "RIF") << ','
     << (r.updates_to_threshold ? std::to_string(*r.updates_to_threshold) : "") << ',' << r.selected_update << ','
     << (r.probes.empty() ? 0.0 : r.probes.back().second.elo) << ',' << r.train_seconds << ','
     << r.vs_reference.games << ',' << r.vs_reference.wins << ',' << r.vs_reference.losses << ','
     << r.vs_reference.draws << ',' << r.vs_reference.win_rate() << ',' << r.win_rate_ci.first << ','
     << r.win_rate_ci.second;
  return os.str();
}

}  // namespace moba::eval
