#include "moba/eval/elo.h"

#include <algorithm>
#include <cmath>

#include "moba/common/error.h"
#include "moba/common/fnv.h"

namespace moba::eval {

double expected_score(double r_a, double r_b) { return 1.0 / (1.0 + std::pow(10.0, (r_b - r_a) / 400.0)); }

void EloTable::add(const std::string& id, double rating) { entries_[id] = Entry{rating, 0}; }

double EloTable::rating(const std::string& id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw ContractError("unknown Elo participant " + id);
  return it->second.rating;
}

int EloTable::games(const std::string& id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw ContractError("unknown Elo participant " + id);
  return it->second.games;
}

void EloTable::update(const std::string& a, const std::string& b, double score_a, double k) {
  auto ia = entries_.find(a), ib = entries_.find(b);
  if (ia == entries_.end() || ib == entries_.end()) throw ContractError("update_elo: unknown participant");
  if (score_a != 0.0 && score_a != 0.5 && score_a != 1.0) throw ContractError("update_elo: score must be 0, 0.5 or 1");
  double ea = expected_score(ia->second.rating, ib->second.rating);
  double delta = k * (score_a - ea);
  ia->second.rating += delta;
  ib->second.rating -= delta;
  ++ia->second.games;
  ++ib->second.games;
}

double EloTable::rating_sum() const {
  double s = 0;
  for (const auto& [id, e] : entries_) s += e.rating;
  return s;
}

std::vector<std::string> EloTable::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, e] : entries_) out.push_back(id);
  return out;
}

std::vector<MatchResult> head_to_head(const env::Game& game, const Participant& a, const Participant& b, int n,
                                      uint64_t seed, const MatchOptions& opt) {
  auto agent_a = a.make();
  auto agent_b = b.make();
  std::vector<MatchResult> out;
  for (int g = 0; g < n; ++g) {
    uint64_t s = derive_seed(seed, static_cast<uint64_t>(g));
    MatchResult m = play_match(game, *agent_a, *agent_b, s, g % 2, opt);
    m.a = a.id;
    m.b = b.id;
    m.version_a = a.version;
    m.version_b = b.version;
    out.push_back(m);
  }
  return out;
}

TournamentResult run_tournament(const env::Game& game, std::vector<Participant> participants,
                                const TournamentConfig& cfg) {
  if (participants.size() < 2) throw ContractError("run_tournament needs at least 2 participants");
  std::sort(participants.begin(), participants.end(), [](const auto& x, const auto& y) { return x.id < y.id; });
  TournamentResult r;
  for (const auto& p : participants) {
    if (r.table.has(p.id)) throw ContractError("duplicate participant " + p.id);
    r.table.add(p.id);
  }
  for (size_t i = 0; i < participants.size(); ++i)
    for (size_t j = i + 1; j < participants.size(); ++j) {
      uint64_t pair_seed = fnv1a64(participants[i].id + "|" + participants[j].id, cfg.seed);
      auto games = head_to_head(game, participants[i], participants[j], cfg.games_per_pair, pair_seed, cfg.match);
      r.matches.insert(r.matches.end(), games.begin(), games.end());
    }
  std::vector<MatchResult> ordered = r.matches;
  std::sort(ordered.begin(), ordered.end(), [](const MatchResult& x, const MatchResult& y) {
    return std::tie(x.a, x.b, x.seed) < std::tie(y.a, y.b, y.seed);
  });
  for (int pass = 0; pass < std::max(1, cfg.passes); ++pass)
    for (const auto& m : ordered) r.table.update(m.a, m.b, m.score_a(), cfg.k);
  return r;
}

WinStats tally(const std::vector<MatchResult>& matches, const std::string& id) {
  WinStats w;
  for (const auto& m : matches) {
    int me = m.a == id ? 0 : m.b == id ? 1 : -1;
    if (me < 0) continue;
    ++w.games;
    if (m.winner < 0) ++w.draws;
    else if (m.winner == me) ++w.wins;
    else ++w.losses;
  }
  return w;
}

TimeToDefeat time_to_defeat(const env::Game& game, const Participant& model, const Participant& baseline, int n,
                            uint64_t seed) {
  TimeToDefeat t;
  std::vector<double> lengths;
  for (const auto& m : head_to_head(game, model, baseline, n, seed)) {
    ++t.games;
    if (m.winner == 0) lengths.push_back(m.ticks);
  }
  t.wins = static_cast<int>(lengths.size());
  if (lengths.empty()) throw ContractError("time_to_defeat: model won no games (degenerate input)");
  double mean = 0;
  for (double l : lengths) mean += l;
  mean /= lengths.size();
  double var = 0;
  for (double l : lengths) var += (l - mean) * (l - mean);
  var = lengths.size() > 1 ? var / (lengths.size() - 1) : 0.0;
  t.mean_ticks = mean;
  t.ci95_ticks = 1.96 * std::sqrt(var / lengths.size());
  t.mean_minutes = ticks_to_minutes(static_cast<int>(std::lround(mean)), game.config().tick_ms);
  return t;
}

double elo_vs_anchor(double score, int games) {
  if (games <= 0) throw ContractError("elo_vs_anchor: no games");
  double p = std::clamp(score, 0.5 / games, 1.0 - 0.5 / games);
  return EloTable::kInitial + 400.0 * std::log10(p / (1 - p));
}

Probe probe_vs_scripted(const env::Game& game, const features::FeatureExtractor& fx, const net::Network& network,
                        const net::Params& params, int games, uint64_t seed, double temperature) {
  Participant me{"model", params.version,
                 [&] { return std::make_unique<NetAgent>(game, fx, network, params, temperature); }};
  Participant bot{"scripted", 0, [&] { return std::make_unique<ScriptedAgent>(game); }};
  double score = tally(head_to_head(game, me, bot, games, seed), "model").win_rate();
  return {score, elo_vs_anchor(score, games)};
}

std::pair<double, double> wilson_interval(double k, double n, double z) {
  if (n <= 0) return {0.0, 1.0};
  double p = k / n, z2 = z * z;
  double center = (p + z2 / (2 * n)) / (1 + z2 / n);
  double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
  return {center - half, center + half};
}

std::pair<int, int> binomial_acceptance(int n, double conf) {
  // P(X = k) for X ~ Bin(n, 1/2), accumulated symmetrically from the center.
  std::vector<double> pmf(n + 1);
  for (int k = 0; k <= n; ++k)
    pmf[k] = std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) - n * std::log(2.0));
  int lo = n / 2, hi = n - n / 2;
  double mass = 0;
  for (int k = lo; k <= hi; ++k) mass += pmf[k];
  while (mass < conf && lo > 0) {
    --lo;
    ++hi;
    mass += pmf[lo] + pmf[hi];
  }
  return {lo, hi};
}

}  // namespace moba::eval
