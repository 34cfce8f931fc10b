#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "moba/eval/match.h"

namespace moba::eval {

double expected_score(double r_a, double r_b);

class EloTable {
 public:
  static constexpr double kInitial = 1200.0;

  void add(const std::string& id, double rating = kInitial);
  bool has(const std::string& id) const { return entries_.count(id) != 0; }
  double rating(const std::string& id) const;
  int games(const std::string& id) const;
  // score_a in {1, 0.5, 0}. Throws ContractError on unknown participants.
  void update(const std::string& a, const std::string& b, double score_a, double k = 32.0);
  double rating_sum() const;
  std::vector<std::string> ids() const;

 private:
  struct Entry {
    double rating = kInitial;
    int games = 0;
  };
  std::map<std::string, Entry> entries_;
};

struct Participant {
  std::string id;
  uint64_t version = 0;
  std::function<std::unique_ptr<Agent>()> make;
};

struct TournamentConfig {
  int games_per_pair = 20;
  uint64_t seed = 1;
  double k = 32.0;
  // Passes of Elo updates over the sorted result list; more passes reduce the
  // dependence of final ratings on result order.
  int passes = 1;
  MatchOptions match;
};

struct TournamentResult {
  EloTable table;
  std::vector<MatchResult> matches;
};

// Round robin over every pair, sides alternating per game, results sorted by
// (a, b, seed) before the Elo updates.
TournamentResult run_tournament(const env::Game& game, std::vector<Participant> participants,
                                const TournamentConfig& cfg);

struct WinStats {
  int games = 0;
  int wins = 0;
  int losses = 0;
  int draws = 0;
  double win_rate() const { return games ? (wins + 0.5 * draws) / games : 0.0; }
};
WinStats tally(const std::vector<MatchResult>& matches, const std::string& id);

// Plays n games of `a` against `b`, alternating sides.
std::vector<MatchResult> head_to_head(const env::Game& game, const Participant& a, const Participant& b, int n,
                                      uint64_t seed, const MatchOptions& opt = {});

struct TimeToDefeat {
  int wins = 0;
  int games = 0;
  double mean_ticks = 0;
  double ci95_ticks = 0;  // half-width, normal approximation
  double mean_minutes = 0;
};
// Averaged length of the games `model` wins against `baseline`. Throws
// ContractError when it wins none (degenerate input).
TimeToDefeat time_to_defeat(const env::Game& game, const Participant& model, const Participant& baseline, int n,
                            uint64_t seed);

struct Probe {
  double win_rate = 0;
  double elo = 0;
};
// Rating against the scripted bot anchored at EloTable::kInitial, from n games;
// the score is clamped to [0.5/n, 1 - 0.5/n] so the rating stays finite.
double elo_vs_anchor(double score, int games);
Probe probe_vs_scripted(const env::Game& game, const features::FeatureExtractor& fx, const net::Network& network,
                        const net::Params& params, int games, uint64_t seed, double temperature = 0.0);

// Wilson score interval for k successes out of n at normal quantile z.
std::pair<double, double> wilson_interval(double k, double n, double z);
// Exact two-sided binomial interval of counts around p = 0.5 at level `conf`:
// the smallest symmetric [lo, hi] with P(lo <= X <= hi) >= conf.
std::pair<int, int> binomial_acceptance(int n, double conf);

}  // namespace moba::eval
