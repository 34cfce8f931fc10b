#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "moba/common/error.h"
#include "moba/eval/elo.h"
#include "support/support.h"

using namespace moba;
using namespace moba::eval;

namespace {

Participant scripted(const env::Game& g, const std::string& id = "scripted") {
  return {id, 0, [&g] { return std::make_unique<ScriptedAgent>(g); }};
}
Participant random_agent(const env::Game& g, const std::string& id = "random") {
  return {id, 0, [&g] { return std::make_unique<RandomAgent>(g); }};
}

// Exact Binomial(n, 1/2) pmf built by repeated halving convolution.
std::vector<double> half_binomial(int n) {
  std::vector<double> p{1.0};
  for (int i = 0; i < n; ++i) {
    std::vector<double> q(p.size() + 1, 0.0);
    for (size_t k = 0; k < p.size(); ++k) {
      q[k] += 0.5 * p[k];
      q[k + 1] += 0.5 * p[k];
    }
    p.swap(q);
  }
  return p;
}

}  // namespace

TEST(Elo, ExpectedScoreExamples) {
  EXPECT_DOUBLE_EQ(expected_score(1200, 1200), 0.5);
  EXPECT_NEAR(expected_score(1600, 1200), 0.9091, 1e-4);
  EXPECT_NEAR(expected_score(1400, 1200), 0.7597, 1e-4);
  EXPECT_NEAR(expected_score(1200, 1400) + expected_score(1400, 1200), 1.0, 1e-15);
}

TEST(Elo, UpdateExamples) {
  EloTable t;
  t.add("a");
  t.add("b");
  t.update("a", "b", 1.0);
  EXPECT_DOUBLE_EQ(t.rating("a"), 1216.0);
  EXPECT_DOUBLE_EQ(t.rating("b"), 1184.0);
  EXPECT_EQ(t.games("a"), 1);
  EloTable d;
  d.add("a");
  d.add("b");
  d.update("a", "b", 0.5);
  EXPECT_DOUBLE_EQ(d.rating("a"), 1200.0);
  EXPECT_THROW(t.update("a", "zz", 1.0), ContractError);
  EXPECT_THROW(t.update("a", "b", 0.7), ContractError);
}

TEST(Elo, RatingSumConserved) {
  EloTable t;
  std::vector<std::string> ids{"a", "b", "c", "d"};
  for (auto& id : ids) t.add(id);
  SplitMix64 rng(3);
  for (int i = 0; i < 500; ++i) {
    int x = static_cast<int>(rng.below(4)), y = static_cast<int>(rng.below(3));
    if (y >= x) ++y;
    t.update(ids[x], ids[y], 0.5 * static_cast<double>(rng.below(3)));
  }
  EXPECT_NEAR(t.rating_sum(), 4 * EloTable::kInitial, 1e-9);
}

TEST(Intervals, WilsonExample) {
  auto [lo, hi] = wilson_interval(50, 100, 1.96);
  EXPECT_NEAR(lo, 0.40383, 1e-5);
  EXPECT_NEAR(hi, 0.59617, 1e-5);
  auto [l0, h0] = wilson_interval(0, 10, 1.96);
  EXPECT_NEAR(l0, 0.0, 1e-12);
  EXPECT_GT(h0, 0.0);
}

TEST(Intervals, BinomialAcceptanceMatchesExactPmf) {
  for (int n : {20, 100, 400}) {
    for (double conf : {0.95, 0.99}) {
      auto pmf = half_binomial(n);
      // Smallest symmetric band with mass >= conf.
      int lo = n / 2, hi = n - lo;
      auto mass = [&](int a, int b) {
        double s = 0;
        for (int k = a; k <= b; ++k) s += pmf[k];
        return s;
      };
      while (mass(lo, hi) < conf) --lo, ++hi;
      auto [blo, bhi] = binomial_acceptance(n, conf);
      EXPECT_EQ(blo, lo) << n << " " << conf;
      EXPECT_EQ(bhi, hi) << n << " " << conf;
    }
  }
}

class EvalGames : public ::testing::Test {
 protected:
  env::Game game_{env::EnvConfig{}};
};

TEST_F(EvalGames, ScriptedBeatsRandom) {
  auto r = head_to_head(game_, scripted(game_), random_agent(game_), 40, 5);
  WinStats w = tally(r, "scripted");
  EXPECT_EQ(w.games, 40);
  EXPECT_GE(w.win_rate(), 0.95);
  int side0 = 0;
  for (const auto& m : r) side0 += m.a_side == 0;
  EXPECT_EQ(side0, 20);
}

TEST_F(EvalGames, MatchDeterministicGivenSeed) {
  RandomAgent a(game_), b(game_);
  MatchResult x = play_match(game_, a, b, 17, 0);
  MatchResult y = play_match(game_, a, b, 17, 0);
  EXPECT_EQ(x.winner, y.winner);
  EXPECT_EQ(x.ticks, y.ticks);
  EXPECT_EQ(x.kills, y.kills);
}

TEST_F(EvalGames, TournamentIndependentOfParticipantOrder) {
  TournamentConfig cfg;
  cfg.games_per_pair = 4;
  cfg.passes = 3;
  std::vector<Participant> ps{scripted(game_, "s1"), random_agent(game_, "r1"), random_agent(game_, "r2")};
  TournamentResult a = run_tournament(game_, ps, cfg);
  std::reverse(ps.begin(), ps.end());
  TournamentResult b = run_tournament(game_, ps, cfg);
  for (const auto& id : a.table.ids()) EXPECT_DOUBLE_EQ(a.table.rating(id), b.table.rating(id)) << id;
  EXPECT_EQ(a.matches.size(), 12u);
  EXPECT_GT(a.table.rating("s1"), a.table.rating("r1"));
  EXPECT_NEAR(a.table.rating_sum(), 3 * EloTable::kInitial, 1e-9);
}

TEST_F(EvalGames, TimeToDefeat) {
  TimeToDefeat t = time_to_defeat(game_, scripted(game_), random_agent(game_), 10, 3);
  EXPECT_GT(t.wins, 0);
  EXPECT_GT(t.mean_ticks, 0);
  EXPECT_NEAR(t.mean_minutes, t.mean_ticks * game_.config().tick_ms / 60000.0, 1e-9);
  EXPECT_THROW(time_to_defeat(game_, random_agent(game_), scripted(game_), 4, 3), ContractError);
}

TEST_F(EvalGames, NetAgentSampledPlayIsSeeded) {
  features::FeatureExtractor fx(game_);
  net::Network net(net::NetConfig::small());
  net::Params p = testkit::noisy_params(net, 4, 0.1);
  NetAgent a(game_, fx, net, p, 1.0), b(game_, fx, net, p, 1.0);
  ScriptedAgent s(game_);
  MatchResult x = play_match(game_, a, s, 8, 0);
  MatchResult y = play_match(game_, b, s, 8, 0);
  EXPECT_EQ(x.ticks, y.ticks);
  EXPECT_EQ(x.winner, y.winner);
}

TEST(EvalCsv, RowMatchesHeader) {
  MatchResult m;
  m.a = "x";
  m.b = "y";
  auto cols = [](const std::string& s) { return std::count(s.begin(), s.end(), ',') + 1; };
  EXPECT_EQ(cols(match_csv_header()), cols(match_csv_row(m)));
  EXPECT_DOUBLE_EQ(ticks_to_minutes(450, 133.0), 450 * 133.0 / 60000.0);
}
