#include <gtest/gtest.h>

#include <cmath>

#include "judgevar/allocation.hpp"
#include "judgevar/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace judgevar;

namespace {

const Components kQwenMtBench{1.530, 0.266, 0.947, 1.486};
const Components kClaudeMindEval{0.005, 0.002, 0.155, 0.061};

}  // namespace

TEST(Fpc, Examples) {
  EXPECT_EQ(fpc_factor(5, 5), 0.0);
  EXPECT_EQ(fpc_factor(1, 5), 1.0);
  EXPECT_DOUBLE_EQ(fpc_factor(2, 5), 0.75);
  EXPECT_EQ(kind_of([] { fpc_factor(0, 5); }), ErrorKind::InvalidDesign);
  EXPECT_EQ(kind_of([] { fpc_factor(6, 5); }), ErrorKind::InvalidDesign);
  EXPECT_EQ(kind_of([] { fpc_factor(1, 1); }), ErrorKind::InvalidDesign);
}

TEST(Fpc, BruteForceExamples) {
  EXPECT_NEAR(fpc_brute_force(std::vector<double>{1, -1}, 1), 1.0, 1e-15);
  EXPECT_NEAR(fpc_brute_force(std::vector<double>{1, -1}, 2), 0.0, 1e-15);
  EXPECT_NEAR(fpc_brute_force(std::vector<double>{2, -1, -1}, 2), 0.5, 1e-15);
  EXPECT_EQ(kind_of([] { fpc_brute_force(std::vector<double>{1, 1}, 1); }), ErrorKind::Uncentered);
}

TEST(Fpc, TwoOfFiveByEnumeration) {
  // A centred 5-vector; the subset-mean variance over all 10 pairs divided by
  // sigma2 / 2 is the factor.
  const std::vector<double> v{0.4, -0.1, -0.3, 0.2, -0.2};
  double s2 = 0;
  for (double x : v) s2 += x * x / 5;
  EXPECT_NEAR((double)oracle::subset_mean_variance(v, 2) / (s2 / 2), 0.75, 1e-14);
  EXPECT_NEAR(fpc_brute_force(v, 2), (double)oracle::subset_mean_variance(v, 2), 1e-15);
}

TEST(BenchmarkVariance, QwenRowsAtDefaultOperatingPoint) {
  const auto b = benchmark_variance(kQwenMtBench, Design{80, 1, 1, 5, 0});
  EXPECT_NEAR(b.scenario, 1.530 / 80, 1e-15);
  EXPECT_NEAR(b.generation, 0.266 / 80, 1e-15);
  EXPECT_NEAR(b.judge, 0.947, 1e-15);
  EXPECT_NEAR(b.residual, 1.486 / 80, 1e-15);
  EXPECT_NEAR(b.total, 0.9875, 1e-3);
  EXPECT_NEAR(b.total, b.scenario + b.generation + b.judge + b.residual, 1e-15);
}

TEST(BenchmarkVariance, FullPanelRemovesJudgeTerm) {
  const auto b = benchmark_variance(kClaudeMindEval, Design{50, 5, 5, 5, 0});
  EXPECT_EQ(b.judge, 0.0);
  EXPECT_NEAR(b.total, 1.568e-4, 1e-15);
}

TEST(BenchmarkVariance, ZeroComponents) {
  EXPECT_EQ(benchmark_variance(Components{}, Design{10, 2, 2, 5, 0}).total, 0.0);
}

TEST(BenchmarkVariance, MatchesOracleGrid) {
  Philox r(3);
  for (int t = 0; t < 200; ++t) {
    const Components c{r.uniform01(), r.uniform01(), r.uniform01(), r.uniform01()};
    const std::size_t kt = 1 + r.uniform_index(8), k = 1 + r.uniform_index(kt);
    const std::size_t n = 1 + r.uniform_index(100), m = 1 + r.uniform_index(10);
    const double expect = oracle::grand_mean_variance(c.sigma2_alpha, c.sigma2_beta, c.sigma2_gamma,
                                                      c.sigma2_eps, n, m, k, kt);
    EXPECT_NEAR(benchmark_variance(c, Design{n, m, k, kt, 0}).total, expect, 1e-14);
  }
}

TEST(StrategyVariance, QwenAtBudgetFive) {
  const auto c = strategy_variance(Strategy::Cyclic, kQwenMtBench, 80, 5, 5);
  const auto b = strategy_variance(Strategy::RandomSingle, kQwenMtBench, 80, 5, 5);
  const auto a = strategy_variance(Strategy::AllJudges, kQwenMtBench, 80, 5, 5);
  EXPECT_NEAR(c.variance, 4.38e-3, 1e-15);
  EXPECT_NEAR(b.variance, 6.7475e-3, 1e-15);
  EXPECT_NEAR(a.variance, (5 * 0.266 + 1.486) / 400, 1e-15);
  EXPECT_NEAR(c.scenario_term, 1.530 / 80, 1e-15);
}

TEST(StrategyVariance, NoBetaNoGammaCoincide) {
  const Components c{0.3, 0, 0, 1.2};
  for (Strategy s : kAllStrategies) EXPECT_NEAR(strategy_variance(s, c, 40, 10, 5).variance, 1.2 / 400, 1e-16);
}

TEST(StrategyVariance, AllJudgesNeedsDivisibleBudget) {
  EXPECT_EQ(kind_of([] { strategy_variance(Strategy::AllJudges, kQwenMtBench, 80, 7, 5); }),
            ErrorKind::IndivisibleBudget);
  EXPECT_NO_THROW(strategy_variance(Strategy::RandomSingle, kQwenMtBench, 80, 7, 5));
}

TEST(PairwiseGaps, Limits) {
  const auto no_beta = pairwise_gaps(Components{1, 0, 0.5, 1}, 50, 10, 5);
  EXPECT_NEAR(no_beta.all_minus_cyclic, 0.0, 1e-16);
  const auto no_gamma = pairwise_gaps(Components{1, 0.3, 0, 1}, 50, 10, 5);
  EXPECT_NEAR(no_gamma.random_minus_cyclic, 0.0, 1e-16);
  const auto q = pairwise_gaps(kQwenMtBench, 80, 5, 5);
  EXPECT_NEAR(q.all_minus_cyclic, 4 * 0.266 / 400, 1e-15);
  EXPECT_NEAR(q.random_minus_cyclic, 0.947 / 400, 1e-15);
  EXPECT_NEAR(q.all_minus_random, (4 * 0.266 - 0.947) / 400, 1e-15);
}

TEST(Recommend, QwenPrefersRandomOverAll) {
  const auto r = recommend_strategy(kQwenMtBench, 80, 5, 5);
  EXPECT_EQ(r.ranking[0], Strategy::Cyclic);
  EXPECT_EQ(r.ranking[1], Strategy::RandomSingle);
  EXPECT_EQ(r.ranking[2], Strategy::AllJudges);
  EXPECT_NEAR(r.ratio, 3.56, 0.01);
  EXPECT_EQ(r.threshold, 4.0);
}

TEST(Recommend, ClaudeMindEvalPrefersAllOverRandom) {
  const auto r = recommend_strategy(kClaudeMindEval, 50, 5, 5);
  EXPECT_EQ(r.ranking[0], Strategy::Cyclic);
  EXPECT_EQ(r.ranking[1], Strategy::AllJudges);
  EXPECT_NEAR(r.ratio, 77.5, 1e-9);
}

TEST(Recommend, DegenerateRatios) {
  const auto tie = recommend_strategy(Components{1, 0, 0, 1}, 10, 5, 5);
  EXPECT_EQ(tie.ranking[0], Strategy::Cyclic);
  EXPECT_TRUE(std::isnan(tie.ratio));
  const auto inf = recommend_strategy(Components{1, 0, 0.4, 1}, 10, 5, 5);
  EXPECT_TRUE(std::isinf(inf.ratio));
  EXPECT_EQ(inf.ranking[1], Strategy::AllJudges);
  // At the threshold exactly the tie goes to AllJudges.
  const auto at = recommend_strategy(Components{1, 0.25, 1.0, 1}, 10, 5, 5);
  EXPECT_EQ(at.ranking[1], Strategy::AllJudges);
}

TEST(Recommend, JsonEncodesNonFiniteRatio) {
  const nlohmann::json j = recommend_strategy(Components{1, 0, 0.4, 1}, 10, 5, 5);
  EXPECT_EQ(j["ratio"], "inf");
  EXPECT_EQ(j["ranking"][0], "Cyclic");
}

TEST(Tradeoff, QwenValues) {
  EXPECT_NEAR(scenario_generation_tradeoff(kQwenMtBench, 80, 1), 0.041025, 1e-12);
  EXPECT_NEAR(scenario_generation_tradeoff(kQwenMtBench, 80, 2), 0.06015, 1e-12);
  EXPECT_EQ(kind_of([] { scenario_generation_tradeoff(kQwenMtBench, 80, 3); }), ErrorKind::InvalidDesign);
}

TEST(Tradeoff, NoScenarioVarianceIsFlat) {
  const Components c{0, 0.4, 0.9, 1.1};
  const double v1 = scenario_generation_tradeoff(c, 120, 1);
  for (std::size_t m : {2u, 3u, 4u, 5u, 6u, 8u, 10u, 12u}) EXPECT_DOUBLE_EQ(scenario_generation_tradeoff(c, 120, m), v1);
}

TEST(StrategyNames, ParseAliases) {
  EXPECT_EQ(parse_strategy("cyclic"), Strategy::Cyclic);
  EXPECT_EQ(parse_strategy("C"), Strategy::Cyclic);
  EXPECT_EQ(parse_strategy("random"), Strategy::RandomSingle);
  EXPECT_EQ(parse_strategy("B"), Strategy::RandomSingle);
  EXPECT_EQ(parse_strategy("all-judges"), Strategy::AllJudges);
  EXPECT_EQ(parse_strategy("AllJudges"), Strategy::AllJudges);
  EXPECT_THROW(parse_strategy("best"), Error);
  for (Strategy s : kAllStrategies) EXPECT_EQ(parse_strategy(to_string(s)), s);
}
