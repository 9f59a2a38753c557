#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "judgevar/assignment.hpp"
#include "test_util.hpp"

using namespace judgevar;

namespace {

std::vector<std::size_t> count_by_judge(const AssignmentPlan& p) {
  std::vector<std::size_t> c(p.k_tot, 0);
  for (const auto& a : p.cells) ++c[a.judge];
  return c;
}

}  // namespace

TEST(CyclicPlan, OneFullCycle) {
  const auto p = cyclic_plan(1, 5, 5, 0);
  EXPECT_EQ(p.counts, (std::vector<std::size_t>{1, 1, 1, 1, 1}));
  for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(p.cells[j].judge, j);
  EXPECT_EQ(p.max_imbalance, 0u);
}

TEST(CyclicPlan, EightyScenariosSixteenEach) {
  for (std::uint64_t seed : {0ull, 1ull, 12345ull, 0xdeadbeefull}) {
    const auto p = cyclic_plan(80, 1, 5, seed);
    EXPECT_EQ(p.cells.size(), 80u);
    EXPECT_EQ(count_by_judge(p), (std::vector<std::size_t>(5, 16)));
    EXPECT_EQ(p.counts, count_by_judge(p));
  }
}

TEST(CyclicPlan, DeterministicAndSeedSensitive) {
  EXPECT_EQ(cyclic_plan(40, 1, 5, 9), cyclic_plan(40, 1, 5, 9));
  const auto a = cyclic_plan(40, 1, 5, 9), b = cyclic_plan(40, 1, 5, 10);
  EXPECT_EQ(a.counts, b.counts);
  EXPECT_NE(a.cells, b.cells);
  EXPECT_EQ(a.seed, std::optional<std::uint64_t>(9));
}

TEST(CyclicPlan, GenerationsCycleWithinScenario) {
  const auto p = cyclic_plan(3, 10, 5, 0);
  for (const auto& a : p.cells) EXPECT_EQ(a.judge, a.generation % 5);
  EXPECT_EQ(p.max_imbalance, 0u);
}

TEST(CyclicPlan, NearBalanceWhenIndivisible) {
  const auto p = cyclic_plan(7, 3, 5, 0);
  EXPECT_EQ(p.max_imbalance, 1u);
  std::size_t total = 0;
  for (auto c : p.counts) total += c;
  EXPECT_EQ(total, 21u);
  // Every scenario still sees distinct judges across its generations.
  for (std::size_t i = 0; i < 7; ++i) {
    std::set<std::uint32_t> seen;
    for (const auto& a : p.cells)
      if (a.scenario == i) seen.insert(a.judge);
    EXPECT_EQ(seen.size(), 3u);
  }
}

TEST(CyclicPlan, ShuffleIsUniform) {
  // Scenario 0 of a 10-scenario, m = 1 plan lands on each judge about 1/5 of the time.
  std::vector<double> hits(5, 0);
  for (std::uint64_t s = 0; s < 5000; ++s) hits[cyclic_plan(10, 1, 5, s).cells[0].judge] += 1;
  double chi2 = 0;
  for (double h : hits) chi2 += (h - 1000) * (h - 1000) / 1000;
  EXPECT_LT(chi2, 18.47);  // chi-square(4) upper 0.001 quantile
}

TEST(RandomPlan, SingleJudgeMatchesCyclic) {
  EXPECT_EQ(random_plan(6, 2, 1, 3).cells, cyclic_plan(6, 2, 1, 3).cells);
}

TEST(RandomPlan, BinomialConcentration) {
  int ok = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto p = random_plan(10000, 1, 5, s);
    bool all = true;
    for (auto c : p.counts) all = all && std::fabs(double(c) - 2000.0) <= 200.0;
    ok += all;
  }
  EXPECT_GE(ok, 99);
}

TEST(RandomPlan, ChiSquareUniformity) {
  int rejections = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto p = random_plan(2000, 2, 5, 1000 + s);
    double chi2 = 0;
    for (auto c : p.counts) chi2 += (double(c) - 800.0) * (double(c) - 800.0) / 800.0;
    rejections += chi2 > 13.277;  // chi-square(4) upper 0.01 quantile
  }
  EXPECT_LE(rejections, 5);
}

TEST(AllJudgesPlan, EveryJudgeEveryCell) {
  const auto p = all_judges_plan(2, 1, 3);
  EXPECT_EQ(p.cells.size(), 6u);
  EXPECT_EQ(p.counts, (std::vector<std::size_t>{2, 2, 2}));
  EXPECT_FALSE(p.seed.has_value());
}

TEST(ResidualOffset, BalancedIsExactlyZero) {
  const std::vector<double> g{0.4, -0.1, -0.3, 0.2, -0.2};
  EXPECT_EQ(residual_offset_bound(cyclic_plan(80, 1, 5, 4), g), 0.0);
  EXPECT_EQ(residual_offset_bound(cyclic_plan(3, 10, 5, 4), g), 0.0);
  const std::vector<double> awkward{0.1, 0.2, -0.3};
  EXPECT_EQ(residual_offset_bound(cyclic_plan(9, 1, 3, 1), awkward), 0.0);
}

TEST(ResidualOffset, PartialCycle) {
  const std::vector<double> g{0.4, -0.1, -0.3, 0.2, -0.2};
  EXPECT_NEAR(residual_offset_bound(cyclic_plan(6, 1, 5, 2), g), 0.4 / 6, 1e-15);
}

TEST(ResidualOffset, Validation) {
  const auto p = cyclic_plan(5, 1, 5, 0);
  EXPECT_EQ(kind_of([&] { residual_offset_bound(p, std::vector<double>{1, 1, 1, 1, 1}); }), ErrorKind::Uncentered);
  EXPECT_THROW(residual_offset_bound(p, std::vector<double>{1, -1}), Error);
}

TEST(MakePlan, Dispatch) {
  EXPECT_EQ(make_plan(Strategy::Cyclic, 4, 2, 3, 1), cyclic_plan(4, 2, 3, 1));
  EXPECT_EQ(make_plan(Strategy::RandomSingle, 4, 2, 3, 1), random_plan(4, 2, 3, 1));
  EXPECT_EQ(make_plan(Strategy::AllJudges, 4, 2, 3, 1), all_judges_plan(4, 2, 3));
  EXPECT_THROW(make_plan(Strategy::Cyclic, 0, 2, 3, 1), Error);
  EXPECT_THROW(make_plan(Strategy::Cyclic, 2, 2, 0, 1), Error);
}

TEST(MakePlan, Json) {
  const nlohmann::json j = cyclic_plan(2, 1, 2, 5);
  EXPECT_EQ(j["strategy"], "Cyclic");
  EXPECT_EQ(j["seed"], 5);
  EXPECT_EQ(j["cells"].size(), 2u);
  EXPECT_EQ(j["max_imbalance"], 0);
}
