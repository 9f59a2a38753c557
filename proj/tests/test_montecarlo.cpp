#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numeric>

#include "judgevar/montecarlo.hpp"
#include "test_util.hpp"

using namespace judgevar;

namespace {

SimulationConfig base_config() {
  SimulationConfig c;
  c.mu = 7;
  c.sigma_alpha = 1.0;
  c.sigma_beta = 0.5;
  c.sigma_eps = 0.8;
  c.gamma = {0.4, -0.1, -0.3, 0.2, -0.2};
  c.n = 20;
  c.m = 4;
  c.seed = 1;
  return c;
}

ScoreTensor pure_offsets(std::size_t n, std::size_t m, double mu, const std::vector<double>& g) {
  std::vector<double> v;
  for (std::size_t i = 0; i < n * m; ++i)
    for (double x : g) v.push_back(mu + x);
  return ScoreTensor::from_values(n, m, g.size(), v);
}

// Pool constants straight from their definitions.
PoolConstants pool_oracle(const ScoreTensor& t) {
  const std::size_t n = t.scenarios(), m = t.generations(), k = t.judges();
  long double ca = 0, cb = 0, cc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    long double scen = 0;
    std::vector<long double> gen(m, 0), col(k, 0);
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t l = 0; l < k; ++l) {
        scen += t(i, j, l) / (long double)(m * k);
        gen[j] += t(i, j, l) / (long double)k;
        col[l] += t(i, j, l) / (long double)m;
      }
    for (std::size_t j = 0; j < m; ++j) {
      ca += k * (gen[j] - scen) * (gen[j] - scen) / (long double)(n * m);
      for (std::size_t l = 0; l < k; ++l) {
        cb += (t(i, j, l) - scen) * (t(i, j, l) - scen) / (long double)(n * m * k);
        cc += (t(i, j, l) - col[l]) * (t(i, j, l) - col[l]) / (long double)(n * m * k);
      }
    }
  }
  return {(double)ca, (double)cb, (double)cc};
}

}  // namespace

TEST(Simulate, NoVarianceIsConstant) {
  SimulationConfig c;
  c.mu = 7;
  c.gamma = {0, 0, 0};
  c.n = 4;
  c.m = 2;
  const auto t = simulate_tensor(c);
  for (double v : t.values()) EXPECT_EQ(v, 7.0);
}

TEST(Simulate, ResidualVarianceConcentrates) {
  int ok = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    SimulationConfig c;
    c.sigma_eps = 1;
    c.gamma = {0, 0, 0, 0, 0};
    c.n = 100;
    c.m = 5;
    c.seed = s;
    const auto t = simulate_tensor(c);
    const auto v = t.values();
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double var = ss / (v.size() - 1);
    ok += var >= 0.94 && var <= 1.06;
  }
  EXPECT_GE(ok, 95);
}

TEST(Simulate, DeterministicPerSeed) {
  auto c = base_config();
  EXPECT_EQ(simulate_tensor(c), simulate_tensor(c));
  auto d = c;
  d.seed = 2;
  EXPECT_NE(simulate_tensor(c).values()[0], simulate_tensor(d).values()[0]);
}

TEST(Simulate, ClipToScale) {
  auto c = base_config();
  c.sigma_eps = 5;
  c.clip_to_scale = std::make_pair(1.0, 10.0);
  const auto t = simulate_tensor(c);
  for (double v : t.values()) {
    EXPECT_GE(v, 1.0);
    EXPECT_LE(v, 10.0);
  }
}

TEST(SimulationConfig, Validation) {
  auto c = base_config();
  c.sigma_alpha = -1;
  EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::InvalidConfig);
  c = base_config();
  c.gamma = {1, 1};
  EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::InvalidConfig);
  c = base_config();
  c.eps_family = NoiseFamily::student_t(2);
  EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::InvalidConfig);
  c = base_config();
  c.n = 0;
  EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::InvalidConfig);
}

TEST(SimulationConfig, JsonRoundTrip) {
  auto c = base_config();
  c.eps_family = NoiseFamily::student_t(5);
  c.clip_to_scale = std::make_pair(1.0, 10.0);
  const nlohmann::json j = c;
  const auto back = j.get<SimulationConfig>();
  EXPECT_EQ(simulate_tensor(back), simulate_tensor(c));
  EXPECT_EQ(back.eps_family.name(), "student_t:5");
  nlohmann::json bad = j;
  bad["K_tot"] = 3;
  EXPECT_EQ(kind_of([&] { (void)bad.get<SimulationConfig>(); }), ErrorKind::InvalidConfig);
}

TEST(NoiseFamily, ParseAndUnitVariance) {
  EXPECT_EQ(NoiseFamily::parse("gaussian").kind, NoiseFamily::Kind::Gaussian);
  EXPECT_EQ(NoiseFamily::parse("uniform").kind, NoiseFamily::Kind::Uniform);
  EXPECT_EQ(NoiseFamily::parse("t7").df, 7.0);
  EXPECT_EQ(NoiseFamily::parse("student_t:5").df, 5.0);
  EXPECT_THROW(NoiseFamily::parse("cauchy"), Error);
  for (auto f : {NoiseFamily::gaussian(), NoiseFamily::uniform(), NoiseFamily::student_t(8)}) {
    Philox r(17);
    const int n = 400000;
    double s1 = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const double x = f.draw(r);
      s1 += x;
      s2 += x * x;
    }
    EXPECT_NEAR(s1 / n, 0.0, 0.01) << f.name();
    EXPECT_NEAR(s2 / n, 1.0, 0.03) << f.name();
  }
}

TEST(ScaledOffsets, CentredWithTargetDispersion) {
  const auto g = scaled_offsets(std::vector<double>{3, 1, 0, 5}, 0.8);
  double s = 0, s2 = 0;
  for (double x : g) {
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s, 0.0, 1e-14);
  EXPECT_NEAR(s2 / 4, 0.8, 1e-14);
  EXPECT_THROW(scaled_offsets(std::vector<double>{2, 2}, 0.5), Error);
}

TEST(PoolConstants, Examples) {
  const auto zero = pool_constants(ScoreTensor::from_values(3, 2, 2, std::vector<double>(12, 4.0)));
  EXPECT_EQ(zero.c_all, 0.0);
  EXPECT_EQ(zero.c_random, 0.0);
  EXPECT_EQ(zero.c_cyclic, 0.0);

  const auto p = pool_constants(ScoreTensor::from_values(1, 2, 1, {4, 6}));
  EXPECT_DOUBLE_EQ(p.c_all, 1.0);
  EXPECT_DOUBLE_EQ(p.c_random, 1.0);
  EXPECT_DOUBLE_EQ(p.c_cyclic, 1.0);

  const std::vector<double> g{0.4, -0.1, -0.3, 0.2, -0.2};
  const auto q = pool_constants(pure_offsets(6, 3, 5.0, g));
  EXPECT_NEAR(q.c_cyclic, 0.0, 1e-15);
  EXPECT_NEAR(q.c_random, 0.068, 1e-14);
  EXPECT_NEAR(q.c_all, 0.0, 1e-15);
}

TEST(PoolConstants, MatchOracle) {
  const auto t = simulate_tensor(base_config());
  const auto p = pool_constants(t), ref = pool_oracle(t);
  EXPECT_NEAR(p.c_all, ref.c_all, 1e-12 * ref.c_all);
  EXPECT_NEAR(p.c_random, ref.c_random, 1e-12 * ref.c_random);
  EXPECT_NEAR(p.c_cyclic, ref.c_cyclic, 1e-12 * ref.c_cyclic);
  EXPECT_EQ(p.for_strategy(Strategy::Cyclic), p.c_cyclic);
}

TEST(Subsample, ConstantTensor) {
  const auto t = ScoreTensor::from_values(3, 4, 5, std::vector<double>(60, 6.5));
  for (Strategy s : kAllStrategies)
    for (std::uint64_t seed = 0; seed < 5; ++seed) EXPECT_EQ(subsample_score(t, s, 10, seed), 6.5);
}

TEST(Subsample, CyclicCancelsOffsetsExactly) {
  const std::vector<double> g{0.5, -0.25, -0.25, 0.125, -0.125};
  const auto t = pure_offsets(8, 4, 6.0, g);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EXPECT_NEAR(subsample_score(t, Strategy::Cyclic, 10, seed), 6.0, 1e-14);
    EXPECT_NEAR(subsample_score(t, Strategy::AllJudges, 5, seed), 6.0, 1e-14);
  }
}

TEST(Subsample, RandomCarriesOffsetVariance) {
  const std::vector<double> g{0.4, -0.1, -0.3, 0.2, -0.2};
  const auto t = pure_offsets(10, 2, 5.0, g);
  const auto r = run_harness(t, Strategy::RandomSingle, 5, 20000, 3);
  const double expect = 0.068 / (10 * 5);
  EXPECT_NEAR(r.predicted_variance, expect, 1e-15);
  EXPECT_NEAR(r.empirical_variance, expect, 4 * r.standard_error);
  EXPECT_GT(r.empirical_variance, 0.0);
}

TEST(Subsample, BudgetChecks) {
  const auto t = simulate_tensor(base_config());
  EXPECT_EQ(kind_of([&] { subsample_score(t, Strategy::Cyclic, 7, 0); }), ErrorKind::IndivisibleBudget);
  EXPECT_EQ(kind_of([&] { subsample_score(t, Strategy::AllJudges, 3, 0); }), ErrorKind::IndivisibleBudget);
  EXPECT_EQ(kind_of([&] { subsample_score(t, Strategy::RandomSingle, 0, 0); }), ErrorKind::InvalidDesign);
  EXPECT_NO_THROW(subsample_score(t, Strategy::RandomSingle, 7, 0));
}

TEST(Harness, ConstantTensorZeroVariance) {
  const auto t = ScoreTensor::from_values(3, 2, 5, std::vector<double>(30, 2.0));
  const auto r = run_harness(t, Strategy::Cyclic, 5, 100, 1);
  EXPECT_EQ(r.empirical_variance, 0.0);
  EXPECT_EQ(r.predicted_variance, 0.0);
  EXPECT_TRUE(r.within(4));
}

TEST(Harness, BitIdenticalReruns) {
  const auto t = simulate_tensor(base_config());
  const auto a = run_harness(t, Strategy::RandomSingle, 10, 500, 42);
  const auto b = run_harness(t, Strategy::RandomSingle, 10, 500, 42);
  EXPECT_EQ(std::memcmp(&a.empirical_variance, &b.empirical_variance, sizeof(double)), 0);
  EXPECT_EQ(a.standard_error, b.standard_error);
  const auto c = run_harness(t, Strategy::RandomSingle, 10, 500, 43);
  EXPECT_NE(a.empirical_variance, c.empirical_variance);
}

TEST(Harness, GridPointIndependentOfNeighbours) {
  const auto t = simulate_tensor(base_config());
  const std::vector<std::size_t> one{10}, two{5, 10};
  const auto a = variance_curve(t, one, 300, 8);
  const auto b = variance_curve(t, two, 300, 8);
  ASSERT_EQ(a.size(), 3u);
  ASSERT_EQ(b.size(), 6u);
  for (const auto& ra : a)
    for (const auto& rb : b)
      if (ra.strategy == rb.strategy && ra.budget == rb.budget) EXPECT_EQ(ra.empirical_variance, rb.empirical_variance);
}

TEST(Harness, PredictionIsPoolOverNB) {
  const auto t = simulate_tensor(base_config());
  const auto p = pool_constants(t);
  for (Strategy s : kAllStrategies) {
    const auto r = run_harness(t, s, 10, 50, 1);
    EXPECT_NEAR(r.predicted_variance, p.for_strategy(s) / (20.0 * 10.0), 1e-16);
    EXPECT_NEAR(r.standard_error, r.empirical_variance * std::sqrt(2.0 / 49.0), 1e-16);
  }
}

TEST(Harness, SkipsIndivisibleBudgets) {
  const auto t = simulate_tensor(base_config());
  const std::vector<std::size_t> budgets{3, 5};
  const auto curve = variance_curve(t, budgets, 200, 1);
  ASSERT_EQ(curve.size(), 6u);
  std::size_t skipped = 0;
  for (const auto& r : curve) skipped += r.skipped();
  EXPECT_EQ(skipped, 2u);
  const auto rep = calibrate(curve);
  EXPECT_EQ(rep.points, 4u);
  EXPECT_EQ(kind_of([&] { run_harness(t, Strategy::Cyclic, 5, 1, 1); }), ErrorKind::InvalidArgument);
}

TEST(Harness, CalibratesOnSimulatedData) {
  const auto t = simulate_tensor(base_config());
  const std::vector<std::size_t> budgets{5, 10, 20};
  const auto rep = calibrate(variance_curve(t, budgets, 3000, 77));
  EXPECT_EQ(rep.points, 9u);
  EXPECT_TRUE(rep.calibration_pass);
  EXPECT_TRUE(rep.cyclic_lowest);
}

TEST(Decomposition, FullPanelHasNoJudgeTerm) {
  auto c = base_config();
  const auto d = check_variance_decomposition(c, 2, 5, 400, 5);
  EXPECT_NEAR(d.predicted_variance, 1.0 / 20 + 0.25 / 40 + 0.64 / 200, 1e-15);
  EXPECT_LT(std::fabs(d.z()), 5.0);
}
