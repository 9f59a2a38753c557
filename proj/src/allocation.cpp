#include "judgevar/allocation.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace judgevar {

std::string_view to_string(Strategy s) noexcept {
  switch (s) {
    case Strategy::AllJudges: return "AllJudges";
    case Strategy::RandomSingle: return "RandomSingle";
    case Strategy::Cyclic: return "Cyclic";
  }
  return "?";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "AllJudges" || name == "all-judges" || name == "all" || name == "A")
    return Strategy::AllJudges;
  if (name == "RandomSingle" || name == "random" || name == "B") return Strategy::RandomSingle;
  if (name == "Cyclic" || name == "cyclic" || name == "C") return Strategy::Cyclic;
  throw Error(ErrorKind::InvalidArgument, "unknown strategy '" + std::string(name) + "'");
}

double fpc_factor(std::size_t k, std::size_t k_tot) {
  if (k_tot < 2) throw Error(ErrorKind::InvalidDesign, "finite population correction needs K_tot >= 2");
  if (k < 1 || k > k_tot)
    throw Error(ErrorKind::InvalidDesign, "K must lie in [1, K_tot]");
  return static_cast<double>(k_tot - k) / static_cast<double>(k_tot - 1);
}

double fpc_brute_force(std::span<const double> values, std::size_t k) {
  const std::size_t p = values.size();
  if (k < 1 || k > p) throw Error(ErrorKind::InvalidArgument, "subset size must lie in [1, P]");
  if (p > 30) throw Error(ErrorKind::InvalidArgument, "enumeration limited to P <= 30");
  double total = 0.0, scale = 0.0;
  for (double v : values) {
    total += v;
    scale = std::max(scale, std::fabs(v));
  }
  if (std::fabs(total) > 1e-12 * std::max(1.0, scale * static_cast<double>(p)))
    throw Error(ErrorKind::Uncentered, "values must sum to zero");

  // Walk all k-combinations in lexicographic order; the population mean is 0,
  // so the variance is the mean squared subset mean.
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  long double acc = 0.0L;
  std::size_t count = 0;
  for (;;) {
    long double s = 0.0L;
    for (std::size_t i : idx) s += values[i];
    const long double mean = s / static_cast<long double>(k);
    acc += mean * mean;
    ++count;
    std::size_t pos = k;
    while (pos > 0 && idx[pos - 1] == p - k + (pos - 1)) --pos;
    if (pos == 0) break;
    ++idx[pos - 1];
    for (std::size_t q = pos; q < k; ++q) idx[q] = idx[q - 1] + 1;
  }
  return static_cast<double>(acc / static_cast<long double>(count));
}

VarianceBreakdown benchmark_variance(const Components& c, const Design& d) {
  d.validate();
  const double n = static_cast<double>(d.n), m = static_cast<double>(d.m),
               k = static_cast<double>(d.k);
  // A single-judge pool has no offset dispersion to sample.
  const double fpc = d.k_tot >= 2 ? fpc_factor(d.k, d.k_tot) : 0.0;
  VarianceBreakdown b;
  b.scenario = c.sigma2_alpha / n;
  b.generation = c.sigma2_beta / (n * m);
  b.judge = c.sigma2_gamma / k * fpc;
  b.residual = c.sigma2_eps / (n * m * k);
  b.total = b.scenario + b.generation + b.judge + b.residual;
  return b;
}

namespace {

void check_budget(std::size_t n, std::size_t budget, std::size_t k_tot) {
  if (n < 1) throw Error(ErrorKind::InvalidDesign, "n must be at least 1");
  if (budget < 1) throw Error(ErrorKind::InvalidDesign, "budget must be at least 1");
  if (k_tot < 1) throw Error(ErrorKind::InvalidDesign, "K_tot must be at least 1");
}

}  // namespace

StrategyVariance strategy_variance(Strategy s, const Components& c, std::size_t n,
                                   std::size_t budget, std::size_t k_tot) {
  check_budget(n, budget, k_tot);
  const double nb = static_cast<double>(n) * static_cast<double>(budget);
  StrategyVariance out{s, budget, 0.0, c.sigma2_alpha / static_cast<double>(n)};
  switch (s) {
    case Strategy::AllJudges:
      if (budget % k_tot != 0)
        throw Error(ErrorKind::IndivisibleBudget, "AllJudges needs B divisible by K_tot (B=" +
                                                      std::to_string(budget) +
                                                      ", K_tot=" + std::to_string(k_tot) + ")");
      out.variance = (static_cast<double>(k_tot) * c.sigma2_beta + c.sigma2_eps) / nb;
      break;
    case Strategy::RandomSingle:
      out.variance = (c.sigma2_beta + c.sigma2_gamma + c.sigma2_eps) / nb;
      break;
    case Strategy::Cyclic:
      out.variance = (c.sigma2_beta + c.sigma2_eps) / nb;
      break;
  }
  return out;
}

PairwiseGaps pairwise_gaps(const Components& c, std::size_t n, std::size_t budget,
                           std::size_t k_tot) {
  check_budget(n, budget, k_tot);
  if (budget % k_tot != 0)
    throw Error(ErrorKind::IndivisibleBudget, "gaps involving AllJudges need B divisible by K_tot");
  const double nb = static_cast<double>(n) * static_cast<double>(budget);
  const double spread = static_cast<double>(k_tot - 1) * c.sigma2_beta;
  return {spread / nb, c.sigma2_gamma / nb, (spread - c.sigma2_gamma) / nb};
}

Recommendation recommend_strategy(const Components& c, std::size_t n, std::size_t budget,
                                  std::size_t k_tot) {
  Recommendation r;
  r.budget = budget;
  r.gaps = pairwise_gaps(c, n, budget, k_tot);
  r.threshold = static_cast<double>(k_tot) - 1.0;
  r.ratio = c.sigma2_beta > 0.0 ? c.sigma2_gamma / c.sigma2_beta
                                : (c.sigma2_gamma > 0.0 ? std::numeric_limits<double>::infinity()
                                                        : std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < 3; ++i)
    r.variances[i] = strategy_variance(kAllStrategies[i], c, n, budget, k_tot).variance;
  // Compare on the unscaled numerator so ties are exact rather than rounded.
  const bool all_first = static_cast<double>(k_tot - 1) * c.sigma2_beta <= c.sigma2_gamma;
  r.ranking = all_first ? std::array{Strategy::Cyclic, Strategy::AllJudges, Strategy::RandomSingle}
                        : std::array{Strategy::Cyclic, Strategy::RandomSingle, Strategy::AllJudges};
  return r;
}

double scenario_generation_tradeoff(const Components& c, std::size_t total_generations,
                                    std::size_t m) {
  if (m < 1) throw Error(ErrorKind::InvalidDesign, "m must be at least 1");
  if (total_generations < 1 || total_generations % m != 0)
    throw Error(ErrorKind::InvalidDesign, "B_gen must be a positive multiple of m");
  return (static_cast<double>(m) * c.sigma2_alpha + c.sigma2_beta + c.sigma2_eps) /
         static_cast<double>(total_generations);
}

void to_json(nlohmann::json& j, const VarianceBreakdown& b) {
  j = {{"scenario", b.scenario},
       {"generation", b.generation},
       {"judge", b.judge},
       {"residual", b.residual},
       {"total", b.total}};
}

void to_json(nlohmann::json& j, const Recommendation& r) {
  nlohmann::json ranking = nlohmann::json::array();
  for (Strategy s : r.ranking) ranking.push_back(std::string(to_string(s)));
  j["ranking"] = ranking;
  // JSON has no infinity; +inf and undefined ratios are written as strings.
  if (std::isinf(r.ratio))
    j["ratio"] = "inf";
  else if (std::isnan(r.ratio))
    j["ratio"] = "undefined";
  else
    j["ratio"] = r.ratio;
  j["threshold"] = r.threshold;
  j["B"] = r.budget;
  j["gaps"] = {{"V_A-V_C", r.gaps.all_minus_cyclic},
               {"V_B-V_C", r.gaps.random_minus_cyclic},
               {"V_A-V_B", r.gaps.all_minus_random}};
  j["variances"] = {{"AllJudges", r.variances[0]},
                    {"RandomSingle", r.variances[1]},
                    {"Cyclic", r.variances[2]}};
}

}  // namespace judgevar
