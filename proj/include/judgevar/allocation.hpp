#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>

#include <json.hpp>

#include "judgevar/estimator.hpp"

namespace judgevar {

enum class Strategy { AllJudges, RandomSingle, Cyclic };

inline constexpr std::array<Strategy, 3> kAllStrategies = {Strategy::AllJudges, Strategy::RandomSingle,
                                                           Strategy::Cyclic};

std::string_view to_string(Strategy s) noexcept;
/// Accepts the canonical names plus the short aliases all-judges / random / cyclic / A / B / C.
Strategy parse_strategy(std::string_view name);

/// (K_tot - K) / (K_tot - 1): variance shrinkage of a mean of K offsets drawn
/// without replacement from K_tot centred ones.
double fpc_factor(std::size_t k, std::size_t k_tot);

/// Exact variance of the mean of a size-k subset drawn uniformly without
/// replacement from `values`, by enumerating every subset. `values` must sum
/// to zero (within 1e-12 of their scale).
double fpc_brute_force(std::span<const double> values, std::size_t k);

/// Per-term contributions to Var(X̄) at an operating point.
struct VarianceBreakdown {
  double scenario = 0.0;    // sigma2_alpha / n
  double generation = 0.0;  // sigma2_beta / (n m)
  double judge = 0.0;       // sigma2_gamma / K * FPC
  double residual = 0.0;    // sigma2_eps / (n m K)
  double total = 0.0;
};

VarianceBreakdown benchmark_variance(const Components& c, const Design& design);

struct StrategyVariance {
  Strategy strategy = Strategy::Cyclic;
  std::size_t budget = 0;
  double variance = 0.0;       // excludes the scenario term
  double scenario_term = 0.0;  // sigma2_alpha / n, identical for every strategy
};

/// Closed-form variance for `strategy` with B judge calls per scenario.
/// AllJudges requires K_tot | B (IndivisibleBudget otherwise).
StrategyVariance strategy_variance(Strategy strategy, const Components& c, std::size_t n,
                                   std::size_t budget, std::size_t k_tot);

struct PairwiseGaps {
  double all_minus_cyclic = 0.0;     // V_A - V_C
  double random_minus_cyclic = 0.0;  // V_B - V_C
  double all_minus_random = 0.0;     // V_A - V_B
};

PairwiseGaps pairwise_gaps(const Components& c, std::size_t n, std::size_t budget, std::size_t k_tot);

struct Recommendation {
  std::array<Strategy, 3> ranking{};
  double ratio = 0.0;      // sigma2_gamma / sigma2_beta, +inf when sigma2_beta = 0
  double threshold = 0.0;  // K_tot - 1
  std::size_t budget = 0;
  PairwiseGaps gaps;
  std::array<double, 3> variances{};  // V_A, V_B, V_C at `budget`
};

/// Cyclic always first; AllJudges ahead of RandomSingle iff
/// (K_tot - 1) sigma2_beta >= sigma2_gamma (ties go to AllJudges).
Recommendation recommend_strategy(const Components& c, std::size_t n, std::size_t budget,
                                  std::size_t k_tot);

/// Cyclic-design variance when a total of B_gen generations is split into
/// B_gen / m scenarios of m generations: (m sigma2_alpha + sigma2_beta + sigma2_eps) / B_gen.
double scenario_generation_tradeoff(const Components& c, std::size_t total_generations, std::size_t m);

void to_json(nlohmann::json& j, const VarianceBreakdown& b);
void to_json(nlohmann::json& j, const Recommendation& r);

}  // namespace judgevar
