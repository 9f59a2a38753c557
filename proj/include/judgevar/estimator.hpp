#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "judgevar/score_data.hpp"

namespace judgevar {

/// Marginal means of a tensor: per (scenario, generation) cell, per judge,
/// per scenario, and overall.
struct Marginals {
  std::vector<double> cell_means;      // X̄_ij·, length n*m
  std::vector<double> judge_means;     // X̄_··l, length K
  std::vector<double> scenario_means;  // X̄_i··, length n
  double grand = 0.0;                  // X̄_···
};

Marginals compute_marginals(const ScoreTensor& tensor);

/// Residual mean square after removing cell and judge main effects,
/// denominator (nm - 1)(K - 1). Throws DegenerateDesign when K = 1 or nm = 1.
double residual_mean_square(const ScoreTensor& tensor);

/// K/(n(m-1)) * sum_ij (X̄_ij· - X̄_i··)^2. Throws DegenerateDesign when m = 1.
double generation_mean_square(const ScoreTensor& tensor);

/// mK/(n-1) * sum_i (X̄_i·· - X̄)^2. Throws DegenerateDesign when n = 1.
double scenario_mean_square(const ScoreTensor& tensor);

struct MeanSquares {
  double ms_w = 0.0;
  double ms_s = 0.0;
  std::optional<double> ms_g;  // absent when m = 1
};

/// Method-of-moments variance components for the crossed design.
///
/// Negative raw estimates of the scenario, generation and judge components
/// are clamped to zero and their names recorded in `truncated`. With a single
/// generation per scenario the generation component is not identifiable:
/// `sigma2_beta` is empty and `sigma2_alpha` absorbs it (an upper bound).
struct VarianceComponents {
  double mu_hat = 0.0;
  double sigma2_alpha = 0.0;
  std::optional<double> sigma2_beta = 0.0;
  double sigma2_gamma = 0.0;
  double sigma2_eps = 0.0;
  std::vector<double> gamma_hat;
  std::set<std::string> truncated;
  MeanSquares mean_squares;
  std::size_t n = 0, m = 0, k = 0, k_tot = 0;

  bool beta_indeterminate() const noexcept { return !sigma2_beta.has_value(); }
  bool alpha_is_upper_bound() const noexcept { return beta_indeterminate(); }
};

/// Plain component values consumed by the closed-form allocation formulas.
struct Components {
  double sigma2_alpha = 0.0;
  double sigma2_beta = 0.0;
  double sigma2_gamma = 0.0;
  double sigma2_eps = 0.0;

  static Components from(const VarianceComponents& vc) noexcept {
    return {vc.sigma2_alpha, vc.sigma2_beta.value_or(0.0), vc.sigma2_gamma, vc.sigma2_eps};
  }
};

/// Requires K = K_tot >= 2 and n >= 2 (judge offsets are defined relative to
/// the full panel).
VarianceComponents estimate_components(const ScoreTensor& tensor, std::size_t k_tot);

/// Two-way (subjects x judges) sums of squares, subjects = (scenario,
/// generation) pairs. `ss_residual` is computed directly from double-centred
/// residuals rather than by subtraction.
struct AnovaTable {
  double ss_total = 0.0;
  double ss_subjects = 0.0;
  double ss_judges = 0.0;
  double ss_residual = 0.0;
  std::size_t subjects = 0;
  std::size_t judges = 0;
};

AnovaTable two_way_anova(const ScoreTensor& tensor);

struct FTestResult {
  double f = 0.0;
  long df1 = 0;
  long df2 = 0;
  double p_value = 1.0;
};

/// F test for a judge main effect. Throws DegenerateDesign for K < 2 or
/// nm < 2 and ZeroResidual when the residual sum of squares vanishes.
FTestResult judge_f_test(const ScoreTensor& tensor);

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double x, double a, double b);

/// Upper-tail probability of the F(df1, df2) distribution at `f`.
double f_upper_tail(double f, double df1, double df2);

void to_json(nlohmann::json& j, const VarianceComponents& vc);
void from_json(const nlohmann::json& j, VarianceComponents& vc);
void to_json(nlohmann::json& j, const FTestResult& r);

}  // namespace judgevar
