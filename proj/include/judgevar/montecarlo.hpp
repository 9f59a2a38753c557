#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "judgevar/allocation.hpp"
#include "judgevar/rng.hpp"
#include "judgevar/score_data.hpp"

namespace judgevar {

/// Distribution of a zero-mean, unit-variance random effect before scaling.
struct NoiseFamily {
  enum class Kind { Gaussian, Uniform, StudentT };
  Kind kind = Kind::Gaussian;
  double df = 0.0;  // StudentT only; must exceed 2

  static NoiseFamily gaussian() { return {Kind::Gaussian, 0.0}; }
  static NoiseFamily uniform() { return {Kind::Uniform, 0.0}; }
  static NoiseFamily student_t(double df) { return {Kind::StudentT, df}; }

  /// "gaussian", "uniform", "student_t:<df>" (also "t<df>").
  static NoiseFamily parse(const std::string& text);
  std::string name() const;

  double draw(Philox& rng) const;
};

/// Generative parameters of the additive score model
///   X_ijl = mu + alpha_i + beta_ij + gamma_l + eps_ijl.
/// Standard deviations, not variances, are stored for the random effects.
struct SimulationConfig {
  double mu = 0.0;
  double sigma_alpha = 0.0;
  double sigma_beta = 0.0;
  double sigma_eps = 0.0;
  std::vector<double> gamma;  // one centred offset per judge; size is K_tot
  std::size_t n = 0;
  std::size_t m = 1;
  NoiseFamily alpha_family;
  NoiseFamily beta_family;
  NoiseFamily eps_family;
  std::optional<std::pair<double, double>> clip_to_scale;
  std::uint64_t seed = 0;

  std::size_t k_tot() const noexcept { return gamma.size(); }
  /// (1/K_tot) sum gamma_l^2.
  double sigma2_gamma() const noexcept;
  Components components() const noexcept;

  /// Throws InvalidConfig on negative sigmas, uncentred gamma, bad shape or df <= 2.
  void validate() const;
};

/// Offsets with the shape of `pattern`, centred and rescaled so that their
/// population dispersion equals `sigma2_gamma`.
std::vector<double> scaled_offsets(std::span<const double> pattern, double sigma2_gamma);

/// Draws a full K_tot-judge tensor; deterministic given config.seed.
ScoreTensor simulate_tensor(const SimulationConfig& config);

/// Empirical pool variances for with-replacement subsampling from a finite
/// generation pool; a strategy's subsampled score has variance C / (n B).
struct PoolConstants {
  double c_all = 0.0;     // C_A
  double c_random = 0.0;  // C_B
  double c_cyclic = 0.0;  // C_C

  double for_strategy(Strategy s) const noexcept;
};

PoolConstants pool_constants(const ScoreTensor& tensor);

/// Draws subsampled benchmark scores from a fixed score pool.
///
/// Per scenario: AllJudges averages B/K_tot generation-level means drawn with
/// replacement; RandomSingle averages B cells with (generation, judge) drawn
/// uniformly; Cyclic averages B/K_tot draws from each judge's column. The
/// scenario means are then averaged.
class Subsampler {
 public:
  explicit Subsampler(const ScoreTensor& tensor);

  /// Throws IndivisibleBudget when K_tot does not divide B for AllJudges or
  /// Cyclic, and InvalidDesign for B = 0.
  void check_budget(Strategy s, std::size_t budget) const;

  double score(Strategy s, std::size_t budget, Philox& rng) const;

  const ScoreTensor& tensor() const noexcept { return *tensor_; }

 private:
  const ScoreTensor* tensor_;
  std::vector<double> generation_means_;  // X̄_ig·, length n*m
};

double subsample_score(const ScoreTensor& tensor, Strategy s, std::size_t budget, std::uint64_t seed);

struct HarnessResult {
  Strategy strategy = Strategy::Cyclic;
  std::size_t budget = 0;
  std::size_t reps = 0;
  double empirical_variance = 0.0;
  double predicted_variance = 0.0;
  double standard_error = 0.0;  // empirical_variance * sqrt(2 / (reps - 1))
  std::string skip_reason;      // non-empty when the budget is invalid for the strategy

  bool skipped() const noexcept { return !skip_reason.empty(); }
  bool within(double n_se) const noexcept;
};

/// Replicate r draws from Philox(derive_seed(seed, label), r) where the label
/// encodes (strategy, budget), so results do not depend on thread count or
/// on which other grid points are run.
HarnessResult run_harness(const ScoreTensor& tensor, Strategy s, std::size_t budget,
                          std::size_t reps, std::uint64_t seed);

/// All three strategies over `budgets`; invalid (strategy, budget) pairs are
/// returned with a skip reason instead of throwing.
std::vector<HarnessResult> variance_curve(const ScoreTensor& tensor,
                                          std::span<const std::size_t> budgets, std::size_t reps,
                                          std::uint64_t seed);

struct CalibrationReport {
  std::size_t points = 0;
  std::size_t within_4se = 0;
  double fraction_within = 1.0;
  bool calibration_pass = true;   // fraction_within >= 0.95
  bool cyclic_lowest = true;      // V_C <= min(V_A, V_B) + 2 SE where comparable
  std::vector<std::size_t> cyclic_violations;  // budgets failing the ordering
};

CalibrationReport calibrate(std::span<const HarnessResult> curve);

/// Monte Carlo check of the closed-form Var(X̄): simulate `datasets`
/// independent tensors, keep a uniformly random K-subset of judges in each,
/// and compare the sample variance of the grand mean with the prediction.
struct DecompositionCheck {
  std::size_t m = 0, k = 0, datasets = 0;
  double empirical_variance = 0.0;
  double predicted_variance = 0.0;
  double standard_error = 0.0;  // from the fourth central moment
  double z() const noexcept;
};

DecompositionCheck check_variance_decomposition(const SimulationConfig& config, std::size_t m,
                                                std::size_t k, std::size_t datasets,
                                                std::uint64_t seed);

void to_json(nlohmann::json& j, const SimulationConfig& c);
void from_json(const nlohmann::json& j, SimulationConfig& c);
void to_json(nlohmann::json& j, const PoolConstants& p);
void to_json(nlohmann::json& j, const HarnessResult& r);

}  // namespace judgevar
