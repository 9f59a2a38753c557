#include "judgevar/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "judgevar/estimator.hpp"
#include "judgevar/simd/kernels.hpp"

namespace judgevar {

// ---------------------------------------------------------------- noise --

NoiseFamily NoiseFamily::parse(const std::string& text) {
  if (text == "gaussian" || text == "normal") return gaussian();
  if (text == "uniform") return uniform();
  std::string df_text;
  if (text.rfind("student_t:", 0) == 0)
    df_text = text.substr(10);
  else if (text.rfind("t", 0) == 0 && text.size() > 1)
    df_text = text.substr(1);
  if (!df_text.empty()) {
    std::size_t used = 0;
    double df = 0.0;
    try {
      df = std::stod(df_text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == df_text.size()) return student_t(df);
  }
  throw Error(ErrorKind::InvalidConfig, "unknown noise family '" + text + "'");
}

std::string NoiseFamily::name() const {
  switch (kind) {
    case Kind::Gaussian: return "gaussian";
    case Kind::Uniform: return "uniform";
    case Kind::StudentT: return "student_t:" + format_double(df);
  }
  return "?";
}

double NoiseFamily::draw(Philox& rng) const {
  switch (kind) {
    case Kind::Gaussian: return rng.normal();
    case Kind::Uniform: return (2.0 * rng.uniform01() - 1.0) * std::sqrt(3.0);
    case Kind::StudentT: {
      const double chi2 = 2.0 * rng.gamma(df / 2.0);
      return rng.normal() / std::sqrt(chi2 / df) * std::sqrt((df - 2.0) / df);
    }
  }
  return 0.0;
}

// --------------------------------------------------------------- config --

double SimulationConfig::sigma2_gamma() const noexcept {
  if (gamma.empty()) return 0.0;
  double sq = 0.0;
  for (double g : gamma) sq += g * g;
  return sq / static_cast<double>(gamma.size());
}

Components SimulationConfig::components() const noexcept {
  return {sigma_alpha * sigma_alpha, sigma_beta * sigma_beta, sigma2_gamma(), sigma_eps * sigma_eps};
}

void SimulationConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidConfig, what); };
  for (double s : {sigma_alpha, sigma_beta, sigma_eps})
    if (!(s >= 0.0) || !std::isfinite(s)) fail("standard deviations must be finite and non-negative");
  if (!std::isfinite(mu)) fail("mu must be finite");
  if (n < 1 || m < 1) fail("n and m must be at least 1");
  if (gamma.empty()) fail("gamma needs one offset per judge");
  double total = 0.0;
  for (double g : gamma) {
    if (!std::isfinite(g)) fail("judge offsets must be finite");
    total += g;
  }
  if (std::fabs(total) > 1e-9) fail("judge offsets must sum to zero (got " + format_double(total) + ")");
  for (const NoiseFamily* f : {&alpha_family, &beta_family, &eps_family})
    if (f->kind == NoiseFamily::Kind::StudentT && !(f->df > 2.0))
      fail("student_t needs df > 2 for a finite variance");
  if (clip_to_scale && !(clip_to_scale->first < clip_to_scale->second))
    fail("clip range must satisfy min < max");
}

std::vector<double> scaled_offsets(std::span<const double> pattern, double sigma2_gamma) {
  if (pattern.empty()) throw Error(ErrorKind::InvalidConfig, "offset pattern is empty");
  if (sigma2_gamma < 0.0) throw Error(ErrorKind::InvalidConfig, "sigma2_gamma must be non-negative");
  const double mean = std::accumulate(pattern.begin(), pattern.end(), 0.0) / pattern.size();
  std::vector<double> out(pattern.begin(), pattern.end());
  double sq = 0.0;
  for (double& g : out) {
    g -= mean;
    sq += g * g;
  }
  sq /= static_cast<double>(out.size());
  if (sigma2_gamma == 0.0) return std::vector<double>(out.size(), 0.0);
  if (sq == 0.0) throw Error(ErrorKind::InvalidConfig, "constant offset pattern cannot be rescaled");
  const double scale = std::sqrt(sigma2_gamma / sq);
  for (double& g : out) g *= scale;
  // Re-centre after scaling so the sum is zero to rounding.
  const double drift = std::accumulate(out.begin(), out.end(), 0.0) / out.size();
  for (double& g : out) g -= drift;
  return out;
}

// ------------------------------------------------------------ simulate --

ScoreTensor simulate_tensor(const SimulationConfig& c) {
  c.validate();
  const std::size_t n = c.n, m = c.m, k = c.k_tot();
  Philox alpha_rng(c.seed, 0), beta_rng(c.seed, 1), eps_rng(c.seed, 2);
  std::vector<double> scores(n * m * k);
  for (std::size_t i = 0; i < n; ++i) {
    const double alpha = c.sigma_alpha * c.alpha_family.draw(alpha_rng);
    for (std::size_t j = 0; j < m; ++j) {
      const double beta = c.sigma_beta * c.beta_family.draw(beta_rng);
      double* cell = scores.data() + (i * m + j) * k;
      for (std::size_t l = 0; l < k; ++l)
        cell[l] = c.mu + alpha + beta + c.gamma[l] + c.sigma_eps * c.eps_family.draw(eps_rng);
    }
  }
  if (c.clip_to_scale) {
    const auto [lo, hi] = *c.clip_to_scale;
    for (double& x : scores) x = std::clamp(x, lo, hi);
    return ScoreTensor::from_values(n, m, k, std::move(scores), lo, hi);
  }
  return ScoreTensor::from_values(n, m, k, std::move(scores));
}

// ---------------------------------------------------------------- pools --

double PoolConstants::for_strategy(Strategy s) const noexcept {
  switch (s) {
    case Strategy::AllJudges: return c_all;
    case Strategy::RandomSingle: return c_random;
    case Strategy::Cyclic: return c_cyclic;
  }
  return 0.0;
}

PoolConstants pool_constants(const ScoreTensor& t) {
  const std::size_t n = t.scenarios(), m = t.generations(), k = t.judges();
  if (m == 0) throw Error(ErrorKind::DegeneratePool, "no generations in the pool");
  const Marginals mg = compute_marginals(t);
  const auto& kern = simd::active();
  std::vector<double> row_sums(m), col_means(k), zeros(m, 0.0);
  double sum_a = 0.0, sum_b = 0.0, sum_c = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto block = t.scenario(i);
    const auto gen_means = std::span<const double>(mg.cell_means).subspan(i * m, m);
    sum_a += simd::sum_sq_dev(gen_means, mg.scenario_means[i]);
    sum_b += simd::sum_sq_dev(block, mg.scenario_means[i]);
    std::fill(col_means.begin(), col_means.end(), 0.0);
    kern.row_col_sums(block.data(), m, k, row_sums.data(), col_means.data());
    for (double& v : col_means) v /= static_cast<double>(m);
    sum_c += kern.double_centered_ss(block.data(), m, k, zeros.data(), col_means.data());
  }
  const double nd = static_cast<double>(n), md = static_cast<double>(m), kd = static_cast<double>(k);
  return {kd * sum_a / (nd * md), sum_b / (nd * md * kd), sum_c / (nd * kd * md)};
}

// ------------------------------------------------------------ subsample --

Subsampler::Subsampler(const ScoreTensor& tensor)
    : tensor_(&tensor), generation_means_(compute_marginals(tensor).cell_means) {}

void Subsampler::check_budget(Strategy s, std::size_t budget) const {
  if (budget < 1) throw Error(ErrorKind::InvalidDesign, "budget must be at least 1");
  const std::size_t k = tensor_->judges();
  if (s != Strategy::RandomSingle && budget % k != 0)
    throw Error(ErrorKind::IndivisibleBudget, std::string(to_string(s)) + " needs B divisible by K_tot (B=" +
                                                  std::to_string(budget) + ", K_tot=" + std::to_string(k) + ")");
  if (tensor_->cells() >= 0xffffffffull)
    throw Error(ErrorKind::InvalidArgument, "tensor too large for 32-bit gather indices");
}

double Subsampler::score(Strategy s, std::size_t budget, Philox& rng) const {
  const ScoreTensor& t = *tensor_;
  const std::size_t n = t.scenarios(), m = t.generations(), k = t.judges();
  const auto& kern = simd::active();
  thread_local std::vector<std::uint32_t> idx;
  std::vector<double> scenario_scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    switch (s) {
      case Strategy::AllJudges: {
        const std::size_t draws = budget / k;
        idx.resize(draws);
        const auto base = static_cast<std::uint32_t>(i * m);
        for (auto& x : idx) x = base + static_cast<std::uint32_t>(rng.uniform_index(m));
        total = kern.gather_sum(generation_means_.data(), idx.data(), draws) / static_cast<double>(draws);
        break;
      }
      case Strategy::RandomSingle: {
        idx.resize(budget);
        const auto base = static_cast<std::uint32_t>(i * m * k);
        for (auto& x : idx) x = base + static_cast<std::uint32_t>(rng.uniform_index(m * k));
        total = kern.gather_sum(t.values().data(), idx.data(), budget) / static_cast<double>(budget);
        break;
      }
      case Strategy::Cyclic: {
        const std::size_t per_judge = budget / k;
        idx.resize(budget);
        std::size_t at = 0;
        for (std::size_t l = 0; l < k; ++l)
          for (std::size_t d = 0; d < per_judge; ++d)
            idx[at++] = static_cast<std::uint32_t>((i * m + rng.uniform_index(m)) * k + l);
        total = kern.gather_sum(t.values().data(), idx.data(), budget) / static_cast<double>(budget);
        break;
      }
    }
    scenario_scores[i] = total;
  }
  return kern.sum(scenario_scores.data(), n) / static_cast<double>(n);
}

double subsample_score(const ScoreTensor& tensor, Strategy s, std::size_t budget, std::uint64_t seed) {
  Subsampler sub(tensor);
  sub.check_budget(s, budget);
  Philox rng(seed);
  return sub.score(s, budget, rng);
}

// -------------------------------------------------------------- harness --

namespace {

std::uint64_t grid_label(Strategy s, std::size_t budget) {
  return (static_cast<std::uint64_t>(s) << 48) ^ static_cast<std::uint64_t>(budget);
}

// Runs body(r) for r in [0, count) over hardware threads; each index is
// written by exactly one thread so results are order-independent.
template <class Body>
void parallel_for(std::size_t count, Body&& body) {
  const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min<std::size_t>(hw, std::max<std::size_t>(1, count / 64));
  if (workers <= 1) {
    for (std::size_t r = 0; r < count; ++r) body(r);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t r = w; r < count; r += workers) body(r);
    });
  for (auto& th : pool) th.join();
}

double sample_variance(std::span<const double> xs) {
  const double mean = simd::scalar_kernels().sum(xs.data(), xs.size()) / static_cast<double>(xs.size());
  return simd::scalar_kernels().sum_sq_dev(xs.data(), xs.size(), mean) /
         static_cast<double>(xs.size() - 1);
}

}  // namespace

bool HarnessResult::within(double n_se) const noexcept {
  return std::fabs(empirical_variance - predicted_variance) <= n_se * standard_error;
}

HarnessResult run_harness(const ScoreTensor& tensor, Strategy s, std::size_t budget, std::size_t reps,
                          std::uint64_t seed) {
  if (reps < 2) throw Error(ErrorKind::InvalidArgument, "harness needs reps >= 2");
  Subsampler sub(tensor);
  sub.check_budget(s, budget);
  const std::uint64_t key = derive_seed(seed, grid_label(s, budget));
  std::vector<double> scores(reps);
  parallel_for(reps, [&](std::size_t r) {
    Philox rng(key, r);
    scores[r] = sub.score(s, budget, rng);
  });
  HarnessResult out;
  out.strategy = s;
  out.budget = budget;
  out.reps = reps;
  out.empirical_variance = sample_variance(scores);
  out.predicted_variance = pool_constants(tensor).for_strategy(s) /
                           (static_cast<double>(tensor.scenarios()) * static_cast<double>(budget));
  out.standard_error = out.empirical_variance * std::sqrt(2.0 / static_cast<double>(reps - 1));
  return out;
}

std::vector<HarnessResult> variance_curve(const ScoreTensor& tensor, std::span<const std::size_t> budgets,
                                          std::size_t reps, std::uint64_t seed) {
  if (reps < 2) throw Error(ErrorKind::InvalidArgument, "harness needs reps >= 2");
  const PoolConstants pools = pool_constants(tensor);
  const double n = static_cast<double>(tensor.scenarios());
  const std::size_t k = tensor.judges();
  std::vector<HarnessResult> out;
  for (Strategy s : kAllStrategies) {
    for (std::size_t b : budgets) {
      if (b == 0 || (s != Strategy::RandomSingle && b % k != 0)) {
        HarnessResult skip;
        skip.strategy = s;
        skip.budget = b;
        skip.reps = reps;
        skip.predicted_variance = b ? pools.for_strategy(s) / (n * static_cast<double>(b)) : 0.0;
        skip.skip_reason = b == 0 ? "budget must be positive"
                                  : "budget not divisible by K_tot=" + std::to_string(k);
        out.push_back(std::move(skip));
        continue;
      }
      out.push_back(run_harness(tensor, s, b, reps, seed));
    }
  }
  return out;
}

CalibrationReport calibrate(std::span<const HarnessResult> curve) {
  CalibrationReport rep;
  for (const auto& r : curve) {
    if (r.skipped()) continue;
    ++rep.points;
    if (r.within(4.0)) ++rep.within_4se;
  }
  rep.fraction_within = rep.points ? static_cast<double>(rep.within_4se) / rep.points : 1.0;
  rep.calibration_pass = rep.fraction_within >= 0.95;

  for (const auto& c : curve) {
    if (c.strategy != Strategy::Cyclic || c.skipped()) continue;
    bool ok = true;
    for (const auto& other : curve) {
      if (other.skipped() || other.budget != c.budget || other.strategy == Strategy::Cyclic) continue;
      if (c.empirical_variance > other.empirical_variance + 2.0 * c.standard_error) ok = false;
    }
    if (!ok) {
      rep.cyclic_lowest = false;
      rep.cyclic_violations.push_back(c.budget);
    }
  }
  return rep;
}

// -------------------------------------------------------- decomposition --

double DecompositionCheck::z() const noexcept {
  if (standard_error == 0.0) return empirical_variance == predicted_variance ? 0.0 : INFINITY;
  return (empirical_variance - predicted_variance) / standard_error;
}

DecompositionCheck check_variance_decomposition(const SimulationConfig& base, std::size_t m,
                                                std::size_t k, std::size_t datasets,
                                                std::uint64_t seed) {
  if (datasets < 2) throw Error(ErrorKind::InvalidArgument, "need at least two datasets");
  SimulationConfig cfg = base;
  cfg.m = m;
  cfg.validate();
  const std::size_t k_tot = cfg.k_tot();
  Design design{cfg.n, m, k, k_tot, 0};
  design.validate();

  std::vector<double> means(datasets);
  parallel_for(datasets, [&](std::size_t d) {
    SimulationConfig local = cfg;
    local.seed = derive_seed(seed, d);
    const ScoreTensor full = simulate_tensor(local);
    std::vector<std::size_t> judges(k_tot);
    std::iota(judges.begin(), judges.end(), std::size_t{0});
    Philox pick(local.seed, 3);
    shuffle(std::span<std::size_t>(judges), pick);
    judges.resize(k);
    means[d] = grand_mean(full.select_judges(judges));
  });

  DecompositionCheck out;
  out.m = m;
  out.k = k;
  out.datasets = datasets;
  const double r = static_cast<double>(datasets);
  const double mean = std::accumulate(means.begin(), means.end(), 0.0) / r;
  double m2 = 0.0, m4 = 0.0;
  for (double x : means) {
    const double d = (x - mean) * (x - mean);
    m2 += d;
    m4 += d * d;
  }
  out.empirical_variance = m2 / (r - 1.0);
  const double pop_var = m2 / r;
  // Var(s^2) ~ (mu4 - sigma^4) / R for large R.
  out.standard_error = std::sqrt(std::max(0.0, m4 / r - pop_var * pop_var) / r);
  out.predicted_variance = benchmark_variance(cfg.components(), design).total;
  return out;
}

// ----------------------------------------------------------------- json --

void to_json(nlohmann::json& j, const SimulationConfig& c) {
  j = {{"mu", c.mu},
       {"sigma_alpha", c.sigma_alpha},
       {"sigma_beta", c.sigma_beta},
       {"sigma_eps", c.sigma_eps},
       {"gamma", c.gamma},
       {"n", c.n},
       {"m", c.m},
       {"K_tot", c.k_tot()},
       {"noise_family",
        {{"alpha", c.alpha_family.name()}, {"beta", c.beta_family.name()}, {"eps", c.eps_family.name()}}},
       {"seed", c.seed}};
  j["clip_to_scale"] = c.clip_to_scale ? nlohmann::json::array({c.clip_to_scale->first, c.clip_to_scale->second})
                                       : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, SimulationConfig& c) {
  try {
    c = SimulationConfig{};
    c.mu = j.value("mu", 0.0);
    c.sigma_alpha = j.value("sigma_alpha", 0.0);
    c.sigma_beta = j.value("sigma_beta", 0.0);
    c.sigma_eps = j.value("sigma_eps", 0.0);
    c.gamma = j.at("gamma").get<std::vector<double>>();
    c.n = j.at("n").get<std::size_t>();
    c.m = j.value("m", std::size_t{1});
    c.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("noise_family")) {
      const auto& nf = j["noise_family"];
      if (nf.is_string()) {
        c.alpha_family = c.beta_family = c.eps_family = NoiseFamily::parse(nf.get<std::string>());
      } else {
        c.alpha_family = NoiseFamily::parse(nf.value("alpha", "gaussian"));
        c.beta_family = NoiseFamily::parse(nf.value("beta", "gaussian"));
        c.eps_family = NoiseFamily::parse(nf.value("eps", "gaussian"));
      }
    }
    if (j.contains("clip_to_scale") && !j["clip_to_scale"].is_null()) {
      const auto range = j["clip_to_scale"].get<std::vector<double>>();
      if (range.size() != 2) throw Error(ErrorKind::InvalidConfig, "clip_to_scale needs [min, max]");
      c.clip_to_scale = std::make_pair(range[0], range[1]);
    }
    if (j.contains("K_tot") && j["K_tot"].get<std::size_t>() != c.gamma.size())
      throw Error(ErrorKind::InvalidConfig, "K_tot does not match the number of offsets");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, e.what());
  }
}

void to_json(nlohmann::json& j, const PoolConstants& p) {
  j = {{"C_A", p.c_all}, {"C_B", p.c_random}, {"C_C", p.c_cyclic}};
}

void to_json(nlohmann::json& j, const HarnessResult& r) {
  j = {{"strategy", std::string(to_string(r.strategy))},
       {"B", r.budget},
       {"reps", r.reps},
       {"empirical_variance", r.empirical_variance},
       {"predicted_variance", r.predicted_variance},
       {"standard_error", r.standard_error}};
  if (r.skipped()) j["skip_reason"] = r.skip_reason;
}

}  // namespace judgevar
