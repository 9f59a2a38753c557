#include "judgevar/estimator.hpp"

#include <cmath>
#include <limits>

#include "judgevar/simd/kernels.hpp"

namespace judgevar {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::DegenerateDesign, what);
}

double log_gamma(double x) {
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

// Continued fraction for I_x(a, b) (modified Lentz). Converges quickly for
// x < (a + 1) / (a + b + 2).
double beta_continued_fraction(double x, double a, double b) {
  constexpr int kMaxIter = 100000;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

// I_x(a, b) with y = 1 - x supplied separately to avoid cancellation.
double incomplete_beta_xy(double x, double y, double a, double b) {
  if (x <= 0.0) return 0.0;
  if (y <= 0.0) return 1.0;
  const double log_front =
      a * std::log(x) + b * std::log(y) - (log_gamma(a) + log_gamma(b) - log_gamma(a + b));
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(x, a, b) / a;
  return 1.0 - front * beta_continued_fraction(y, b, a) / b;
}

}  // namespace

Marginals compute_marginals(const ScoreTensor& t) {
  const std::size_t n = t.scenarios(), m = t.generations(), k = t.judges();
  const std::size_t rows = n * m;
  Marginals out;
  out.cell_means.assign(rows, 0.0);
  out.judge_means.assign(k, 0.0);
  out.scenario_means.assign(n, 0.0);
  simd::active().row_col_sums(t.values().data(), rows, k, out.cell_means.data(),
                              out.judge_means.data());
  for (double& v : out.cell_means) v /= static_cast<double>(k);
  for (double& v : out.judge_means) v /= static_cast<double>(rows);
  for (std::size_t i = 0; i < n; ++i)
    out.scenario_means[i] =
        simd::sum(std::span<const double>(out.cell_means).subspan(i * m, m)) / static_cast<double>(m);
  out.grand = grand_mean(t);
  return out;
}

namespace {

double residual_ss(const ScoreTensor& t, const Marginals& mg) {
  std::vector<double> col_center(mg.judge_means.size());
  for (std::size_t l = 0; l < col_center.size(); ++l) col_center[l] = mg.judge_means[l] - mg.grand;
  return simd::active().double_centered_ss(t.values().data(), t.scenarios() * t.generations(),
                                           t.judges(), mg.cell_means.data(), col_center.data());
}

double generation_ss(const ScoreTensor& t, const Marginals& mg) {
  const std::size_t m = t.generations();
  double ss = 0.0;
  for (std::size_t i = 0; i < t.scenarios(); ++i)
    ss += simd::sum_sq_dev(std::span<const double>(mg.cell_means).subspan(i * m, m),
                           mg.scenario_means[i]);
  return ss;
}

double ms_w(const ScoreTensor& t, const Marginals& mg) {
  const std::size_t nm = t.scenarios() * t.generations(), k = t.judges();
  require(k >= 2, "residual mean square needs K >= 2");
  require(nm >= 2, "residual mean square needs n*m >= 2");
  return residual_ss(t, mg) / (static_cast<double>(nm - 1) * static_cast<double>(k - 1));
}

double ms_g(const ScoreTensor& t, const Marginals& mg) {
  const std::size_t n = t.scenarios(), m = t.generations(), k = t.judges();
  require(m >= 2, "generation mean square needs m >= 2");
  return static_cast<double>(k) / (static_cast<double>(n) * static_cast<double>(m - 1)) *
         generation_ss(t, mg);
}

double ms_s(const ScoreTensor& t, const Marginals& mg) {
  const std::size_t n = t.scenarios(), m = t.generations(), k = t.judges();
  require(n >= 2, "scenario mean square needs n >= 2");
  return static_cast<double>(m * k) / static_cast<double>(n - 1) *
         simd::sum_sq_dev(mg.scenario_means, mg.grand);
}

}  // namespace

double residual_mean_square(const ScoreTensor& t) { return ms_w(t, compute_marginals(t)); }
double generation_mean_square(const ScoreTensor& t) { return ms_g(t, compute_marginals(t)); }
double scenario_mean_square(const ScoreTensor& t) { return ms_s(t, compute_marginals(t)); }

VarianceComponents estimate_components(const ScoreTensor& t, std::size_t k_tot) {
  const std::size_t n = t.scenarios(), m = t.generations(), k = t.judges();
  if (k != k_tot)
    throw Error(ErrorKind::InvalidDesign,
                "judge offsets are defined over the full panel: tensor has K=" + std::to_string(k) +
                    " judges but K_tot=" + std::to_string(k_tot));
  require(n >= 2, "variance components need n >= 2");
  require(k >= 2, "variance components need K >= 2");

  const Marginals mg = compute_marginals(t);
  VarianceComponents vc;
  vc.n = n;
  vc.m = m;
  vc.k = k;
  vc.k_tot = k_tot;
  vc.mu_hat = mg.grand;
  vc.mean_squares.ms_w = ms_w(t, mg);
  vc.mean_squares.ms_s = ms_s(t, mg);
  vc.sigma2_eps = vc.mean_squares.ms_w;

  const double kd = static_cast<double>(k), md = static_cast<double>(m);
  double alpha_raw;
  if (m >= 2) {
    vc.mean_squares.ms_g = ms_g(t, mg);
    const double beta_raw = (*vc.mean_squares.ms_g - vc.mean_squares.ms_w) / kd;
    alpha_raw = (vc.mean_squares.ms_s - *vc.mean_squares.ms_g) / (md * kd);
    if (beta_raw < 0.0) {
      vc.truncated.insert("sigma2_beta");
      vc.sigma2_beta = 0.0;
    } else {
      vc.sigma2_beta = beta_raw;
    }
  } else {
    // E[MS_S] - E[MS_W] = K(sigma2_alpha + sigma2_beta) at m = 1.
    vc.sigma2_beta.reset();
    alpha_raw = (vc.mean_squares.ms_s - vc.mean_squares.ms_w) / kd;
  }
  if (alpha_raw < 0.0) {
    vc.truncated.insert("sigma2_alpha");
    alpha_raw = 0.0;
  }
  vc.sigma2_alpha = alpha_raw;

  vc.gamma_hat.resize(k);
  double centre = 0.0;
  for (std::size_t l = 0; l < k; ++l) {
    vc.gamma_hat[l] = mg.judge_means[l] - mg.grand;
    centre += vc.gamma_hat[l];
  }
  centre /= kd;
  for (double& g : vc.gamma_hat) g -= centre;

  const double ktd = static_cast<double>(k_tot);
  double sq = 0.0;
  for (double g : vc.gamma_hat) sq += g * g;
  double gamma_raw = sq / ktd - vc.sigma2_eps / (static_cast<double>(n) * md) * (ktd - 1.0) / ktd;
  if (gamma_raw < 0.0) {
    vc.truncated.insert("sigma2_gamma");
    gamma_raw = 0.0;
  }
  vc.sigma2_gamma = gamma_raw;
  return vc;
}

AnovaTable two_way_anova(const ScoreTensor& t) {
  const Marginals mg = compute_marginals(t);
  AnovaTable a;
  a.subjects = t.scenarios() * t.generations();
  a.judges = t.judges();
  a.ss_total = simd::sum_sq_dev(t.values(), mg.grand);
  a.ss_subjects = static_cast<double>(a.judges) * simd::sum_sq_dev(mg.cell_means, mg.grand);
  a.ss_judges = static_cast<double>(a.subjects) * simd::sum_sq_dev(mg.judge_means, mg.grand);
  a.ss_residual = residual_ss(t, mg);
  return a;
}

FTestResult judge_f_test(const ScoreTensor& t) {
  require(t.judges() >= 2, "judge F test needs K >= 2");
  require(t.scenarios() * t.generations() >= 2, "judge F test needs n*m >= 2");
  const AnovaTable a = two_way_anova(t);
  // Residuals of exactly additive data are pure rounding noise.
  if (!(a.ss_residual > 1e-24 * a.ss_total) || a.ss_total == 0.0)
    throw Error(ErrorKind::ZeroResidual, "residual sum of squares is zero; F is undefined");
  FTestResult r;
  r.df1 = static_cast<long>(a.judges - 1);
  r.df2 = static_cast<long>((a.subjects - 1) * (a.judges - 1));
  const double ms_j = a.ss_judges / static_cast<double>(r.df1);
  const double ms_r = a.ss_residual / static_cast<double>(r.df2);
  r.f = ms_j / ms_r;
  r.p_value = f_upper_tail(r.f, static_cast<double>(r.df1), static_cast<double>(r.df2));
  return r;
}

double incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0 && b > 0.0)) throw Error(ErrorKind::InvalidArgument, "incomplete beta needs a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return incomplete_beta_xy(x, 1.0 - x, a, b);
}

double f_upper_tail(double f, double df1, double df2) {
  if (!(df1 >= 1.0 && df2 >= 1.0))
    throw Error(ErrorKind::InvalidArgument, "F distribution needs df1, df2 >= 1");
  if (std::isnan(f)) throw Error(ErrorKind::InvalidArgument, "F statistic is NaN");
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  const double denom = df2 + df1 * f;
  const double p = incomplete_beta_xy(df2 / denom, df1 * f / denom, df2 / 2.0, df1 / 2.0);
  return std::min(1.0, std::max(0.0, p));
}

void to_json(nlohmann::json& j, const VarianceComponents& vc) {
  j = nlohmann::json::object();
  j["mu_hat"] = vc.mu_hat;
  j["sigma2_alpha"] = vc.sigma2_alpha;
  j["sigma2_beta"] = vc.sigma2_beta ? nlohmann::json(*vc.sigma2_beta) : nlohmann::json(nullptr);
  j["sigma2_gamma"] = vc.sigma2_gamma;
  j["sigma2_eps"] = vc.sigma2_eps;
  j["gamma_hat"] = vc.gamma_hat;
  j["truncated"] = vc.truncated;
  j["sigma2_beta_indeterminate"] = vc.beta_indeterminate();
  j["sigma2_alpha_upper_bound"] = vc.alpha_is_upper_bound();
  nlohmann::json ms = {{"MS_W", vc.mean_squares.ms_w}, {"MS_S", vc.mean_squares.ms_s}};
  if (vc.mean_squares.ms_g) ms["MS_G"] = *vc.mean_squares.ms_g;
  j["mean_squares"] = ms;
  j["design"] = {{"n", vc.n}, {"m", vc.m}, {"K", vc.k}, {"K_tot", vc.k_tot}};
}

void from_json(const nlohmann::json& j, VarianceComponents& vc) {
  vc = VarianceComponents{};
  vc.mu_hat = j.value("mu_hat", 0.0);
  vc.sigma2_alpha = j.at("sigma2_alpha").get<double>();
  const auto& beta = j.at("sigma2_beta");
  if (beta.is_null())
    vc.sigma2_beta.reset();
  else
    vc.sigma2_beta = beta.get<double>();
  vc.sigma2_gamma = j.at("sigma2_gamma").get<double>();
  vc.sigma2_eps = j.at("sigma2_eps").get<double>();
  if (j.contains("gamma_hat")) vc.gamma_hat = j["gamma_hat"].get<std::vector<double>>();
  if (j.contains("truncated")) vc.truncated = j["truncated"].get<std::set<std::string>>();
  if (j.contains("mean_squares")) {
    const auto& ms = j["mean_squares"];
    vc.mean_squares.ms_w = ms.value("MS_W", 0.0);
    vc.mean_squares.ms_s = ms.value("MS_S", 0.0);
    if (ms.contains("MS_G")) vc.mean_squares.ms_g = ms["MS_G"].get<double>();
  }
  if (j.contains("design")) {
    const auto& d = j["design"];
    vc.n = d.value("n", std::size_t{0});
    vc.m = d.value("m", std::size_t{0});
    vc.k = d.value("K", std::size_t{0});
    vc.k_tot = d.value("K_tot", std::size_t{0});
  }
  for (double v : {vc.sigma2_alpha, vc.sigma2_beta.value_or(0.0), vc.sigma2_gamma, vc.sigma2_eps})
    if (!(v >= 0.0) || !std::isfinite(v))
      throw Error(ErrorKind::InvalidArgument, "variance components must be finite and non-negative");
}

void to_json(nlohmann::json& j, const FTestResult& r) {
  j = {{"F", r.f}, {"df1", r.df1}, {"df2", r.df2}, {"p_value", r.p_value}};
}

}  // namespace judgevar
