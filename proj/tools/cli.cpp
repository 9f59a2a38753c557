#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "judgevar/allocation.hpp"
#include "judgevar/assignment.hpp"
#include "judgevar/estimator.hpp"
#include "judgevar/montecarlo.hpp"
#include "judgevar/score_data.hpp"

namespace judgevar::cli {
namespace {

using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

// FNV-1a, 64-bit.
std::string content_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Parse, "cannot open '" + path + "'");
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
  }
  std::ostringstream os;
  os << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Parameters, input hashes and seed of one invocation. Written next to
/// every output file; only `timestamp` varies between identical runs.
struct RunManifest {
  explicit RunManifest(std::string cmd) : command(std::move(cmd)) {}

  std::string command;
  json parameters = json::object();
  json inputs = json::object();
  std::optional<std::uint64_t> seed;

  void add_input(const std::string& path) { inputs[path] = content_hash(path); }

  void write_for(const std::string& output_path) const {
    json j = {{"command", command},
              {"parameters", parameters},
              {"inputs", inputs},
              {"seed", seed ? json(*seed) : json(nullptr)},
              {"tool_version", kVersion},
              {"timestamp", utc_timestamp()}};
    std::ofstream os(output_path + ".manifest.json");
    os << j.dump(2) << '\n';
  }
};

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
      stream_ = &fallback;
    } else {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw Error(ErrorKind::Parse, "cannot write '" + path + "'");
      stream_ = file_.get();
    }
  }
  std::ostream& get() { return *stream_; }
  bool is_file() const { return file_ != nullptr; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

std::pair<std::size_t, std::size_t> parse_operating_point(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw Error(ErrorKind::Parse, "--operating-point expects m,K");
  try {
    return {std::stoul(text.substr(0, comma)), std::stoul(text.substr(comma + 1))};
  } catch (const std::exception&) {
    throw Error(ErrorKind::Parse, "--operating-point expects two integers m,K");
  }
}

std::pair<double, double> parse_range(const std::string& text, const char* flag) {
  const auto comma = text.find(',');
  try {
    if (comma != std::string::npos)
      return {std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::Parse, std::string(flag) + " expects min,max");
}

VarianceComponents load_components(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Parse, "cannot open '" + path + "'");
  try {
    json j = json::parse(in);
    // Accept both a bare components object and the `estimate` output.
    if (j.contains("components")) j = j["components"];
    return j.get<VarianceComponents>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, path + ": " + e.what());
  }
}

// ------------------------------------------------------------- estimate --

void print_contribution_table(std::ostream& os, const VarianceComponents& vc,
                              const VarianceBreakdown& b, std::size_t m, std::size_t k) {
  auto row = [&](const char* label, std::optional<double> per_obs, double contribution) {
    os << std::left << std::setw(28) << label << std::right << std::setw(12);
    if (per_obs)
      os << std::fixed << std::setprecision(3) << *per_obs;
    else
      os << "n/a";
    os << std::setw(14) << std::fixed << std::setprecision(2) << contribution * 1e3 << '\n';
  };
  os << "mu_hat (mean score)         " << std::fixed << std::setprecision(3) << vc.mu_hat << "\n\n";
  os << std::left << std::setw(28) << "component" << std::right << std::setw(12) << "per-obs"
     << std::setw(14) << "x1e-3" << "   (contribution at m=" << m << ", K=" << k << ")\n";
  row("sigma2_alpha (scenario)", vc.sigma2_alpha, b.scenario);
  row("sigma2_beta (generation)", vc.sigma2_beta, b.generation);
  row("sigma2_gamma (judge)", vc.sigma2_gamma, b.judge);
  row("sigma2_eps (residual)", vc.sigma2_eps, b.residual);
  row("total Var(mean)", std::nullopt, b.total);
  if (b.total > 0.0)
    os << "judge share of Var(mean): " << std::setprecision(1) << 100.0 * b.judge / b.total << "%\n";
  if (!vc.truncated.empty()) {
    os << "truncated to zero:";
    for (const auto& t : vc.truncated) os << ' ' << t;
    os << '\n';
  }
  if (vc.beta_indeterminate())
    os << "note: m = 1, generation variance is not identifiable; sigma2_alpha is an upper bound\n";
  os.unsetf(std::ios::floatfield);
}

int cmd_estimate(const std::string& scores, std::size_t k_tot, const std::string& out_path,
                 const std::string& op_text, const std::string& scale_text, std::ostream& out,
                 std::ostream& err) {
  double lo = -INFINITY, hi = INFINITY;
  if (!scale_text.empty()) std::tie(lo, hi) = parse_range(scale_text, "--scale");
  const ScoreTensor tensor = load_scores(scores, lo, hi);
  const VarianceComponents vc = estimate_components(tensor, k_tot);
  const auto [m_op, k_op] = parse_operating_point(op_text);
  const VarianceBreakdown b =
      benchmark_variance(Components::from(vc), Design{tensor.scenarios(), m_op, k_op, k_tot, 0});

  json doc;
  doc["components"] = vc;
  doc["judge_ids"] = tensor.judge_ids();
  try {
    doc["f_test"] = judge_f_test(tensor);
  } catch (const Error& e) {
    doc["f_test"] = nullptr;
    doc["f_test_error"] = e.what();
  }
  doc["contribution"] = {{"operating_point", {{"n", tensor.scenarios()}, {"m", m_op}, {"K", k_op}, {"K_tot", k_tot}}},
                         {"terms", b},
                         {"judge_share", b.total > 0.0 ? b.judge / b.total : 0.0}};

  Output o(out_path, out);
  o.get() << doc.dump(2) << '\n';
  print_contribution_table(o.is_file() ? out : err, vc, b, m_op, k_op);
  if (o.is_file()) {
    RunManifest man("estimate");
    man.parameters = {{"ktot", k_tot}, {"operating_point", op_text}, {"scale", scale_text}};
    man.add_input(scores);
    man.write_for(out_path);
  }
  return kOk;
}

// -------------------------------------------------------------- predict --

int cmd_predict(const std::string& comp_path, std::size_t n, std::size_t k_tot,
                const std::vector<std::size_t>& budgets, const std::string& out_path, std::ostream& out) {
  const VarianceComponents vc = load_components(comp_path);
  if (n == 0) n = vc.n;
  if (n == 0) throw Error(ErrorKind::Parse, "--n is required when the components file has no design.n");
  const Components c = Components::from(vc);
  Output o(out_path, out);
  auto& os = o.get();
  os << "strategy,B,variance_predicted,note\n";
  for (Strategy s : kAllStrategies) {
    for (std::size_t b : budgets) {
      os << to_string(s) << ',' << b << ',';
      if (s != Strategy::RandomSingle && (k_tot == 0 || b % k_tot != 0)) {
        os << ",skipped: B not divisible by K_tot=" << k_tot << '\n';
        continue;
      }
      os << format_double(strategy_variance(s, c, n, b, k_tot).variance) << ",\n";
    }
  }
  if (o.is_file()) {
    RunManifest man("predict");
    man.parameters = {{"n", n}, {"ktot", k_tot}, {"budgets", budgets}};
    man.add_input(comp_path);
    man.write_for(out_path);
  }
  return kOk;
}

int cmd_recommend(const std::string& comp_path, std::size_t n, std::size_t k_tot, std::size_t budget,
                  const std::string& out_path, std::ostream& out) {
  const VarianceComponents vc = load_components(comp_path);
  if (n == 0) n = vc.n;
  if (n == 0) throw Error(ErrorKind::Parse, "--n is required when the components file has no design.n");
  if (budget == 0) budget = k_tot;
  const Recommendation r = recommend_strategy(Components::from(vc), n, budget, k_tot);
  Output o(out_path, out);
  o.get() << json(r).dump(2) << '\n';
  if (o.is_file()) {
    RunManifest man("recommend");
    man.parameters = {{"n", n}, {"ktot", k_tot}, {"budget", budget}};
    man.add_input(comp_path);
    man.write_for(out_path);
  }
  return kOk;
}

// ----------------------------------------------------------------- plan --

int cmd_plan(std::size_t n, std::size_t m, std::size_t k_tot, const std::string& strategy_name,
             std::optional<std::uint64_t> seed, const std::string& format, const std::string& out_path,
             std::ostream& out, std::ostream& err) {
  const Strategy s = parse_strategy(strategy_name);
  if (s != Strategy::AllJudges && !seed) {
    err << "plan: --seed is required for " << to_string(s) << " plans\n";
    return kInputError;
  }
  const AssignmentPlan plan = make_plan(s, n, m, k_tot, seed.value_or(0));
  const bool as_json = format == "json" || (format.empty() && out_path.size() >= 5 &&
                                            out_path.compare(out_path.size() - 5, 5, ".json") == 0);
  Output o(out_path, out);
  if (as_json) {
    o.get() << json(plan).dump(2) << '\n';
  } else {
    auto& os = o.get();
    os << "scenario_id,generation_id,judge_id\n";
    for (const auto& a : plan.cells) os << a.scenario << ',' << a.generation << ',' << a.judge << '\n';
  }
  if (o.is_file()) {
    RunManifest man("plan");
    man.parameters = {{"n", n}, {"m", m}, {"ktot", k_tot}, {"strategy", std::string(to_string(s))},
                      {"format", as_json ? "json" : "csv"}};
    man.seed = seed;
    man.write_for(out_path);
  }
  return kOk;
}

// ------------------------------------------------------------- simulate --

struct SimFlags {
  std::string config_path;
  std::size_t n = 0, m = 1, k_tot = 0;
  double mu = 0.0;
  double sigma2_alpha = 0.0, sigma2_beta = 0.0, sigma2_gamma = 0.0, sigma2_eps = 0.0;
  std::vector<double> gamma;
  std::string noise = "gaussian";
  std::string clip;

  void add_to(CLI::App* app) {
    app->add_option("--config", config_path, "simulation config JSON (overrides the flags below)");
    app->add_option("--n", n, "scenarios");
    app->add_option("--m", m, "generations per scenario");
    app->add_option("--ktot", k_tot, "judge pool size");
    app->add_option("--mu", mu, "panel-mean score");
    app->add_option("--sigma2-alpha", sigma2_alpha, "scenario variance");
    app->add_option("--sigma2-beta", sigma2_beta, "generation variance");
    app->add_option("--sigma2-gamma", sigma2_gamma, "judge offset dispersion (evenly spaced offsets)");
    app->add_option("--sigma2-eps", sigma2_eps, "residual variance");
    app->add_option("--gamma", gamma, "explicit centred judge offsets")->delimiter(',');
    app->add_option("--noise", noise, "gaussian | uniform | student_t:<df>");
    app->add_option("--clip", clip, "clip scores to min,max (breaks exact predictions)");
  }

  SimulationConfig build(std::optional<std::uint64_t> seed) const {
    SimulationConfig c;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw Error(ErrorKind::Parse, "cannot open '" + config_path + "'");
      try {
        c = json::parse(in).get<SimulationConfig>();
      } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, config_path + ": " + e.what());
      }
      if (seed) c.seed = *seed;
      c.validate();
      return c;
    }
    if (n == 0) throw Error(ErrorKind::Parse, "--n is required without --config");
    c.n = n;
    c.m = m;
    c.mu = mu;
    for (double v : {sigma2_alpha, sigma2_beta, sigma2_eps, sigma2_gamma})
      if (v < 0.0) throw Error(ErrorKind::InvalidConfig, "variances must be non-negative");
    c.sigma_alpha = std::sqrt(sigma2_alpha);
    c.sigma_beta = std::sqrt(sigma2_beta);
    c.sigma_eps = std::sqrt(sigma2_eps);
    if (!gamma.empty()) {
      if (k_tot != 0 && k_tot != gamma.size())
        throw Error(ErrorKind::InvalidConfig, "--ktot does not match the number of --gamma offsets");
      c.gamma = gamma;
    } else {
      if (k_tot == 0) throw Error(ErrorKind::Parse, "--ktot or --gamma is required");
      std::vector<double> pattern(k_tot);
      for (std::size_t l = 0; l < k_tot; ++l) pattern[l] = static_cast<double>(l);
      c.gamma = k_tot >= 2 ? scaled_offsets(pattern, sigma2_gamma) : std::vector<double>{0.0};
    }
    c.alpha_family = c.beta_family = c.eps_family = NoiseFamily::parse(noise);
    if (!clip.empty()) c.clip_to_scale = parse_range(clip, "--clip");
    c.seed = seed.value_or(0);
    c.validate();
    return c;
  }
};

int cmd_simulate(const SimFlags& flags, std::uint64_t seed, const std::string& out_path, std::ostream& out) {
  const SimulationConfig cfg = flags.build(seed);
  const ScoreTensor t = simulate_tensor(cfg);
  Output o(out_path, out);
  const auto records = t.to_records();
  write_records_csv(o.get(), records);
  if (o.is_file()) {
    RunManifest man("simulate");
    man.parameters = {{"config", cfg}};
    if (!flags.config_path.empty()) man.add_input(flags.config_path);
    man.seed = seed;
    man.write_for(out_path);
  }
  return kOk;
}

// ------------------------------------------------------------- validate --

int cmd_validate(const std::string& scores, std::size_t k_tot, const SimFlags& flags,
                 const std::vector<std::size_t>& budgets, std::size_t reps, std::uint64_t seed,
                 const std::string& out_path, const std::string& summary_path, std::ostream& out,
                 std::ostream& err) {
  if (reps < 2) {
    err << "validate: --reps must be at least 2 (the variance of one replicate is undefined)\n";
    return kInputError;
  }
  std::optional<ScoreTensor> tensor;
  json source;
  if (!scores.empty()) {
    tensor = load_scores(scores);
    if (k_tot != 0 && tensor->judges() != k_tot)
      throw Error(ErrorKind::InvalidDesign, "--ktot does not match the judges in the score file");
    source = {{"scores", scores}};
  } else {
    const SimulationConfig cfg = flags.build(seed);
    tensor = simulate_tensor(cfg);
    source = {{"simulation", cfg}};
  }
  const auto curve = variance_curve(*tensor, budgets, reps, seed);
  const CalibrationReport rep = calibrate(curve);

  Output o(out_path, out);
  auto& os = o.get();
  os << "strategy,B,variance_empirical,variance_predicted,stderr\n";
  json points = json::array();
  for (const auto& r : curve) {
    points.push_back(r);
    if (r.skipped()) continue;
    os << to_string(r.strategy) << ',' << r.budget << ',' << format_double(r.empirical_variance) << ','
       << format_double(r.predicted_variance) << ',' << format_double(r.standard_error) << '\n';
  }

  json summary = {
      {"source", source},
      {"pool_constants", pool_constants(*tensor)},
      {"reps", reps},
      {"seed", seed},
      {"checks",
       {{"calibration_within_4se",
         {{"pass", rep.calibration_pass},
          {"points", rep.points},
          {"within", rep.within_4se},
          {"fraction", rep.fraction_within},
          {"required_fraction", 0.95}}},
        {"cyclic_lowest_within_2se", {{"pass", rep.cyclic_lowest}, {"violations", rep.cyclic_violations}}}}},
      {"points", points},
      {"pass", rep.calibration_pass}};
  std::string summary_target = summary_path;
  if (summary_target.empty() && o.is_file()) summary_target = out_path + ".summary.json";
  if (summary_target.empty()) {
    err << summary.dump(2) << '\n';
  } else {
    std::ofstream ss(summary_target);
    ss << summary.dump(2) << '\n';
  }
  if (o.is_file()) {
    RunManifest man("validate");
    man.parameters = {{"budgets", budgets}, {"reps", reps}, {"source", source}};
    if (!scores.empty()) man.add_input(scores);
    if (!flags.config_path.empty()) man.add_input(flags.config_path);
    man.seed = seed;
    man.write_for(out_path);
  }
  if (!rep.calibration_pass) {
    err << "validate: calibration failed (" << rep.within_4se << "/" << rep.points
        << " points within 4 standard errors)\n";
    return kCalibrationFailure;
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Variance decomposition and judge allocation for LLM-as-judge benchmarks", "judgevar"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  // estimate
  std::string scores, out_path, op_text = "1,1", scale_text, comp_path, strategy_name = "cyclic",
                               format, summary_path;
  std::size_t k_tot = 0, n = 0, m = 1, reps = 5000, budget = 0;
  std::vector<std::size_t> budgets;
  std::optional<std::uint64_t> seed;
  SimFlags sim;

  auto* estimate = app.add_subcommand("estimate", "estimate variance components from a score file");
  estimate->add_option("--scores", scores, "score CSV/JSON")->required();
  estimate->add_option("--ktot", k_tot, "judge pool size")->required();
  estimate->add_option("--out", out_path, "components JSON (default stdout)");
  estimate->add_option("--operating-point", op_text, "m,K for the contribution breakdown")->capture_default_str();
  estimate->add_option("--scale", scale_text, "reject scores outside min,max");

  auto* predict = app.add_subcommand("predict", "closed-form strategy variances over a budget grid");
  predict->add_option("--components", comp_path, "components JSON from `estimate`")->required();
  predict->add_option("--n", n, "scenarios (default: from the components file)");
  predict->add_option("--ktot", k_tot, "judge pool size")->required();
  predict->add_option("--budgets", budgets, "comma-separated per-scenario budgets")->delimiter(',')->required();
  predict->add_option("--out", out_path, "CSV output (default stdout)");

  auto* recommend = app.add_subcommand("recommend", "rank the three allocation strategies");
  recommend->add_option("--components", comp_path, "components JSON from `estimate`")->required();
  recommend->add_option("--n", n, "scenarios (default: from the components file)");
  recommend->add_option("--ktot", k_tot, "judge pool size")->required();
  recommend->add_option("--budget", budget, "per-scenario budget for the reported gaps (default K_tot)");
  recommend->add_option("--out", out_path, "JSON output (default stdout)");

  auto* plan = app.add_subcommand("plan", "emit a judge assignment manifest");
  plan->add_option("--n", n, "scenarios")->required();
  plan->add_option("--m", m, "generations per scenario")->capture_default_str();
  plan->add_option("--ktot", k_tot, "judge pool size")->required();
  plan->add_option("--strategy", strategy_name, "cyclic | random | all-judges")->capture_default_str();
  plan->add_option("--seed", seed, "RNG seed (required for cyclic and random)");
  plan->add_option("--format", format, "csv | json (default from --out extension)");
  plan->add_option("--out", out_path, "output file (default stdout)");

  auto* simulate = app.add_subcommand("simulate", "draw a synthetic score file from the additive model");
  sim.add_to(simulate);
  simulate->add_option("--seed", seed, "RNG seed")->required();
  simulate->add_option("--out", out_path, "score CSV (default stdout)");

  auto* validate = app.add_subcommand("validate", "subsampling harness vs exact pool predictions");
  validate->add_option("--scores", scores, "score file to subsample (otherwise simulate)");
  validate->add_option("--budgets", budgets, "comma-separated per-scenario budgets")->delimiter(',')->required();
  validate->add_option("--reps", reps, "subsampling repetitions")->capture_default_str();
  validate->add_option("--seed", seed, "RNG seed")->required();
  validate->add_option("--out", out_path, "figure data CSV (default stdout)");
  validate->add_option("--summary", summary_path, "pass/fail JSON (default <out>.summary.json)");
  sim.add_to(validate);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion& e) {
    out << kVersion << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "judgevar: " << e.what() << '\n';
    return kInputError;
  }

  try {
    if (estimate->parsed()) return cmd_estimate(scores, k_tot, out_path, op_text, scale_text, out, err);
    if (predict->parsed()) return cmd_predict(comp_path, n, k_tot, budgets, out_path, out);
    if (recommend->parsed()) return cmd_recommend(comp_path, n, k_tot, budget, out_path, out);
    if (plan->parsed()) return cmd_plan(n, m, k_tot, strategy_name, seed, format, out_path, out, err);
    if (simulate->parsed()) return cmd_simulate(sim, *seed, out_path, out);
    if (validate->parsed())
      return cmd_validate(scores, sim.k_tot, sim, budgets, reps, *seed, out_path, summary_path, out, err);
  } catch (const Error& e) {
    err << "judgevar: " << e.what() << '\n';
    return e.is_degenerate() ? kDegenerate : kInputError;
  }
  return kInputError;
}

}  // namespace judgevar::cli
