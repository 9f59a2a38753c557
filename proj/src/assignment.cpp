#include "judgevar/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "judgevar/rng.hpp"

namespace judgevar {
namespace {

void check_shape(std::size_t n, std::size_t m, std::size_t k_tot) {
  if (n < 1 || m < 1 || k_tot < 1)
    throw Error(ErrorKind::InvalidDesign, "n, m and K_tot must all be at least 1");
  if (n > 0xffffffffu || m > 0xffffffffu || k_tot > 0xffffffffu)
    throw Error(ErrorKind::InvalidDesign, "plan dimensions exceed 32-bit indices");
}

void finish(AssignmentPlan& plan) {
  plan.counts.assign(plan.k_tot, 0);
  for (const auto& a : plan.cells) ++plan.counts[a.judge];
  const auto [lo, hi] = std::minmax_element(plan.counts.begin(), plan.counts.end());
  plan.max_imbalance = *hi - *lo;
}

}  // namespace

AssignmentPlan cyclic_plan(std::size_t n, std::size_t m, std::size_t k_tot, std::uint64_t seed) {
  check_shape(n, m, k_tot);
  AssignmentPlan plan{Strategy::Cyclic, n, m, k_tot, {}, {}, seed, 0};
  plan.cells.reserve(n * m);
  if (m >= 2) {
    // Call r = i*m + j goes to judge r mod K_tot. This is j mod K_tot in
    // every scenario when K_tot | m, and otherwise carries the cycle across
    // scenario boundaries so the leftover calls do not pile up on the same
    // judges in every scenario.
    std::size_t r = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j)
        plan.cells.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                              static_cast<std::uint32_t>(r++ % k_tot)});
  } else {
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    Philox rng(seed);
    shuffle(std::span<std::uint32_t>(order), rng);
    std::vector<std::uint32_t> judge_of(n);
    for (std::size_t rank = 0; rank < n; ++rank)
      judge_of[order[rank]] = static_cast<std::uint32_t>(rank % k_tot);
    for (std::size_t i = 0; i < n; ++i)
      plan.cells.push_back({static_cast<std::uint32_t>(i), 0u, judge_of[i]});
  }
  finish(plan);
  return plan;
}

AssignmentPlan random_plan(std::size_t n, std::size_t m, std::size_t k_tot, std::uint64_t seed) {
  check_shape(n, m, k_tot);
  AssignmentPlan plan{Strategy::RandomSingle, n, m, k_tot, {}, {}, seed, 0};
  plan.cells.reserve(n * m);
  Philox rng(seed);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      plan.cells.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                            static_cast<std::uint32_t>(rng.uniform_index(k_tot))});
  finish(plan);
  return plan;
}

AssignmentPlan all_judges_plan(std::size_t n, std::size_t m, std::size_t k_tot) {
  check_shape(n, m, k_tot);
  AssignmentPlan plan{Strategy::AllJudges, n, m, k_tot, {}, {}, std::nullopt, 0};
  plan.cells.reserve(n * m * k_tot);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t l = 0; l < k_tot; ++l)
        plan.cells.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                              static_cast<std::uint32_t>(l)});
  finish(plan);
  return plan;
}

AssignmentPlan make_plan(Strategy s, std::size_t n, std::size_t m, std::size_t k_tot,
                         std::uint64_t seed) {
  switch (s) {
    case Strategy::AllJudges: return all_judges_plan(n, m, k_tot);
    case Strategy::RandomSingle: return random_plan(n, m, k_tot, seed);
    case Strategy::Cyclic: return cyclic_plan(n, m, k_tot, seed);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown strategy");
}

double residual_offset_bound(const AssignmentPlan& plan, std::span<const double> gamma) {
  if (gamma.size() != plan.k_tot)
    throw Error(ErrorKind::InvalidArgument, "gamma must have one entry per judge");
  double total = 0.0, scale = 0.0;
  for (double g : gamma) {
    total += g;
    scale = std::max(scale, std::fabs(g));
  }
  if (std::fabs(total) > 1e-9 * std::max(1.0, scale))
    throw Error(ErrorKind::Uncentered, "judge offsets must sum to zero");
  if (plan.cells.empty()) return 0.0;
  const std::size_t floor_count = *std::min_element(plan.counts.begin(), plan.counts.end());
  double excess = 0.0;
  for (std::size_t l = 0; l < plan.k_tot; ++l)
    excess += static_cast<double>(plan.counts[l] - floor_count) * gamma[l];
  return std::fabs(excess) / static_cast<double>(plan.cells.size());
}

void to_json(nlohmann::json& j, const AssignmentPlan& plan) {
  j["strategy"] = std::string(to_string(plan.strategy));
  j["n"] = plan.n;
  j["m"] = plan.m;
  j["K_tot"] = plan.k_tot;
  j["seed"] = plan.seed ? nlohmann::json(*plan.seed) : nlohmann::json(nullptr);
  j["counts"] = plan.counts;
  j["max_imbalance"] = plan.max_imbalance;
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& a : plan.cells) cells.push_back({a.scenario, a.generation, a.judge});
  j["cells"] = cells;
}

}  // namespace judgevar
