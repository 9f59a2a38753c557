#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "judgevar/allocation.hpp"

namespace judgevar {

struct Assignment {
  std::uint32_t scenario = 0;
  std::uint32_t generation = 0;
  std::uint32_t judge = 0;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

/// Concrete judge calls realising a strategy; cells are ordered by
/// (scenario, generation, judge).
struct AssignmentPlan {
  Strategy strategy = Strategy::Cyclic;
  std::size_t n = 0, m = 0, k_tot = 0;
  std::vector<Assignment> cells;
  std::vector<std::size_t> counts;  // calls per judge
  std::optional<std::uint64_t> seed;
  std::size_t max_imbalance = 0;

  friend bool operator==(const AssignmentPlan&, const AssignmentPlan&) = default;
};

/// Round-robin assignment. For m >= 2 cell (i, j) goes to judge
/// (i m + j) mod K_tot, which is j mod K_tot whenever K_tot divides m. For m = 1 the scenarios are shuffled with `seed` and
/// the scenario at shuffled rank r goes to judge r mod K_tot. When K_tot does
/// not divide the number of calls the last partial cycle favours the lowest
/// judge indices, so counts differ by at most one.
AssignmentPlan cyclic_plan(std::size_t n, std::size_t m, std::size_t k_tot, std::uint64_t seed);

/// One judge per cell drawn uniformly and independently.
AssignmentPlan random_plan(std::size_t n, std::size_t m, std::size_t k_tot, std::uint64_t seed);

/// Every judge scores every cell.
AssignmentPlan all_judges_plan(std::size_t n, std::size_t m, std::size_t k_tot);

AssignmentPlan make_plan(Strategy s, std::size_t n, std::size_t m, std::size_t k_tot,
                         std::uint64_t seed);

/// |plan-weighted mean of the centred offsets `gamma`|. Uses the identity
/// sum_l c_l g_l = sum_l (c_l - min c) g_l for centred g, so a perfectly
/// balanced plan returns exactly 0.
double residual_offset_bound(const AssignmentPlan& plan, std::span<const double> gamma);

void to_json(nlohmann::json& j, const AssignmentPlan& plan);

}  // namespace judgevar
