#pragma once

// Exact and heuristic 0-1 knapsack solvers.
//
// Feasibility is "total size <= capacity" throughout.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lcsum/errors.hpp"

namespace lcsum {

struct KnapsackInstance {
  std::vector<double> profits;      // non-negative
  std::vector<std::int64_t> sizes;  // >= 1
  std::int64_t capacity = 0;        // >= 0

  std::size_t item_count() const { return profits.size(); }
  void validate() const;
};

struct KnapsackSolution {
  std::vector<std::uint8_t> selected;  // aligned with items
  double objective = 0.0;
  std::int64_t total_size = 0;

  std::vector<int> indices() const;
};

enum class KnapsackSolver { kDp, kGreedyDensity };

std::string to_string(KnapsackSolver solver);
KnapsackSolver parse_knapsack_solver(const std::string& name);

// Builds a solution for `selected`, recomputing objective and total size.
KnapsackSolution make_solution(const KnapsackInstance& instance, std::vector<std::uint8_t> selected);

// Table cells above this count raise SizeLimitError.
inline constexpr std::size_t kMaxDpCells = std::size_t{1} << 28;

// O(n*C) table with backtracking. On equal table values the backtrack prefers
// leaving the item out, so the returned optimum is canonical.
KnapsackSolution solve_dp(const KnapsackInstance& instance);

// Items by profit/size descending (ties: lower index first), taken while they
// fit; the scan stops at the first item that does not fit.
KnapsackSolution solve_greedy_density(const KnapsackInstance& instance);

inline constexpr std::size_t kMaxBruteForceItems = 22;

// Exhaustive search; among optima returns the lexicographically smallest
// index set.
KnapsackSolution solve_brute_force(const KnapsackInstance& instance);

KnapsackSolution solve(const KnapsackInstance& instance, KnapsackSolver solver);

// Real-valued sizes on a capacity of 1 mapped to integers on a capacity of
// `resolution`: size' = max(1, round(size * resolution)).
KnapsackInstance quantize_instance(std::span<const double> profits, std::span<const double> sizes,
                                   std::int64_t resolution = 1000);

struct SelectionMetrics {
  double error_rate = 0.0;    // mean per-item disagreement
  double matched_rate = 0.0;  // fraction of exactly equal vectors
};

SelectionMetrics eval_metrics(const std::vector<std::vector<std::uint8_t>>& predicted,
                              const std::vector<std::vector<std::uint8_t>>& labels);

}  // namespace lcsum
