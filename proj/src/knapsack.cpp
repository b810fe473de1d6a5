#include "lcsum/knapsack.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lcsum/errors.hpp"

namespace lcsum {

void KnapsackInstance::validate() const {
  LCSUM_REQUIRE(!profits.empty(), "knapsack instance needs at least one item");
  LCSUM_REQUIRE(profits.size() == sizes.size(), "knapsack profits and sizes differ in length");
  LCSUM_REQUIRE(capacity >= 0, "knapsack capacity must be non-negative");
  for (std::size_t i = 0; i < profits.size(); ++i) {
    LCSUM_REQUIRE(std::isfinite(profits[i]) && profits[i] >= 0, "knapsack profits must be finite and non-negative");
    LCSUM_REQUIRE(sizes[i] >= 1, "knapsack sizes must be at least 1");
  }
}

std::vector<int> KnapsackSolution::indices() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    if (selected[i]) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::string to_string(KnapsackSolver solver) {
  return solver == KnapsackSolver::kDp ? "dp" : "greedy_density";
}

KnapsackSolver parse_knapsack_solver(const std::string& name) {
  if (name == "dp") return KnapsackSolver::kDp;
  if (name == "greedy_density" || name == "greedy") return KnapsackSolver::kGreedyDensity;
  throw ContractError("unknown knapsack solver: " + name);
}

KnapsackSolution make_solution(const KnapsackInstance& instance, std::vector<std::uint8_t> selected) {
  LCSUM_REQUIRE(selected.size() == instance.item_count(), "selection length does not match items");
  KnapsackSolution s;
  s.selected = std::move(selected);
  for (std::size_t i = 0; i < s.selected.size(); ++i) {
    if (!s.selected[i]) continue;
    s.objective += instance.profits[i];
    s.total_size += instance.sizes[i];
  }
  return s;
}

KnapsackSolution solve_dp(const KnapsackInstance& instance) {
  instance.validate();
  const std::size_t n = instance.item_count();
  const auto cap = static_cast<std::size_t>(instance.capacity);
  const std::size_t width = cap + 1;
  if ((n + 1) > kMaxDpCells / width) {
    throw SizeLimitError("knapsack DP table of " + std::to_string(n + 1) + " x " + std::to_string(width) +
                         " cells exceeds the limit of " + std::to_string(kMaxDpCells));
  }
  // best[i][c]: best profit using the first i items within capacity c.
  std::vector<double> best((n + 1) * width, 0.0);
  for (std::size_t i = 1; i <= n; ++i) {
    const auto size = static_cast<std::size_t>(instance.sizes[i - 1]);
    const double profit = instance.profits[i - 1];
    const double* prev = &best[(i - 1) * width];
    double* cur = &best[i * width];
    for (std::size_t c = 0; c < width; ++c) {
      cur[c] = prev[c];
      if (size <= c) cur[c] = std::max(cur[c], prev[c - size] + profit);
    }
  }
  std::vector<std::uint8_t> selected(n, 0);
  std::size_t c = cap;
  for (std::size_t i = n; i >= 1; --i) {
    if (best[i * width + c] == best[(i - 1) * width + c]) continue;
    selected[i - 1] = 1;
    c -= static_cast<std::size_t>(instance.sizes[i - 1]);
  }
  return make_solution(instance, std::move(selected));
}

KnapsackSolution solve_greedy_density(const KnapsackInstance& instance) {
  instance.validate();
  const std::size_t n = instance.item_count();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Compare p_a/s_a > p_b/s_b as p_a*s_b > p_b*s_a to avoid division noise.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return instance.profits[a] * static_cast<double>(instance.sizes[b]) >
           instance.profits[b] * static_cast<double>(instance.sizes[a]);
  });
  std::vector<std::uint8_t> selected(n, 0);
  std::int64_t used = 0;
  for (std::size_t i : order) {
    if (used + instance.sizes[i] > instance.capacity) break;
    used += instance.sizes[i];
    selected[i] = 1;
  }
  return make_solution(instance, std::move(selected));
}

KnapsackSolution solve_brute_force(const KnapsackInstance& instance) {
  instance.validate();
  const std::size_t n = instance.item_count();
  if (n > kMaxBruteForceItems) {
    throw SizeLimitError("brute force refuses " + std::to_string(n) + " items (limit " +
                         std::to_string(kMaxBruteForceItems) + ")");
  }
  auto as_indices = [n](std::uint32_t mask) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) idx.push_back(static_cast<int>(i));
    }
    return idx;
  };
  // The empty set starts as the incumbent; it is also the lexicographic minimum.
  double best_value = 0.0;
  std::vector<int> best_idx;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    std::int64_t size = 0;
    double value = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(mask & (1u << i))) continue;
      size += instance.sizes[i];
      value += instance.profits[i];
    }
    if (size > instance.capacity || value < best_value) continue;
    auto idx = as_indices(mask);
    if (value > best_value ||
        std::lexicographical_compare(idx.begin(), idx.end(), best_idx.begin(), best_idx.end())) {
      best_value = value;
      best_idx = std::move(idx);
    }
  }
  std::vector<std::uint8_t> selected(n, 0);
  for (int i : best_idx) selected[static_cast<std::size_t>(i)] = 1;
  return make_solution(instance, std::move(selected));
}

KnapsackSolution solve(const KnapsackInstance& instance, KnapsackSolver solver) {
  return solver == KnapsackSolver::kDp ? solve_dp(instance) : solve_greedy_density(instance);
}

KnapsackInstance quantize_instance(std::span<const double> profits, std::span<const double> sizes,
                                   std::int64_t resolution) {
  LCSUM_REQUIRE(profits.size() == sizes.size(), "quantize_instance: length mismatch");
  LCSUM_REQUIRE(resolution >= 1, "quantize_instance: resolution must be positive");
  KnapsackInstance inst;
  inst.profits.assign(profits.begin(), profits.end());
  inst.capacity = resolution;
  for (double s : sizes) {
    inst.sizes.push_back(std::max<std::int64_t>(1, std::llround(s * static_cast<double>(resolution))));
  }
  return inst;
}

SelectionMetrics eval_metrics(const std::vector<std::vector<std::uint8_t>>& predicted,
                              const std::vector<std::vector<std::uint8_t>>& labels) {
  LCSUM_REQUIRE(predicted.size() == labels.size(), "eval_metrics: sample counts differ");
  LCSUM_REQUIRE(!labels.empty(), "eval_metrics: no samples");
  double error_sum = 0.0;
  std::size_t matched = 0;
  for (std::size_t s = 0; s < labels.size(); ++s) {
    const auto& p = predicted[s];
    const auto& l = labels[s];
    if (p.size() != l.size()) {
      throw ContractError("eval_metrics: sample " + std::to_string(s) + " has " + std::to_string(p.size()) +
                          " predictions for " + std::to_string(l.size()) + " labels");
    }
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < l.size(); ++i) wrong += (p[i] != 0) != (l[i] != 0);
    error_sum += l.empty() ? 0.0 : static_cast<double>(wrong) / static_cast<double>(l.size());
    matched += wrong == 0;
  }
  const double count = static_cast<double>(labels.size());
  return {error_sum / count, static_cast<double>(matched) / count};
}

}  // namespace lcsum
