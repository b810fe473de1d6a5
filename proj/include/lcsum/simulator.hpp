#pragma once

// Synthetic knapsack corpus shaped like sentence-selection problems: sentence
// counts ~ Poisson, lengths ~ Gamma(2, mean/2), scores ~ U(0,1).

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lcsum/knapsack.hpp"

namespace lcsum {

struct SimulatorParams {
  double lambda_sentences = 9.3;
  double gamma_alpha = 2.0;
  double mean_sentence_length = 69.7;
  std::vector<std::int64_t> target_capacities{75, 100, 125, 150, 175, 200, 225};
  std::uint64_t seed = 42;
  int min_items = 2;
  int max_items = 64;

  void validate() const;
  double gamma_beta() const { return mean_sentence_length / gamma_alpha; }
  nlohmann::json to_json() const;

  static SimulatorParams cnewsum(std::uint64_t seed);
  static SimulatorParams cnndm(std::uint64_t seed);
};

struct LabeledInstance {
  std::vector<double> profits;  // sum to 1
  std::vector<double> sizes;    // raw_size / capacity
  std::vector<std::int64_t> raw_sizes;
  std::int64_t capacity = 0;
  std::vector<std::uint8_t> label;
  KnapsackSolver solver = KnapsackSolver::kDp;

  std::size_t item_count() const { return profits.size(); }
  // Throws ContractError describing the first violated invariant.
  void validate() const;
  // Instance on raw sizes and normalised profits (same argmax as raw profits).
  KnapsackInstance instance() const;
};

KnapsackInstance sample_instance(const SimulatorParams& params, std::uint64_t index);
LabeledInstance label_instance(const KnapsackInstance& instance, KnapsackSolver solver);

nlohmann::json to_json(const LabeledInstance& record);
LabeledInstance labeled_instance_from_json(const nlohmann::json& j);

struct DatasetPaths {
  std::filesystem::path train;
  std::filesystem::path valid;
};

// Writes <out_dir>/train.jsonl (first 95% of indices) and valid.jsonl.
DatasetPaths generate_dataset(std::size_t count, const SimulatorParams& params, KnapsackSolver solver,
                              const std::filesystem::path& out_dir);

std::vector<LabeledInstance> load_dataset(const std::filesystem::path& path);

}  // namespace lcsum
