#pragma once

// Test-time extraction: plain top-M and length-controlled selection with an
// exact knapsack solve over the scorer's outputs.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lcsum/encoders.hpp"
#include "lcsum/summarizer.hpp"

namespace lcsum {

struct SummaryResult {
  std::string id;
  std::vector<int> indices;  // ascending
  std::string summary;       // selected sentences joined by single spaces
  int total_chars = 0;       // sum of selected char lengths, separators excluded
  std::vector<Real> scores;
  std::string pipeline;
  std::optional<std::int64_t> capacity;

  nlohmann::json to_json() const;
  static SummaryResult from_json(const nlohmann::json& j);
};

// JSONL, one SummaryResult per line. Errors carry path:line.
std::vector<SummaryResult> load_summaries(const std::filesystem::path& path);
void save_summaries(const std::filesystem::path& path, std::span<const SummaryResult> results);

// Sorts and de-duplicates `indices`, then fills in the text fields.
SummaryResult make_summary(const Document& doc, std::vector<int> indices, std::vector<Real> scores,
                           std::string pipeline);

// The m highest scores in document order; ties go to the earlier sentence.
SummaryResult extract_topk(const Document& doc, std::span<const Real> scores, int m,
                           std::string pipeline = "topk");
SummaryResult extract_topk(const Document& doc, const SentenceEmbeddings& emb, const Summarizer& model, int m);

enum class Pipeline { kDp, kKtDp, kKtDen };
std::string to_string(Pipeline p);
Pipeline parse_pipeline(const std::string& name);

enum class ProfitTransform { kMinShift, kSigmoid };

// Maps scores to non-negative knapsack profits.
std::vector<double> knapsack_profits(std::span<const Real> scores, ProfitTransform transform);

// Exact DP over (profits, char lengths, C). Sentences longer than C are
// dropped first.
SummaryResult extract_length_controlled(const Document& doc, std::span<const Real> scores, std::int64_t capacity,
                                        std::string pipeline,
                                        ProfitTransform transform = ProfitTransform::kMinShift);
SummaryResult extract_length_controlled(const Document& doc, const SentenceEmbeddings& emb,
                                        const Summarizer& model, std::int64_t capacity, Pipeline pipeline,
                                        ProfitTransform transform = ProfitTransform::kMinShift);

// Throws ContractError unless the checkpoint config was trained the way the
// pipeline requires (top-K for dp; knapsack mode with DP or greedy-density
// knapsack labels for kt_dp / kt_den).
void require_pipeline_checkpoint(const nlohmann::json& checkpoint_config, Pipeline pipeline);

struct LengthStats {
  double mean = 0;
  double stddev = 0;  // population
  std::string format() const;  // "380 (9)"
};

LengthStats report_lengths(std::span<const SummaryResult> results);

}  // namespace lcsum
