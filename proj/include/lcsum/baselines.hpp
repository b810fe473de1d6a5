#pragma once

// Reference extractors (Lead-K, TextRank, greedy ROUGE oracle), ROUGE
// metrics and corpus-level reports.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lcsum/encoders.hpp"
#include "lcsum/inference.hpp"

namespace lcsum {

SummaryResult lead_k(const Document& doc, int k);

// Row-major n x n cosine similarities.
struct SimilarityMatrix {
  int n = 0;
  std::vector<double> values;

  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * n + j]; }
  static SimilarityMatrix cosine(const SentenceEmbeddings& emb);
};

enum class TextRankVariant { kDegree, kPageRank };
std::string to_string(TextRankVariant v);
TextRankVariant parse_textrank_variant(const std::string& name);

struct PageRankOptions {
  double damping = 0.85;
  double tolerance = 1e-6;
  int max_iterations = 200;
};

// Degree: row sums without the diagonal. PageRank: power iteration over the
// row-normalised non-negative off-diagonal similarities.
std::vector<double> centrality(const SimilarityMatrix& sim, TextRankVariant variant, const PageRankOptions& pr = {});

SummaryResult textrank(const Document& doc, const SentenceEmbeddings& emb, int k,
                       TextRankVariant variant = TextRankVariant::kDegree);
// Centralities as knapsack profits under a character budget.
SummaryResult textrank_length_controlled(const Document& doc, const SentenceEmbeddings& emb, std::int64_t capacity,
                                         TextRankVariant variant = TextRankVariant::kDegree);

struct PRF {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

struct RougeScore {
  PRF r1, r2, rl;
};

// Clipped n-gram overlap and summary-level LCS; with several references each
// metric takes its best reference.
RougeScore rouge(const std::string& candidate, const std::vector<std::string>& references,
                 bool char_unigrams = false);

// Greedily adds the sentence with the largest ROUGE-1 + ROUGE-2 F1 gain until
// m sentences are chosen or no sentence improves the score.
SummaryResult oracle_extract(const Document& doc, int m, bool char_unigrams = false);

// Fraction of planted sentences recovered, and F1 against the planted set.
double planted_accuracy(const SummaryResult& r, std::span<const int> planted);
double planted_f1(const SummaryResult& r, std::span<const int> planted);

double spearman(std::span<const double> a, std::span<const double> b);

struct CorpusReport {
  std::string pipeline;
  int documents = 0;
  int skipped = 0;  // no reference
  double r1 = 0, r2 = 0, rl = 0;  // mean F1 x 100, two decimals
  std::optional<double> length_mean;
  std::optional<double> length_std;

  nlohmann::json to_json() const;
};

// Results are matched to documents by id.
CorpusReport evaluate_corpus(std::span<const SummaryResult> results, std::span<const Document> corpus,
                             bool length_controlled = false, bool char_unigrams = false);

std::string render_table(std::span<const CorpusReport> reports);

}  // namespace lcsum
