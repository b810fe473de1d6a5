#include "lcsum/inference.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "lcsum/checkpoint.hpp"
#include "lcsum/errors.hpp"
#include "lcsum/knapsack.hpp"

namespace lcsum {

nlohmann::json SummaryResult::to_json() const {
  nlohmann::ordered_json j;
  j["id"] = id;
  j["indices"] = indices;
  j["summary"] = summary;
  j["chars"] = total_chars;
  j["pipeline"] = pipeline;
  if (capacity) j["capacity"] = *capacity;
  return nlohmann::json::parse(j.dump());
}

SummaryResult SummaryResult::from_json(const nlohmann::json& j) {
  SummaryResult r;
  try {
    r.id = j.at("id").get<std::string>();
    r.indices = j.at("indices").get<std::vector<int>>();
    r.summary = j.at("summary").get<std::string>();
    r.total_chars = j.at("chars").get<int>();
    r.pipeline = j.value("pipeline", std::string());
    if (j.contains("capacity")) r.capacity = j.at("capacity").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(std::string("bad summary record: ") + e.what());
  }
  return r;
}

std::vector<SummaryResult> load_summaries(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<SummaryResult> out;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(SummaryResult::from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ContractError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const ContractError& e) {
      throw ContractError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void save_summaries(const std::filesystem::path& path, std::span<const SummaryResult> results) {
  std::string text;
  for (const auto& r : results) text += r.to_json().dump() + "\n";
  write_text_atomic(path, text);
}

SummaryResult make_summary(const Document& doc, std::vector<int> indices, std::vector<Real> scores,
                           std::string pipeline) {
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  SummaryResult r;
  r.id = doc.id;
  r.scores = std::move(scores);
  r.pipeline = std::move(pipeline);
  for (int i : indices) {
    LCSUM_REQUIRE(i >= 0 && i < doc.size(), "summary index out of range for '" + doc.id + "'");
    if (!r.summary.empty()) r.summary += ' ';
    r.summary += doc.sentences[static_cast<std::size_t>(i)];
    r.total_chars += doc.char_lengths[static_cast<std::size_t>(i)];
  }
  r.indices = std::move(indices);
  return r;
}

SummaryResult extract_topk(const Document& doc, std::span<const Real> scores, int m, std::string pipeline) {
  LCSUM_REQUIRE(m >= 1, "M must be at least 1");
  LCSUM_REQUIRE(static_cast<int>(scores.size()) == doc.size(), "one score per sentence is required");
  if (m > doc.size()) spdlog::warn("document '{}' has {} sentences, fewer than M={}", doc.id, doc.size(), m);
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)]; });
  order.resize(std::min<std::size_t>(order.size(), static_cast<std::size_t>(m)));
  return make_summary(doc, std::move(order), {scores.begin(), scores.end()}, std::move(pipeline));
}

SummaryResult extract_topk(const Document& doc, const SentenceEmbeddings& emb, const Summarizer& model, int m) {
  const auto scores = model.score(emb);
  return extract_topk(doc, scores, m);
}

std::string to_string(Pipeline p) {
  switch (p) {
    case Pipeline::kDp: return "dp";
    case Pipeline::kKtDp: return "kt_dp";
    case Pipeline::kKtDen: return "kt_den";
  }
  return "dp";
}

Pipeline parse_pipeline(const std::string& name) {
  if (name == "dp") return Pipeline::kDp;
  if (name == "kt_dp") return Pipeline::kKtDp;
  if (name == "kt_den") return Pipeline::kKtDen;
  throw ContractError("unknown pipeline: " + name);
}

std::vector<double> knapsack_profits(std::span<const Real> scores, ProfitTransform transform) {
  std::vector<double> p(scores.begin(), scores.end());
  for (double v : p) LCSUM_REQUIRE(std::isfinite(v), "scores must be finite");
  if (transform == ProfitTransform::kSigmoid) {
    for (double& v : p) v = 1.0 / (1.0 + std::exp(-v));
  } else if (!p.empty()) {
    const double shift = std::min(0.0, *std::min_element(p.begin(), p.end()));
    for (double& v : p) v -= shift;
  }
  return p;
}

SummaryResult extract_length_controlled(const Document& doc, std::span<const Real> scores, std::int64_t capacity,
                                        std::string pipeline, ProfitTransform transform) {
  LCSUM_REQUIRE(capacity >= 0, "capacity must be non-negative");
  LCSUM_REQUIRE(static_cast<int>(scores.size()) == doc.size(), "one score per sentence is required");
  const auto profits = knapsack_profits(scores, transform);
  KnapsackInstance inst;
  inst.capacity = capacity;
  std::vector<int> kept;
  for (int i = 0; i < doc.size(); ++i) {
    const int len = doc.char_lengths[static_cast<std::size_t>(i)];
    if (len > capacity) continue;
    kept.push_back(i);
    inst.profits.push_back(profits[static_cast<std::size_t>(i)]);
    inst.sizes.push_back(len);
  }
  std::vector<int> chosen;
  if (!kept.empty()) {
    for (int j : solve_dp(inst).indices()) chosen.push_back(kept[static_cast<std::size_t>(j)]);
  }
  SummaryResult r = make_summary(doc, std::move(chosen), {scores.begin(), scores.end()}, std::move(pipeline));
  r.capacity = capacity;
  return r;
}

SummaryResult extract_length_controlled(const Document& doc, const SentenceEmbeddings& emb,
                                        const Summarizer& model, std::int64_t capacity, Pipeline pipeline,
                                        ProfitTransform transform) {
  const auto scores = model.score(emb);
  return extract_length_controlled(doc, scores, capacity, to_string(pipeline), transform);
}

void require_pipeline_checkpoint(const nlohmann::json& cfg, Pipeline pipeline) {
  const std::string mode = cfg.value("mode", std::string());
  if (pipeline == Pipeline::kDp) {
    LCSUM_REQUIRE(mode == "topk", "pipeline dp needs a scorer trained in topk mode (checkpoint mode: '" + mode + "')");
    return;
  }
  const std::string want = pipeline == Pipeline::kKtDp ? "dp" : "greedy_density";
  const std::string labels = cfg.value("knapsack_labels", std::string());
  LCSUM_REQUIRE(mode == "knapsack" && labels == want,
                "pipeline " + to_string(pipeline) + " needs a scorer trained through a knapsack net with " + want +
                    " labels (checkpoint mode: '" + mode + "', labels: '" + labels + "')");
}

std::string LengthStats::format() const { return fmt::format("{:.0f} ({:.0f})", mean, stddev); }

LengthStats report_lengths(std::span<const SummaryResult> results) {
  LCSUM_REQUIRE(!results.empty(), "no summaries to report");
  double sum = 0;
  for (const auto& r : results) sum += r.total_chars;
  LengthStats s;
  s.mean = sum / static_cast<double>(results.size());
  double var = 0;
  for (const auto& r : results) var += (r.total_chars - s.mean) * (r.total_chars - s.mean);
  s.stddev = std::sqrt(var / static_cast<double>(results.size()));
  return s;
}

}  // namespace lcsum
