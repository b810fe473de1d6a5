#include <doctest.h>

#include <algorithm>

#include "lcsum/errors.hpp"
#include "lcsum/inference.hpp"
#include "lcsum/knapsack.hpp"
#include "lcsum/rng.hpp"

using namespace lcsum;

namespace {

// A document whose sentence i has exactly lengths[i] characters.
Document sized_document(const std::vector<int>& lengths) {
  std::vector<std::string> sentences;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    sentences.push_back(std::string(static_cast<std::size_t>(lengths[i]), static_cast<char>('a' + i % 26)));
  }
  return Document::from_sentences("doc", sentences);
}

double selected_profit(const std::vector<double>& profits, const std::vector<int>& indices) {
  double s = 0;
  for (int i : indices) s += profits[static_cast<std::size_t>(i)];
  return s;
}

}  // namespace

TEST_CASE("extract_topk returns the highest scores in document order") {
  const auto doc = Document::from_sentences("d", {"first one.", "second one.", "third one."});
  const std::vector<Real> scores{0.1f, 0.9f, 0.5f};
  const auto r = extract_topk(doc, scores, 2);
  CHECK(r.indices == std::vector<int>{1, 2});
  CHECK(r.summary == "second one. third one.");
  CHECK(r.total_chars == 11 + 10);
  CHECK(r.pipeline == "topk");
}

TEST_CASE("extract_topk with M >= n keeps the whole document") {
  const auto doc = Document::from_sentences("d", {"a.", "b.", "c."});
  const std::vector<Real> scores{0.3f, 0.2f, 0.1f};
  CHECK(extract_topk(doc, scores, 3).indices == std::vector<int>{0, 1, 2});
  CHECK(extract_topk(doc, scores, 5).indices == std::vector<int>{0, 1, 2});
}

TEST_CASE("extract_topk breaks ties towards the earlier sentence") {
  const auto doc = Document::from_sentences("d", {"a.", "b.", "c.", "d."});
  const std::vector<Real> scores{0.5f, 0.7f, 0.5f, 0.5f};
  CHECK(extract_topk(doc, scores, 2).indices == std::vector<int>{0, 1});
  CHECK(extract_topk(doc, scores, 3).indices == std::vector<int>{0, 1, 2});
}

TEST_CASE("length-controlled extraction matches the hand-solved instance") {
  const auto doc = sized_document({5, 3, 2});
  const std::vector<Real> scores{0.6f, 0.3f, 0.1f};
  const auto r = extract_length_controlled(doc, scores, 5, "dp");
  CHECK(r.indices == std::vector<int>{0});
  CHECK(r.total_chars == 5);
  CHECK(r.capacity == 5);
}

TEST_CASE("length-controlled extraction edge capacities") {
  const auto doc = sized_document({5, 3, 2});
  const std::vector<Real> scores{0.6f, 0.3f, 0.1f};
  const auto all = extract_length_controlled(doc, scores, 10, "dp");
  CHECK(all.indices == std::vector<int>{0, 1, 2});
  const auto none = extract_length_controlled(doc, scores, 0, "dp");
  CHECK(none.indices.empty());
  CHECK(none.total_chars == 0);
  CHECK(none.summary.empty());
}

TEST_CASE("length control never exceeds the budget and is monotone in C") {
  Rng rng(123);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = static_cast<int>(rng.uniform_int(1, 20));
    std::vector<int> lengths(static_cast<std::size_t>(n));
    std::vector<Real> scores(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      lengths[static_cast<std::size_t>(i)] = static_cast<int>(rng.uniform_int(1, 120));
      scores[static_cast<std::size_t>(i)] = static_cast<Real>(rng.normal());
    }
    const auto doc = sized_document(lengths);
    const auto profits = knapsack_profits(scores, ProfitTransform::kMinShift);
    double previous = -1;
    for (std::int64_t c = 0; c <= 600; c += 50) {
      const auto r = extract_length_controlled(doc, scores, c, "dp");
      REQUIRE(r.total_chars <= c);
      const double objective = selected_profit(profits, r.indices);
      CHECK(objective >= previous - 1e-9);
      previous = objective;
    }
  }
}

TEST_CASE("length control selection is invariant to positive score scaling") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = static_cast<int>(rng.uniform_int(2, 15));
    std::vector<int> lengths(static_cast<std::size_t>(n));
    std::vector<Real> scores(static_cast<std::size_t>(n)), scaled(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      lengths[static_cast<std::size_t>(i)] = static_cast<int>(rng.uniform_int(5, 80));
      scores[static_cast<std::size_t>(i)] = static_cast<Real>(rng.uniform(0.05, 1.0));
      scaled[static_cast<std::size_t>(i)] = scores[static_cast<std::size_t>(i)] * Real(4);
    }
    const auto doc = sized_document(lengths);
    const auto a = extract_length_controlled(doc, scores, 150, "dp");
    const auto b = extract_length_controlled(doc, scaled, 150, "dp");
    CHECK(a.indices == b.indices);
  }
}

TEST_CASE("knapsack profits are non-negative under both transforms") {
  const std::vector<Real> scores{-2.0f, 0.5f, 1.0f};
  const auto shifted = knapsack_profits(scores, ProfitTransform::kMinShift);
  CHECK(shifted[0] == doctest::Approx(0.0));
  CHECK(shifted[1] == doctest::Approx(2.5));
  CHECK(shifted[2] == doctest::Approx(3.0));
  const std::vector<Real> positive{0.2f, 0.4f};
  const auto unshifted = knapsack_profits(positive, ProfitTransform::kMinShift);
  CHECK(unshifted[0] == doctest::Approx(0.2));
  const auto squashed = knapsack_profits(scores, ProfitTransform::kSigmoid);
  for (double p : squashed) CHECK((p > 0 && p < 1));
  CHECK(squashed[0] < squashed[1]);
}

TEST_CASE("report_lengths uses mean and population deviation") {
  const auto doc = sized_document({380, 420, 400});
  std::vector<SummaryResult> results{make_summary(doc, {0}, {}, "dp"), make_summary(doc, {1}, {}, "dp")};
  const auto stats = report_lengths(results);
  CHECK(stats.mean == doctest::Approx(400));
  CHECK(stats.stddev == doctest::Approx(20));
  CHECK(stats.format() == "400 (20)");

  std::vector<SummaryResult> exact{make_summary(doc, {2}, {}, "dp"), make_summary(doc, {2}, {}, "dp")};
  const auto flat = report_lengths(exact);
  CHECK(flat.mean == doctest::Approx(400));
  CHECK(flat.stddev == doctest::Approx(0));
  CHECK_THROWS_AS(report_lengths(std::span<const SummaryResult>{}), ContractError);
}

TEST_CASE("pipelines parse and check their checkpoints") {
  CHECK(parse_pipeline("kt_den") == Pipeline::kKtDen);
  CHECK(to_string(Pipeline::kKtDp) == "kt_dp");
  CHECK_THROWS_AS(parse_pipeline("beam"), ContractError);

  const nlohmann::json topk{{"mode", "topk"}};
  const nlohmann::json den{{"mode", "knapsack"}, {"knapsack_labels", "greedy_density"}};
  const nlohmann::json dp{{"mode", "knapsack"}, {"knapsack_labels", "dp"}};
  CHECK_NOTHROW(require_pipeline_checkpoint(topk, Pipeline::kDp));
  CHECK_NOTHROW(require_pipeline_checkpoint(den, Pipeline::kKtDen));
  CHECK_NOTHROW(require_pipeline_checkpoint(dp, Pipeline::kKtDp));
  CHECK_THROWS_AS(require_pipeline_checkpoint(topk, Pipeline::kKtDen), ContractError);
  CHECK_THROWS_AS(require_pipeline_checkpoint(den, Pipeline::kKtDp), ContractError);
}

TEST_CASE("summary json carries the documented fields") {
  const auto doc = Document::from_sentences("x", {"one.", "two."});
  const auto r = make_summary(doc, {1, 0, 1}, {}, "dp");
  CHECK(r.indices == std::vector<int>{0, 1});
  const auto j = r.to_json();
  CHECK(j.at("id") == "x");
  CHECK(j.at("indices") == nlohmann::json::array({0, 1}));
  CHECK(j.at("summary") == "one. two.");
  CHECK(j.at("chars") == 8);
}
