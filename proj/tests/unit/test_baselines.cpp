#include <doctest.h>

#include <algorithm>
#include <set>

#include "lcsum/baselines.hpp"
#include "lcsum/errors.hpp"
#include "lcsum/synth.hpp"

using namespace lcsum;

namespace {

SimilarityMatrix matrix(int n, std::vector<double> values) {
  SimilarityMatrix m;
  m.n = n;
  m.values = std::move(values);
  return m;
}

SentenceEmbeddings embeddings(int rows, int dim, std::vector<Real> values) {
  SentenceEmbeddings e;
  e.rows = rows;
  e.dim = dim;
  e.values = std::move(values);
  return e;
}

}  // namespace

TEST_CASE("rouge on identical, overlapping and empty candidates") {
  const auto same = rouge("the cat sat", {"the cat sat"});
  CHECK(same.r1.f1 == doctest::Approx(1.0));
  CHECK(same.r2.f1 == doctest::Approx(1.0));
  CHECK(same.rl.f1 == doctest::Approx(1.0));

  const auto partial = rouge("a b c", {"a b d"});
  CHECK(partial.r1.precision == doctest::Approx(2.0 / 3));
  CHECK(partial.r1.recall == doctest::Approx(2.0 / 3));
  CHECK(partial.r1.f1 == doctest::Approx(2.0 / 3));
  CHECK(partial.r2.f1 == doctest::Approx(0.5));
  CHECK(partial.rl.f1 == doctest::Approx(2.0 / 3));

  const auto empty = rouge("", {"a b d"});
  CHECK(empty.r1.f1 == 0);
  CHECK(empty.r2.f1 == 0);
  CHECK(empty.rl.f1 == 0);
}

TEST_CASE("rouge clips repeated n-grams and takes the best reference") {
  const auto clipped = rouge("a a a", {"a b c"});
  CHECK(clipped.r1.precision == doctest::Approx(1.0 / 3));
  CHECK(clipped.r1.recall == doctest::Approx(1.0 / 3));
  const auto multi = rouge("a b c", {"x y z", "a b c"});
  CHECK(multi.r1.f1 == doctest::Approx(1.0));
}

TEST_CASE("rouge ignores case, punctuation and spacing") {
  const auto a = rouge("The  cat, sat.", {"the cat sat"});
  CHECK(a.r1.f1 == doctest::Approx(1.0));
  CHECK(a.rl.f1 == doctest::Approx(1.0));
}

TEST_CASE("rouge character unigram mode") {
  const std::string cand = "\xE4\xBD\xA0\xE5\xA5\xBD";                  // two characters
  const std::string ref = "\xE4\xBD\xA0\xE4\xBB\xAC";                   // shares the first
  const auto r = rouge(cand, {ref}, true);
  CHECK(r.r1.f1 == doctest::Approx(0.5));
}

TEST_CASE("degree centrality reproduces the worked example") {
  const auto sim = matrix(3, {1, .5, .2, .5, 1, .4, .2, .4, 1});
  const auto c = centrality(sim, TextRankVariant::kDegree);
  CHECK(c[0] == doctest::Approx(0.7));
  CHECK(c[1] == doctest::Approx(0.9));
  CHECK(c[2] == doctest::Approx(0.6));
}

TEST_CASE("degree ranking is unchanged by a constant shift of similarities") {
  const auto sim = matrix(3, {1, .5, .2, .5, 1, .4, .2, .4, 1});
  auto shifted = sim;
  for (auto& v : shifted.values) v += 0.3;
  const auto a = centrality(sim, TextRankVariant::kDegree);
  const auto b = centrality(shifted, TextRankVariant::kDegree);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) CHECK((a[i] < a[j]) == (b[i] < b[j]));
  }
}

TEST_CASE("pagerank on a uniform matrix is uniform") {
  std::vector<double> v(25, 0.4);
  const auto c = centrality(matrix(5, v), TextRankVariant::kPageRank);
  for (double x : c) CHECK(x == doctest::Approx(c[0]).epsilon(1e-6));
}

TEST_CASE("textrank picks the most central sentence and breaks ties early") {
  const auto doc = Document::from_sentences("d", {"one.", "two.", "three."});
  // Rows chosen so the cosine matrix is the worked example's ordering.
  const auto emb = embeddings(3, 2, {1, 0, 0.8f, 0.6f, 0, 1});
  const auto r = textrank(doc, emb, 1);
  CHECK(r.indices == std::vector<int>{1});

  const auto twins = Document::from_sentences("t", {"x.", "x.", "y."});
  const auto twin_emb = embeddings(3, 2, {1, 0, 1, 0, 0.6f, 0.8f});
  CHECK(textrank(twins, twin_emb, 1).indices == std::vector<int>{0});
}

TEST_CASE("cosine similarity matrix is symmetric with a unit diagonal") {
  const auto emb = embeddings(3, 3, {1, 2, 0, 0, 1, 1, 3, 0, 1});
  const auto s = SimilarityMatrix::cosine(emb);
  for (int i = 0; i < 3; ++i) {
    CHECK(s.at(i, i) == doctest::Approx(1.0));
    for (int j = 0; j < 3; ++j) CHECK(s.at(i, j) == doctest::Approx(s.at(j, i)).epsilon(1e-6));
  }
}

TEST_CASE("lead_k takes the opening sentences in order") {
  const auto doc = Document::from_sentences("d", {"a.", "b.", "c.", "d.", "e."});
  CHECK(lead_k(doc, 3).indices == std::vector<int>{0, 1, 2});
  CHECK(lead_k(doc, 9).indices == std::vector<int>{0, 1, 2, 3, 4});
}

TEST_CASE("oracle finds a sentence equal to the reference and stops without gain") {
  const auto doc = Document::from_sentences("d", {"red apples fall.", "blue sky above.", "green grass grows."},
                                            {"blue sky above."});
  CHECK(oracle_extract(doc, 1).indices == std::vector<int>{1});
  CHECK(oracle_extract(doc, 3).indices == std::vector<int>{1});

  const auto disjoint = Document::from_sentences("z", {"alpha beta.", "gamma delta."}, {"omega psi."});
  CHECK(oracle_extract(disjoint, 2).indices.empty());
}

TEST_CASE("corpus report averages F1 and scales to percent") {
  std::vector<Document> corpus{Document::from_sentences("p", {"a b x y z."}, {"a b c d e"}),
                               Document::from_sentences("q", {"a b c x y."}, {"a b c d e"})};
  std::vector<SummaryResult> results{make_summary(corpus[0], {0}, {}, "lead"),
                                     make_summary(corpus[1], {0}, {}, "lead")};
  const auto rep = evaluate_corpus(results, corpus);
  CHECK(rep.r1 == doctest::Approx(50.00));
  CHECK(rep.documents == 2);
  CHECK(rep.pipeline == "lead");

  std::vector<Document> single{Document::from_sentences("s", {"the cat sat."}, {"the cat sat."})};
  std::vector<SummaryResult> exact{make_summary(single[0], {0}, {}, "oracle")};
  const auto full = evaluate_corpus(exact, single);
  CHECK(full.r1 == doctest::Approx(100));
  CHECK(full.r2 == doctest::Approx(100));
  CHECK(full.rl == doctest::Approx(100));

  const auto table = render_table(std::vector<CorpusReport>{rep, full});
  CHECK(table.find("Ave. Len") != std::string::npos);
  CHECK(table.find("oracle") != std::string::npos);
}

TEST_CASE("unknown document ids are rejected") {
  std::vector<Document> corpus{Document::from_sentences("p", {"a."}, {"a"})};
  const auto other = Document::from_sentences("missing", {"a."});
  std::vector<SummaryResult> results{make_summary(other, {0}, {}, "lead")};
  CHECK_THROWS_AS(evaluate_corpus(results, corpus), ContractError);
}

TEST_CASE("planted metrics and spearman") {
  const auto doc = Document::from_sentences("d", {"a.", "b.", "c.", "d."});
  const std::vector<int> planted{1, 3};
  const auto r = make_summary(doc, {1, 2}, {}, "x");
  CHECK(planted_accuracy(r, planted) == doctest::Approx(0.5));
  CHECK(planted_f1(r, planted) == doctest::Approx(0.5));
  const std::vector<double> a{1, 2, 3, 4}, b{10, 20, 30, 40}, c{4, 3, 2, 1}, t{1, 1, 2, 3};
  CHECK(spearman(a, b) == doctest::Approx(1.0));
  CHECK(spearman(a, c) == doctest::Approx(-1.0));
  CHECK(spearman(t, a) > 0.9);
}

TEST_CASE("synthetic corpus is deterministic and well formed") {
  SynthCorpusOptions o;
  o.docs = 20;
  const auto a = synth_corpus(o);
  const auto b = synth_corpus(o);
  REQUIRE(a.size() == 20);
  std::set<std::string> ids;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].sentences == b[i].sentences);
    CHECK(a[i].planted.size() == 3);
    CHECK(std::is_sorted(a[i].planted.begin(), a[i].planted.end()));
    CHECK(a[i].size() >= o.min_sentences);
    CHECK(a[i].size() <= o.max_sentences);
    REQUIRE(a[i].reference.size() == 1);
    std::string joined;
    for (int p : a[i].planted) joined += (joined.empty() ? "" : " ") + a[i].sentences[static_cast<std::size_t>(p)];
    CHECK(a[i].reference[0] == joined);
    ids.insert(a[i].id);
  }
  CHECK(ids.size() == 20);
  o.seed = 43;
  CHECK(synth_corpus(o)[0].sentences != a[0].sentences);
}
