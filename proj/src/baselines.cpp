#include "lcsum/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "lcsum/errors.hpp"

namespace lcsum {

SummaryResult lead_k(const Document& doc, int k) {
  LCSUM_REQUIRE(k >= 1, "lead-k needs k >= 1");
  std::vector<int> idx(static_cast<std::size_t>(std::min(k, doc.size())));
  std::iota(idx.begin(), idx.end(), 0);
  return make_summary(doc, std::move(idx), {}, "lead-" + std::to_string(k));
}

SimilarityMatrix SimilarityMatrix::cosine(const SentenceEmbeddings& emb) {
  SimilarityMatrix s;
  s.n = emb.rows;
  s.values.assign(static_cast<std::size_t>(s.n) * s.n, 0.0);
  std::vector<double> norms(static_cast<std::size_t>(s.n));
  for (int i = 0; i < s.n; ++i) {
    double q = 0;
    for (Real v : emb.row(i)) q += static_cast<double>(v) * v;
    norms[static_cast<std::size_t>(i)] = std::sqrt(q);
  }
  for (int i = 0; i < s.n; ++i) {
    for (int j = i; j < s.n; ++j) {
      const auto a = emb.row(i), b = emb.row(j);
      double dot = 0;
      for (int c = 0; c < emb.dim; ++c) dot += static_cast<double>(a[static_cast<std::size_t>(c)]) * b[static_cast<std::size_t>(c)];
      const double denom = norms[static_cast<std::size_t>(i)] * norms[static_cast<std::size_t>(j)];
      const double v = denom > 0 ? dot / denom : 0.0;
      s.values[static_cast<std::size_t>(i) * s.n + j] = v;
      s.values[static_cast<std::size_t>(j) * s.n + i] = v;
    }
  }
  return s;
}

std::string to_string(TextRankVariant v) { return v == TextRankVariant::kDegree ? "degree" : "pagerank"; }

TextRankVariant parse_textrank_variant(const std::string& name) {
  if (name == "degree") return TextRankVariant::kDegree;
  if (name == "pagerank") return TextRankVariant::kPageRank;
  throw ContractError("unknown textrank variant: " + name);
}

std::vector<double> centrality(const SimilarityMatrix& sim, TextRankVariant variant, const PageRankOptions& pr) {
  const int n = sim.n;
  LCSUM_REQUIRE(n >= 1, "centrality needs at least one sentence");
  std::vector<double> c(static_cast<std::size_t>(n), 0.0);
  if (variant == TextRankVariant::kDegree) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (j != i) c[static_cast<std::size_t>(i)] += sim.at(i, j);
      }
    }
    return c;
  }
  // Transition weights w[i][j]: share of i's outgoing mass sent to j.
  std::vector<double> w(static_cast<std::size_t>(n) * n, 0.0);
  std::vector<bool> dangling(static_cast<std::size_t>(n), false);
  for (int i = 0; i < n; ++i) {
    double row = 0;
    for (int j = 0; j < n; ++j) {
      if (j != i) row += std::max(0.0, sim.at(i, j));
    }
    dangling[static_cast<std::size_t>(i)] = row <= 0;
    for (int j = 0; j < n && row > 0; ++j) {
      if (j != i) w[static_cast<std::size_t>(i) * n + j] = std::max(0.0, sim.at(i, j)) / row;
    }
  }
  std::vector<double> r(static_cast<std::size_t>(n), 1.0 / n), next(static_cast<std::size_t>(n));
  for (int it = 0; it < pr.max_iterations; ++it) {
    double lost = 0;
    for (int i = 0; i < n; ++i) {
      if (dangling[static_cast<std::size_t>(i)]) lost += r[static_cast<std::size_t>(i)];
    }
    for (int j = 0; j < n; ++j) {
      double in = 0;
      for (int i = 0; i < n; ++i) in += r[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(i) * n + j];
      next[static_cast<std::size_t>(j)] = (1 - pr.damping) / n + pr.damping * (in + lost / n);
    }
    double delta = 0;
    for (int i = 0; i < n; ++i) delta += std::abs(next[static_cast<std::size_t>(i)] - r[static_cast<std::size_t>(i)]);
    r.swap(next);
    if (delta < pr.tolerance) break;
  }
  return r;
}

namespace {

std::vector<Real> centrality_scores(const SentenceEmbeddings& emb, TextRankVariant variant) {
  const auto c = centrality(SimilarityMatrix::cosine(emb), variant);
  return {c.begin(), c.end()};
}

}  // namespace

SummaryResult textrank(const Document& doc, const SentenceEmbeddings& emb, int k, TextRankVariant variant) {
  LCSUM_REQUIRE(emb.rows == doc.size(), "embeddings do not match document '" + doc.id + "'");
  return extract_topk(doc, centrality_scores(emb, variant), k, "textrank-" + to_string(variant));
}

SummaryResult textrank_length_controlled(const Document& doc, const SentenceEmbeddings& emb, std::int64_t capacity,
                                         TextRankVariant variant) {
  LCSUM_REQUIRE(emb.rows == doc.size(), "embeddings do not match document '" + doc.id + "'");
  return extract_length_controlled(doc, centrality_scores(emb, variant), capacity,
                                   "textrank-" + to_string(variant) + "+dp");
}

// ---- ROUGE ----

namespace {

PRF make_prf(double overlap, double cand_total, double ref_total) {
  PRF p;
  p.precision = cand_total > 0 ? overlap / cand_total : 0;
  p.recall = ref_total > 0 ? overlap / ref_total : 0;
  p.f1 = p.precision + p.recall > 0 ? 2 * p.precision * p.recall / (p.precision + p.recall) : 0;
  return p;
}

std::map<std::string, int> ngrams(const std::vector<std::string>& toks, int n) {
  std::map<std::string, int> out;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= toks.size(); ++i) {
    std::string key = toks[i];
    for (int k = 1; k < n; ++k) key += '\x1f' + toks[i + static_cast<std::size_t>(k)];
    ++out[key];
  }
  return out;
}

PRF ngram_prf(const std::vector<std::string>& cand, const std::vector<std::string>& ref, int n) {
  const auto c = ngrams(cand, n), r = ngrams(ref, n);
  double overlap = 0, ct = 0, rt = 0;
  for (const auto& [g, k] : c) {
    ct += k;
    auto it = r.find(g);
    if (it != r.end()) overlap += std::min(k, it->second);
  }
  for (const auto& [g, k] : r) rt += k;
  return make_prf(overlap, ct, rt);
}

PRF lcs_prf(const std::vector<std::string>& cand, const std::vector<std::string>& ref) {
  std::vector<int> prev(ref.size() + 1, 0), cur(ref.size() + 1, 0);
  for (const auto& t : cand) {
    for (std::size_t j = 1; j <= ref.size(); ++j) {
      cur[j] = t == ref[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    prev.swap(cur);
  }
  return make_prf(prev[ref.size()], static_cast<double>(cand.size()), static_cast<double>(ref.size()));
}

void keep_best(PRF& best, const PRF& p) {
  if (p.f1 > best.f1) best = p;
}

}  // namespace

RougeScore rouge(const std::string& candidate, const std::vector<std::string>& references, bool char_unigrams) {
  RougeScore best;
  const auto cand = tokenize(candidate, char_unigrams);
  if (cand.empty()) return best;
  for (const auto& ref_text : references) {
    const auto ref = tokenize(ref_text, char_unigrams);
    keep_best(best.r1, ngram_prf(cand, ref, 1));
    keep_best(best.r2, ngram_prf(cand, ref, 2));
    keep_best(best.rl, lcs_prf(cand, ref));
  }
  return best;
}

SummaryResult oracle_extract(const Document& doc, int m, bool char_unigrams) {
  LCSUM_REQUIRE(m >= 1, "oracle needs m >= 1");
  LCSUM_REQUIRE(!doc.reference.empty(), "oracle needs references for '" + doc.id + "'");
  std::vector<int> chosen;
  double current = 0;
  while (static_cast<int>(chosen.size()) < m) {
    int best_i = -1;
    double best_score = current;
    for (int i = 0; i < doc.size(); ++i) {
      if (std::find(chosen.begin(), chosen.end(), i) != chosen.end()) continue;
      auto trial = chosen;
      trial.push_back(i);
      const auto s = make_summary(doc, trial, {}, "oracle");
      const auto r = rouge(s.summary, doc.reference, char_unigrams);
      const double score = r.r1.f1 + r.r2.f1;
      if (score > best_score) {
        best_score = score;
        best_i = i;
      }
    }
    if (best_i < 0) break;
    chosen.push_back(best_i);
    current = best_score;
  }
  return make_summary(doc, std::move(chosen), {}, "oracle");
}

double planted_accuracy(const SummaryResult& r, std::span<const int> planted) {
  if (planted.empty()) return 0;
  int hits = 0;
  for (int p : planted) hits += std::binary_search(r.indices.begin(), r.indices.end(), p);
  return static_cast<double>(hits) / static_cast<double>(planted.size());
}

double planted_f1(const SummaryResult& r, std::span<const int> planted) {
  int hits = 0;
  for (int p : planted) hits += std::binary_search(r.indices.begin(), r.indices.end(), p);
  if (hits == 0) return 0;
  const double precision = static_cast<double>(hits) / static_cast<double>(r.indices.size());
  const double recall = static_cast<double>(hits) / static_cast<double>(planted.size());
  return 2 * precision * recall / (precision + recall);
}

namespace {

// Average ranks, ties sharing the mean of their positions.
std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2 + 1;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  LCSUM_REQUIRE(a.size() == b.size() && a.size() >= 2, "spearman needs two equal-length samples");
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double cov = 0, va = 0, vb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0 || vb == 0) return 0;
  return cov / std::sqrt(va * vb);
}

// ---- corpus reports ----

nlohmann::json CorpusReport::to_json() const {
  nlohmann::ordered_json j;
  j["pipeline"] = pipeline;
  j["documents"] = documents;
  j["skipped"] = skipped;
  j["r1"] = r1;
  j["r2"] = r2;
  j["rl"] = rl;
  if (length_mean) {
    j["length_mean"] = *length_mean;
    j["length_std"] = *length_std;
  }
  return nlohmann::json::parse(j.dump());
}

CorpusReport evaluate_corpus(std::span<const SummaryResult> results, std::span<const Document> corpus,
                             bool length_controlled, bool char_unigrams) {
  std::unordered_map<std::string, const Document*> by_id;
  for (const auto& d : corpus) by_id.emplace(d.id, &d);
  CorpusReport rep;
  rep.pipeline = results.empty() ? "" : results.front().pipeline;
  double s1 = 0, s2 = 0, sl = 0;
  for (const auto& r : results) {
    auto it = by_id.find(r.id);
    if (it == by_id.end()) throw ContractError("summary for unknown document '" + r.id + "'");
    if (it->second->reference.empty()) {
      ++rep.skipped;
      continue;
    }
    const auto score = rouge(r.summary, it->second->reference, char_unigrams);
    s1 += score.r1.f1;
    s2 += score.r2.f1;
    sl += score.rl.f1;
    ++rep.documents;
  }
  if (rep.skipped > 0) spdlog::warn("{} documents without references were skipped", rep.skipped);
  auto pct = [&](double s) {
    return rep.documents ? std::round(10000.0 * s / rep.documents) / 100.0 : 0.0;
  };
  rep.r1 = pct(s1);
  rep.r2 = pct(s2);
  rep.rl = pct(sl);
  if (length_controlled && !results.empty()) {
    const auto stats = report_lengths(results);
    rep.length_mean = stats.mean;
    rep.length_std = stats.stddev;
  }
  return rep;
}

std::string render_table(std::span<const CorpusReport> reports) {
  std::size_t width = 8;
  for (const auto& r : reports) width = std::max(width, r.pipeline.size());
  std::string out = fmt::format("{:<{}}  {:>6}  {:>6}  {:>6}  {:>12}  {:>5}\n", "pipeline", width, "R1", "R2", "RL",
                                "Ave. Len", "docs");
  for (const auto& r : reports) {
    const std::string len =
        r.length_mean ? fmt::format("{:.0f} ({:.0f})", *r.length_mean, *r.length_std) : std::string("-");
    out += fmt::format("{:<{}}  {:>6.2f}  {:>6.2f}  {:>6.2f}  {:>12}  {:>5}\n", r.pipeline, width, r.r1, r.r2, r.rl,
                       len, r.documents);
  }
  return out;
}

}  // namespace lcsum
