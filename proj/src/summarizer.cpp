#include "lcsum/summarizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <spdlog/spdlog.h>

#include "lcsum/checkpoint.hpp"
#include "lcsum/errors.hpp"

namespace lcsum {
namespace fs = std::filesystem;

namespace {

nlohmann::json scorer_json(const ScorerConfig& s) {
  return {{"layers", s.layers},       {"heads", s.heads},         {"hidden", s.hidden},
          {"ffn", s.ffn},             {"positions", s.positions}, {"max_sentences", s.max_sentences}};
}

Tensor mean_or_zero(const std::vector<Tensor>& terms, int count) {
  if (terms.empty() || count == 0) return Tensor::scalar(0);
  Tensor acc = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) acc = add(acc, terms[i]);
  return scale(acc, Real(1) / static_cast<Real>(count));
}

}  // namespace

Tensor positive_term(const Tensor& prediction, const Tensor& target) {
  return scale(sum(cosine(prediction, target)), -1);
}

Tensor negative_term(const Tensor& prediction, const Tensor& target) { return sum(abs(cosine(prediction, target))); }

Tensor weighted_objective(const Tensor& rest_ext, const Tensor& ext_doc, const ContrastiveConfig& cfg) {
  return add(scale(rest_ext, static_cast<Real>(cfg.lambda1)), scale(ext_doc, static_cast<Real>(cfg.lambda2)));
}

// ---- configuration ----

void SummarizerConfig::validate() const {
  LCSUM_REQUIRE(input_dim >= 1, "summarizer input dimension must be positive");
  scorer.body().validate();
  contrastive.encoder.validate();
  contrastive.predictor.validate();
  LCSUM_REQUIRE(contrastive.encoder.width == contrastive.predictor.width,
                "encoder and predictor widths must match");
  LCSUM_REQUIRE(scorer.max_sentences >= 2, "max sentences must be at least 2");
  LCSUM_REQUIRE(contrastive.lambda1 >= 0 && contrastive.lambda2 >= 0, "lambda weights must be non-negative");
  LCSUM_REQUIRE(contrastive.lambda1 > 0 || contrastive.lambda2 > 0, "lambda1 and lambda2 cannot both be zero");
  LCSUM_REQUIRE(contrastive.m >= 1 && contrastive.m < scorer.max_sentences, "M must be in [1, max sentences)");
  LCSUM_REQUIRE(contrastive.negative_quantile > 0 && contrastive.negative_quantile <= 1,
                "negative quantile must be in (0, 1]");
  LCSUM_REQUIRE(contrastive.temperature > 0, "temperature must be positive");
  LCSUM_REQUIRE(contrastive.target == "encoder" || contrastive.target == "input",
                "contrastive target must be 'encoder' or 'input', got '" + contrastive.target + "'");
}

nlohmann::json SummarizerConfig::to_json() const {
  return {{"model", "summarizer"},
          {"input_dim", input_dim},
          {"seed", seed},
          {"sentence_encoder", sentence_encoder},
          {"scorer", scorer_json(scorer)},
          {"contrastive",
           {{"encoder", contrastive.encoder.to_json()},
            {"predictor", contrastive.predictor.to_json()},
            {"lambda1", contrastive.lambda1},
            {"lambda2", contrastive.lambda2},
            {"m", contrastive.m},
            {"negative_quantile", contrastive.negative_quantile},
            {"temperature", contrastive.temperature},
            {"stop_grad_target", contrastive.stop_grad_target},
            {"predictor_positions", contrastive.predictor_positions},
            {"target", contrastive.target}}}};
}

SummarizerConfig SummarizerConfig::from_json(const nlohmann::json& j) {
  SummarizerConfig c;
  try {
    if (j.value("model", std::string("summarizer")) != "summarizer") {
      throw ContractError("checkpoint is not a summarizer: model=" + j.value("model", std::string()));
    }
    c.input_dim = j.at("input_dim").get<int>();
    c.seed = j.value("seed", c.seed);
    c.sentence_encoder = j.value("sentence_encoder", nlohmann::json());
    const auto& s = j.at("scorer");
    c.scorer.layers = s.at("layers").get<int>();
    c.scorer.heads = s.at("heads").get<int>();
    c.scorer.hidden = s.at("hidden").get<int>();
    c.scorer.ffn = s.at("ffn").get<int>();
    c.scorer.positions = s.at("positions").get<bool>();
    c.scorer.max_sentences = s.at("max_sentences").get<int>();
    const auto& k = j.at("contrastive");
    c.contrastive.encoder = TransformerConfig::from_json(k.at("encoder"));
    c.contrastive.predictor = TransformerConfig::from_json(k.at("predictor"));
    c.contrastive.lambda1 = k.at("lambda1").get<double>();
    c.contrastive.lambda2 = k.at("lambda2").get<double>();
    c.contrastive.m = k.at("m").get<int>();
    c.contrastive.negative_quantile = k.at("negative_quantile").get<double>();
    c.contrastive.temperature = k.at("temperature").get<double>();
    c.contrastive.stop_grad_target = k.value("stop_grad_target", true);
    c.contrastive.predictor_positions = k.value("predictor_positions", true);
    c.contrastive.target = k.value("target", std::string("encoder"));
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(std::string("bad summarizer config: ") + e.what());
  }
  c.validate();
  return c;
}

// ---- documents ----

EncodedDocument encode_document(const Document& doc, const SentenceEncoder& encoder) {
  EncodedDocument d;
  d.id = doc.id;
  d.embeddings = encoder.encode(doc);
  d.char_lengths = doc.char_lengths;
  d.planted = doc.planted;
  LCSUM_REQUIRE(d.embeddings.rows == doc.size(), "encoder row count differs from sentence count in '" + doc.id + "'");
  return d;
}

std::vector<EncodedDocument> encode_corpus(const std::vector<Document>& docs, const SentenceEncoder& encoder) {
  std::vector<EncodedDocument> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(encode_document(d, encoder));
  return out;
}

PackedDocuments pack_documents(std::span<const EncodedDocument* const> docs, int max_sentences) {
  LCSUM_REQUIRE(!docs.empty(), "no documents to pack");
  const int dim = docs.front()->embeddings.dim;
  PackedDocuments p;
  std::vector<Real> values;
  std::vector<int> lengths;
  for (const EncodedDocument* d : docs) {
    LCSUM_REQUIRE(d->embeddings.rows >= 1, "document '" + d->id + "' has no sentences");
    LCSUM_REQUIRE(d->embeddings.dim == dim, "document '" + d->id + "' has embedding dimension " +
                                                std::to_string(d->embeddings.dim) + ", expected " +
                                                std::to_string(dim));
    LCSUM_REQUIRE(static_cast<int>(d->char_lengths.size()) == d->embeddings.rows,
                  "document '" + d->id + "': lengths and embeddings disagree");
    const int rows = std::min(d->embeddings.rows, max_sentences);
    values.insert(values.end(), d->embeddings.values.begin(),
                  d->embeddings.values.begin() + static_cast<std::ptrdiff_t>(rows) * dim);
    for (int i = 0; i < rows; ++i) p.lengths.push_back(static_cast<Real>(d->char_lengths[static_cast<std::size_t>(i)]));
    lengths.push_back(rows);
  }
  p.layout = SegmentLayout::from_lengths(lengths);
  p.e = Tensor::constant({p.layout.total(), dim}, std::move(values));
  return p;
}

std::string to_string(SelectionMode mode) { return mode == SelectionMode::kTopK ? "topk" : "knapsack"; }

SelectionMode parse_selection_mode(const std::string& name) {
  if (name == "topk") return SelectionMode::kTopK;
  if (name == "knapsack") return SelectionMode::kKnapsack;
  throw ContractError("unknown selection mode: " + name);
}

// ---- model ----

Summarizer::Summarizer(const SummarizerConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(cfg_.seed);
  const int hs = cfg_.scorer.hidden;
  const int hc = cfg_.contrastive.encoder.width;
  const int rows = cfg_.scorer.max_sentences;
  Linear::init(store_, "scorer.input", cfg_.input_dim, hs, rng);
  if (cfg_.scorer.positions) {
    std::vector<Real> table(static_cast<std::size_t>(rows) * hs);
    for (auto& v : table) v = static_cast<Real>(0.02 * rng.normal());
    store_.add("scorer.positions", {rows, hs}, std::move(table));
  }
  TransformerEncoder::init(store_, "scorer.body", cfg_.scorer.body(), rng);
  Linear::init(store_, "scorer.output", hs, 1, rng);

  Linear::init(store_, "encoder.input", cfg_.input_dim, hc, rng);
  TransformerEncoder::init(store_, "encoder.body", cfg_.contrastive.encoder, rng);

  if (cfg_.contrastive.predictor_positions) {
    std::vector<Real> table(static_cast<std::size_t>(rows) * hc);
    for (auto& v : table) v = static_cast<Real>(0.02 * rng.normal());
    store_.add("predictor.positions", {rows, hc}, std::move(table));
  }
  TransformerEncoder::init(store_, "predictor.body", cfg_.contrastive.predictor, rng);
  Linear::init(store_, "predictor.output", hc, cfg_.contrastive.target == "input" ? cfg_.input_dim : hc, rng);
  bind();
}

void Summarizer::bind() {
  scorer_in_ = Linear::bind(store_, "scorer.input");
  if (cfg_.scorer.positions) scorer_positions_ = store_.get("scorer.positions");
  scorer_body_ = TransformerEncoder::bind(store_, "scorer.body", cfg_.scorer.body());
  scorer_out_ = Linear::bind(store_, "scorer.output");
  encoder_in_ = Linear::bind(store_, "encoder.input");
  encoder_body_ = TransformerEncoder::bind(store_, "encoder.body", cfg_.contrastive.encoder);
  if (cfg_.contrastive.predictor_positions) predictor_positions_ = store_.get("predictor.positions");
  predictor_body_ = TransformerEncoder::bind(store_, "predictor.body", cfg_.contrastive.predictor);
  predictor_out_ = Linear::bind(store_, "predictor.output");
}

Summarizer Summarizer::load(const fs::path& dir) {
  Summarizer s(SummarizerConfig::from_json(load_checkpoint_config(dir)));
  load_checkpoint_weights(dir, s.store_);
  return s;
}

void Summarizer::save(const fs::path& dir, const nlohmann::json& extra) const {
  nlohmann::json cfg = cfg_.to_json();
  if (extra.is_object()) cfg.update(extra);
  save_checkpoint(dir, cfg, store_);
}

std::vector<std::string> Summarizer::load_pretrained(const fs::path& dir) {
  std::vector<std::string> loaded;
  for (const auto& a : read_weights(dir / "weights.bin")) {
    if (!store_.contains(a.name)) continue;
    Tensor t = store_.get(a.name);
    if (Shape(a.dims.begin(), a.dims.end()) != t.shape()) {
      spdlog::warn("pretrained tensor {} has a different shape; keeping the fresh initialisation", a.name);
      continue;
    }
    auto w = t.mutable_data();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<Real>(a.values[i]);
    loaded.push_back(a.name);
  }
  return loaded;
}

Tensor Summarizer::scores(const Tensor& e, const SegmentLayout& layout) const {
  LCSUM_REQUIRE(e.rank() == 2 && e.cols() == cfg_.input_dim, "scorer input has the wrong width");
  LCSUM_REQUIRE(e.rows() == layout.total() && layout.count() >= 1, "scorer input does not match the layout");
  Tensor x = scorer_in_(e);
  if (cfg_.scorer.positions) x = add_positions(x, scorer_positions_, layout);
  return reshape(scorer_out_(scorer_body_(x, layout)), {e.rows()});
}

std::vector<Real> Summarizer::score(const SentenceEmbeddings& emb) const {
  LCSUM_REQUIRE(emb.rows >= 1, "cannot score an empty document");
  LCSUM_REQUIRE(emb.dim == cfg_.input_dim, "embedding dimension " + std::to_string(emb.dim) +
                                               " does not match the scorer input " + std::to_string(cfg_.input_dim));
  const int kept = std::min(emb.rows, cfg_.scorer.max_sentences);
  std::vector<Real> rows(emb.values.begin(), emb.values.begin() + static_cast<std::ptrdiff_t>(kept) * emb.dim);
  NoGradGuard ng;
  auto out = scores(Tensor::constant({kept, emb.dim}, std::move(rows)), SegmentLayout::single(kept)).to_vector();
  const Real floor = *std::min_element(out.begin(), out.end());
  out.resize(static_cast<std::size_t>(emb.rows), floor);
  return out;
}

Tensor Summarizer::encode(const Tensor& e, const SegmentLayout& layout) const {
  return encoder_body_(encoder_in_(e), layout);
}

Tensor Summarizer::predict(const Tensor& h, const SegmentLayout& layout, bool detached_weights) const {
  const bool positions = cfg_.contrastive.predictor_positions;
  if (!detached_weights) {
    return predictor_out_(predictor_body_(positions ? add_positions(h, predictor_positions_, layout) : h, layout));
  }
  ParamStore frozen;
  for (const auto& name : store_.names()) {
    if (name.rfind("predictor.", 0) != 0) continue;
    const Tensor& t = store_.get(name);
    frozen.add(name, t.shape(), t.to_vector());
  }
  frozen.set_trainable(false);
  const auto body = TransformerEncoder::bind(frozen, "predictor.body", cfg_.contrastive.predictor);
  const auto out = Linear::bind(frozen, "predictor.output");
  return out(body(positions ? add_positions(h, frozen.get("predictor.positions"), layout) : h, layout));
}

LossBreakdown Summarizer::loss(std::span<const EncodedDocument* const> docs, const LossOptions& opts) const {
  const auto& cc = cfg_.contrastive;
  PackedDocuments packed = pack_documents(docs, cfg_.scorer.max_sentences);
  const SegmentLayout& layout = packed.layout;
  const int batch = layout.count();
  const int m = layout.total();

  LossBreakdown out;
  out.layout = layout;
  if (!opts.fixed_scores.empty()) {
    LCSUM_REQUIRE(opts.fixed_scores.size() == static_cast<std::size_t>(m), "fixed scores have the wrong length");
    out.scores = Tensor::parameter({m}, std::vector<Real>(opts.fixed_scores.begin(), opts.fixed_scores.end()));
  } else if (opts.random_selection) {
    Rng fallback(hash64(opts.sample_seed, 0x7a3du));
    Rng& noise = opts.gumbel ? *opts.gumbel : fallback;
    std::vector<Real> u(static_cast<std::size_t>(m));
    for (auto& v : u) v = static_cast<Real>(noise.uniform());
    out.scores = Tensor::vector(std::move(u));
  } else {
    out.scores = scores(packed.e, layout);
  }

  if (opts.mode == SelectionMode::kTopK) {
    const std::vector<int> ks(static_cast<std::size_t>(batch), cc.m);
    out.mask = gumbel_topk(out.scores, layout, ks,
                           GumbelOptions{opts.temperature, opts.random_selection ? nullptr : opts.gumbel});
  } else {
    LCSUM_REQUIRE(opts.knapsack != nullptr, "knapsack mode needs a knapsack net");
    LCSUM_REQUIRE(static_cast<int>(opts.capacities.size()) == batch, "knapsack mode needs one capacity per document");
    std::vector<Real> sizes(static_cast<std::size_t>(m));
    for (int s = 0; s < batch; ++s) {
      const auto cap = opts.capacities[static_cast<std::size_t>(s)];
      LCSUM_REQUIRE(cap > 0, "capacities must be positive");
      for (int i = layout.begin(s); i < layout.end(s); ++i) {
        sizes[static_cast<std::size_t>(i)] = packed.lengths[static_cast<std::size_t>(i)] / static_cast<Real>(cap);
      }
    }
    const Tensor profits = segment_normalize(segment_min_shift(out.scores, layout), layout);
    const Tensor features = concat_cols({profits, Tensor::vector(std::move(sizes))});
    out.mask = st_round(opts.knapsack->scores(features, layout));
  }

  // k: a random selected row; i': a random low-scoring unselected row.
  Rng sampler(opts.sample_seed);
  std::vector<Real> negative_keep(static_cast<std::size_t>(m), 0);
  std::vector<int> excluded, rest_docs, negatives, negative_targets, complement_docs;
  for (int s = 0; s < batch; ++s) {
    std::vector<int> selected, unselected;
    for (int i = layout.begin(s); i < layout.end(s); ++i) {
      (out.mask.hard[static_cast<std::size_t>(i)] != 0 ? selected : unselected).push_back(i);
    }
    if (selected.empty()) {
      spdlog::debug("document '{}': nothing selected, rest-ext term skipped", docs[static_cast<std::size_t>(s)]->id);
      continue;
    }
    excluded.push_back(selected[static_cast<std::size_t>(
        sampler.uniform_int(0, static_cast<std::int64_t>(selected.size()) - 1))]);
    rest_docs.push_back(s);
    if (unselected.empty()) {
      spdlog::debug("document '{}': everything selected, negative terms skipped", docs[static_cast<std::size_t>(s)]->id);
      continue;
    }
    complement_docs.push_back(s);
    std::stable_sort(unselected.begin(), unselected.end(),
                     [&](int a, int b) { return out.scores[static_cast<std::size_t>(a)] < out.scores[static_cast<std::size_t>(b)]; });
    const auto pool = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(cc.negative_quantile * static_cast<double>(unselected.size()))));
    negatives.push_back(unselected[static_cast<std::size_t>(sampler.uniform_int(0, static_cast<std::int64_t>(pool) - 1))]);
    negative_targets.push_back(excluded.back());
    // Negative extract: as many of the lowest-scoring unselected rows as were selected.
    const std::size_t take = std::min(selected.size(), unselected.size());
    for (std::size_t j = 0; j < take; ++j) negative_keep[static_cast<std::size_t>(unselected[j])] = 1;
  }

  SelectionMask mask = out.mask;
  RestMask rest = rest_mask(mask, excluded);
  RestMask rest_neg = exclusion_mask(mask, negatives);
  if (!opts.mask_offset.empty()) {
    LCSUM_REQUIRE(opts.mask_offset.size() == static_cast<std::size_t>(m), "mask offset has the wrong length");
    for (int i = 0; i < m; ++i) {
      const Real off = opts.mask_offset[static_cast<std::size_t>(i)];
      mask.hard[static_cast<std::size_t>(i)] += off;
      rest.delta[static_cast<std::size_t>(i)] += off;
      rest_neg.delta[static_cast<std::size_t>(i)] += off;
      negative_keep[static_cast<std::size_t>(i)] -= off;
    }
  }

  // Views: [full,] rest (k masked), rest (i' masked), extract, negative extract.
  const bool input_target = cc.target == "input";
  std::vector<Tensor> view_list;
  if (!input_target) view_list.push_back(packed.e);
  view_list.push_back(mask_rest(packed.e, rest));
  view_list.push_back(mask_rest(packed.e, rest_neg));
  view_list.push_back(mask_selected(packed.e, mask));
  view_list.push_back(mask_negative(packed.e, mask, negative_keep));
  const int view_count = static_cast<int>(view_list.size());
  const Tensor h = encode(concat_rows(view_list), layout.tiled(view_count));
  const int first = input_target ? 0 : m;
  const Tensor h_rest = slice_rows(h, first, first + m);
  const Tensor h_rest_neg = slice_rows(h, first + m, first + 2 * m);
  const Tensor h_ext = slice_rows(h, first + 2 * m, first + 3 * m);
  const Tensor h_comp = slice_rows(h, first + 3 * m, first + 4 * m);

  Tensor p_rest, p_ext, q_rest, q_comp;
  if (opts.gate_predictor) {
    const Tensor p = predict(concat_rows({h_rest, h_ext}), layout.tiled(2));
    const Tensor q = predict(concat_rows({h_rest_neg, h_comp}), layout.tiled(2), true);
    p_rest = slice_rows(p, 0, m);
    p_ext = slice_rows(p, m, 2 * m);
    q_rest = slice_rows(q, 0, m);
    q_comp = slice_rows(q, m, 2 * m);
  } else {
    const Tensor p = predict(concat_rows({h_rest, h_ext, h_rest_neg, h_comp}), layout.tiled(4));
    p_rest = slice_rows(p, 0, m);
    p_ext = slice_rows(p, m, 2 * m);
    q_rest = slice_rows(p, 2 * m, 3 * m);
    q_comp = slice_rows(p, 3 * m, 4 * m);
  }
  Tensor target = packed.e;
  if (!input_target) {
    const Tensor h_full = slice_rows(h, 0, m);
    target = cc.stop_grad_target ? detach(h_full) : h_full;
  }

  std::vector<Tensor> re_terms;
  if (!excluded.empty()) {
    const Tensor tk = take_rows(target, excluded);
    re_terms.push_back(positive_term(take_rows(p_rest, excluded), tk));
    if (!negatives.empty() && !opts.positives_only) {
      re_terms.push_back(negative_term(take_rows(q_rest, negatives), take_rows(target, negative_targets)));
    }
  }
  const Tensor l_re = mean_or_zero(re_terms, static_cast<int>(excluded.size()));

  const Tensor doc_mean = segment_mean_rows(target, layout);
  std::vector<Tensor> ed_terms{positive_term(segment_mean_rows(p_ext, layout), doc_mean)};
  if (!complement_docs.empty() && !opts.positives_only) {
    const Tensor c = cosine(segment_mean_rows(q_comp, layout), doc_mean);
    ed_terms.push_back(sum(abs(take_rows(c, complement_docs))));
  }
  const Tensor l_ed = mean_or_zero(ed_terms, batch);

  out.rest_ext = l_re.item();
  out.ext_doc = l_ed.item();
  out.rest_docs = static_cast<int>(excluded.size());
  out.ext_doc_docs = batch;
  out.total = weighted_objective(l_re, l_ed, cc);
  return out;
}

// ---- training ----

std::vector<CheckpointRegistry::Entry> CheckpointRegistry::offer(Entry entry) {
  auto pos = std::upper_bound(entries_.begin(), entries_.end(), entry, [](const Entry& a, const Entry& b) {
    return a.val_loss < b.val_loss || (a.val_loss == b.val_loss && a.step < b.step);
  });
  entries_.insert(pos, std::move(entry));
  std::vector<Entry> evicted;
  while (entries_.size() > capacity_) {
    evicted.push_back(std::move(entries_.back()));
    entries_.pop_back();
  }
  return evicted;
}

namespace {

std::int64_t validation_capacity(const SumTrainOptions& opts, std::size_t doc_index) {
  const auto pick = hash64(opts.seed ^ 0x5a17u, doc_index) % opts.capacities.size();
  return opts.capacities[pick];
}

void check_knapsack_frozen(const SumTrainOptions& opts) {
  if (opts.mode != SelectionMode::kKnapsack) return;
  LCSUM_REQUIRE(opts.knapsack != nullptr, "knapsack mode needs a knapsack net");
  LCSUM_REQUIRE(!opts.capacities.empty(), "knapsack mode needs target capacities");
  for (const auto& t : opts.knapsack->params().tensors()) {
    LCSUM_REQUIRE(!t.requires_grad(), "the knapsack net must be frozen before summarizer training");
  }
}

}  // namespace

double validation_loss(const Summarizer& model, std::span<const EncodedDocument> docs, const SumTrainOptions& opts,
                       int batch_size) {
  LCSUM_REQUIRE(!docs.empty(), "validation set is empty");
  check_knapsack_frozen(opts);
  NoGradGuard ng;
  double total = 0;
  std::vector<const EncodedDocument*> batch;
  for (std::size_t start = 0; start < docs.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t stop = std::min(docs.size(), start + static_cast<std::size_t>(batch_size));
    batch.clear();
    LossOptions lo;
    lo.mode = opts.mode;
    lo.temperature = opts.temperature_end;
    lo.sample_seed = hash64(opts.seed ^ 0xa11du, start);
    lo.knapsack = opts.knapsack;
    lo.random_selection = opts.random_selection;
    lo.positives_only = opts.positives_only;
    for (std::size_t i = start; i < stop; ++i) {
      batch.push_back(&docs[i]);
      if (opts.mode == SelectionMode::kKnapsack) lo.capacities.push_back(validation_capacity(opts, i));
    }
    total += model.loss(batch, lo).total.item() * static_cast<double>(stop - start);
  }
  return total / static_cast<double>(docs.size());
}

SumTrainReport train_summarizer(Summarizer& model, std::span<const EncodedDocument> train,
                                std::span<const EncodedDocument> valid, const SumTrainOptions& opts) {
  LCSUM_REQUIRE(!train.empty(), "training set is empty");
  LCSUM_REQUIRE(opts.steps >= 1 && opts.batch_size >= 1 && opts.val_every >= 1, "bad training schedule");
  check_knapsack_frozen(opts);

  const std::set<std::string> pretrained(opts.pretrained.begin(), opts.pretrained.end());
  std::vector<Tensor> fresh_params, loaded_params;
  for (const auto& name : model.params().names()) {
    (pretrained.count(name) ? loaded_params : fresh_params).push_back(model.params().get(name));
  }
  Adam main_opt(fresh_params), alt_opt(loaded_params);

  SumTrainReport report;
  if (opts.knapsack) report.knapsack_checksum_before = opts.knapsack->params().checksum();

  const Rng root(opts.seed);
  Rng order_rng = root.derive(hash_string("batches"));
  Rng gumbel = root.derive(hash_string("gumbel"));
  Rng capacity_rng = root.derive(hash_string("capacity"));

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();

  CheckpointRegistry registry(opts.keep_top);
  if (opts.out_dir) fs::create_directories(*opts.out_dir);
  report.initial_val_loss = validation_loss(model, valid, opts);
  report.final_val_loss = report.initial_val_loss;
  spdlog::info("initial validation loss {:.5f}", report.initial_val_loss);

  double window_loss = 0;
  long window_steps = 0;
  std::vector<const EncodedDocument*> batch;
  for (long step = 1; step <= opts.steps; ++step) {
    batch.clear();
    while (static_cast<int>(batch.size()) < std::min<int>(opts.batch_size, static_cast<int>(train.size()))) {
      if (cursor == order.size()) {
        for (std::size_t i = order.size(); i > 1; --i) {
          std::swap(order[i - 1], order[static_cast<std::size_t>(order_rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
        }
        cursor = 0;
      }
      batch.push_back(&train[order[cursor++]]);
    }

    LossOptions lo;
    lo.mode = opts.mode;
    lo.gumbel = &gumbel;
    lo.sample_seed = hash64(opts.seed, static_cast<std::uint64_t>(step));
    lo.temperature = annealed_temperature(opts.temperature_start, opts.temperature_end, step - 1, opts.steps);
    lo.knapsack = opts.knapsack;
    lo.random_selection = opts.random_selection;
    lo.positives_only = opts.positives_only;
    if (opts.mode == SelectionMode::kKnapsack) {
      for (std::size_t i = 0; i < batch.size(); ++i) {
        lo.capacities.push_back(opts.capacities[static_cast<std::size_t>(
            capacity_rng.uniform_int(0, static_cast<std::int64_t>(opts.capacities.size()) - 1))]);
      }
    }

    model.params().zero_grad();
    const LossBreakdown lb = model.loss(batch, lo);
    const double value = lb.total.item();
    if (!std::isfinite(value)) throw NumericError("summarizer loss became non-finite at step " + std::to_string(step));
    backward(lb.total);
    main_opt.step(opts.lr);
    if (!loaded_params.empty()) alt_opt.step(opts.lr_pretrained);

    report.step_losses.push_back(value);
    window_loss += value;
    ++window_steps;
    if (opts.on_step) opts.on_step(step, value);

    if (step % opts.val_every == 0 || step == opts.steps) {
      const double val = validation_loss(model, valid, opts);
      report.final_val_loss = val;
      report.curve.push_back({step, window_loss / static_cast<double>(window_steps), val});
      spdlog::info("step {} train {:.5f} val {:.5f}", step, window_loss / static_cast<double>(window_steps), val);
      window_loss = 0;
      window_steps = 0;
      if (opts.out_dir) {
        const fs::path dir = *opts.out_dir / ("ckpt-step-" + std::to_string(step));
        nlohmann::json extra = opts.checkpoint_extra;
        extra.update({{"step", step}, {"val_loss", val}, {"mode", to_string(opts.mode)}});
        model.save(dir, extra);
        for (const auto& gone : registry.offer({step, val, dir})) fs::remove_all(gone.dir);
      } else {
        registry.offer({step, val, {}});
      }
      if (opts.on_validate) opts.on_validate(step, val);
    }
  }

  report.best = registry.entries();
  if (opts.knapsack) report.knapsack_checksum_after = opts.knapsack->params().checksum();
  if (opts.out_dir) {
    std::string curve;
    for (const auto& p : report.curve) {
      nlohmann::ordered_json j;
      j["step"] = p.step;
      j["train_loss"] = p.train_loss;
      j["val_loss"] = p.val_loss;
      curve += j.dump() + "\n";
    }
    write_text_atomic(*opts.out_dir / "learning_curve.jsonl", curve);
    nlohmann::ordered_json best = nlohmann::ordered_json::array();
    for (const auto& e : report.best) {
      best.push_back({{"step", e.step}, {"val_loss", e.val_loss}, {"dir", e.dir.filename().string()}});
    }
    write_text_atomic(*opts.out_dir / "best.json", best.dump(2) + "\n");
  }
  return report;
}

std::vector<std::string> critic_parameters(const Summarizer& model) {
  std::vector<std::string> out;
  for (const auto& name : model.params().names()) {
    if (name.rfind("scorer.", 0) != 0) out.push_back(name);
  }
  return out;
}

SumTrainReport warm_up_critic(Summarizer& model, std::span<const EncodedDocument> train,
                              std::span<const EncodedDocument> valid, long steps, double lr, int batch_size,
                              std::uint64_t seed) {
  SumTrainOptions o;
  o.steps = steps;
  o.lr = lr;
  o.batch_size = batch_size;
  o.seed = hash64(seed, hash_string("warmup"));
  o.val_every = std::max(1L, steps / 5);
  o.random_selection = true;
  o.positives_only = true;
  return train_summarizer(model, train, valid, o);
}

}  // namespace lcsum
