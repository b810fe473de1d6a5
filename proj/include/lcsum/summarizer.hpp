#pragma once

// Unsupervised extractive summarizer: a transformer scorer whose selections
// are trained through two prediction objectives on second-level sentence
// representations (rest-of-document -> extracted sentence, and extract ->
// whole document), optionally with a frozen knapsack net choosing the
// extract under a length budget.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lcsum/encoders.hpp"
#include "lcsum/knapsack_net.hpp"
#include "lcsum/nn.hpp"
#include "lcsum/optim.hpp"
#include "lcsum/selection.hpp"

namespace lcsum {

struct ScorerConfig {
  int layers = 2;
  int heads = 4;
  int hidden = 128;
  int ffn = 512;
  bool positions = true;
  int max_sentences = 64;

  TransformerConfig body() const { return {layers, heads, hidden, ffn}; }
};

struct ContrastiveConfig {
  TransformerConfig encoder{4, 8, 128, 512};
  TransformerConfig predictor{4, 8, 128, 512};
  double lambda1 = 1.0;
  double lambda2 = 0.3;
  int m = 3;
  double negative_quantile = 0.5;
  double temperature = 1.0;
  // Targets h^S and the document mean are detached, as in siamese training.
  bool stop_grad_target = true;
  bool predictor_positions = true;
  // Prediction targets: "encoder" (second-level representations of the full
  // document) or "input" (the frozen sentence embeddings).
  std::string target = "encoder";
};

struct SummarizerConfig {
  int input_dim = 512;
  ScorerConfig scorer;
  ContrastiveConfig contrastive;
  nlohmann::json sentence_encoder;  // descriptor from SentenceEncoder::to_json
  std::uint64_t seed = 42;

  void validate() const;
  nlohmann::json to_json() const;
  static SummarizerConfig from_json(const nlohmann::json& j);
};

// A document with its frozen first-level representation.
struct EncodedDocument {
  std::string id;
  SentenceEmbeddings embeddings;
  std::vector<int> char_lengths;
  std::vector<int> planted;
};

EncodedDocument encode_document(const Document& doc, const SentenceEncoder& encoder);
std::vector<EncodedDocument> encode_corpus(const std::vector<Document>& docs, const SentenceEncoder& encoder);

// Rows beyond the scorer's max_sentences are dropped before packing.
struct PackedDocuments {
  Tensor e;  // [m, input_dim]
  SegmentLayout layout;
  std::vector<Real> lengths;  // char lengths of the kept rows
};

PackedDocuments pack_documents(std::span<const EncodedDocument* const> docs, int max_sentences);

// -sum cos(prediction, target) over rows (or for a single pair of vectors).
Tensor positive_term(const Tensor& prediction, const Tensor& target);
// sum |cos(prediction, target)|.
Tensor negative_term(const Tensor& prediction, const Tensor& target);
// lambda1 * rest_ext + lambda2 * ext_doc.
Tensor weighted_objective(const Tensor& rest_ext, const Tensor& ext_doc, const ContrastiveConfig& cfg);

enum class SelectionMode { kTopK, kKnapsack };
std::string to_string(SelectionMode mode);
SelectionMode parse_selection_mode(const std::string& name);

struct LossOptions {
  SelectionMode mode = SelectionMode::kTopK;
  Rng* gumbel = nullptr;   // nullptr: no Gumbel noise
  std::uint64_t sample_seed = 0;  // drives k and i' sampling
  double temperature = 1.0;
  const KnapsackNet* knapsack = nullptr;
  std::vector<std::int64_t> capacities;  // one per document (knapsack mode)
  // Negative terms read the predictor through a detached copy of its weights.
  bool gate_predictor = true;
  // Replace the scorer output by uniform noise drawn from `gumbel` (or from
  // `sample_seed` when no generator is given). Used to pretrain the encoder
  // and predictor independently of the scorer.
  bool random_selection = false;
  // Drop the |cos| negative terms.
  bool positives_only = false;
  // When non-empty, used in place of the scorer output (one per packed row).
  std::span<const Real> fixed_scores;
  // Added to the forward value of every mask (finite-difference probing).
  std::span<const Real> mask_offset;
};

struct LossBreakdown {
  Tensor total;
  double rest_ext = 0;  // mean over contributing documents
  double ext_doc = 0;
  int rest_docs = 0;
  int ext_doc_docs = 0;
  SelectionMask mask;
  SegmentLayout layout;
  Tensor scores;
};

class Summarizer {
 public:
  explicit Summarizer(const SummarizerConfig& cfg);
  static Summarizer load(const std::filesystem::path& dir);
  void save(const std::filesystem::path& dir, const nlohmann::json& extra = {}) const;

  // Scores over packed rows [m, input_dim] -> [m].
  Tensor scores(const Tensor& e, const SegmentLayout& layout) const;
  // One score per sentence, no graph. Rows past max_sentences take the
  // lowest kept score.
  std::vector<Real> score(const SentenceEmbeddings& emb) const;

  // Packed second-level encoder and predictor.
  Tensor encode(const Tensor& e, const SegmentLayout& layout) const;
  Tensor predict(const Tensor& h, const SegmentLayout& layout, bool detached_weights = false) const;

  LossBreakdown loss(std::span<const EncodedDocument* const> docs, const LossOptions& opts) const;

  const SummarizerConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  // Copies matching parameters from another checkpoint; returns their names.
  std::vector<std::string> load_pretrained(const std::filesystem::path& dir);

 private:
  void bind();

  SummarizerConfig cfg_;
  ParamStore store_;
  Linear scorer_in_, scorer_out_, encoder_in_, predictor_out_;
  Tensor scorer_positions_, predictor_positions_;
  TransformerEncoder scorer_body_, encoder_body_, predictor_body_;
};

// Keeps the `capacity` lowest validation losses seen.
class CheckpointRegistry {
 public:
  struct Entry {
    long step = 0;
    double val_loss = 0;
    std::filesystem::path dir;
  };
  explicit CheckpointRegistry(std::size_t capacity = 3) : capacity_(capacity) {}
  // Returns the entries evicted by this offer (including the offer itself if
  // it does not make the cut).
  std::vector<Entry> offer(Entry entry);
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::size_t capacity_;
  std::vector<Entry> entries_;  // ascending val_loss, then step
};

struct SumTrainOptions {
  SelectionMode mode = SelectionMode::kTopK;
  long steps = 1000;
  int batch_size = 64;
  double lr = 3e-6;
  double lr_pretrained = 1e-6;
  std::uint64_t seed = 42;
  long val_every = 1000;
  double temperature_start = 1.0;
  double temperature_end = 1.0;
  std::vector<std::int64_t> capacities;  // knapsack mode
  const KnapsackNet* knapsack = nullptr;
  bool random_selection = false;  // see LossOptions
  bool positives_only = false;    // see LossOptions
  // Parameters loaded from a pretrained checkpoint use the second optimizer.
  std::vector<std::string> pretrained;
  std::optional<std::filesystem::path> out_dir;  // checkpoints + learning curve
  nlohmann::json checkpoint_extra = nlohmann::json::object();  // merged into every checkpoint config
  std::size_t keep_top = 3;
  std::function<void(long step, double train_loss)> on_step;
  std::function<void(long step, double val_loss)> on_validate;
};

struct LearningCurvePoint {
  long step = 0;
  double train_loss = 0;  // mean since the previous validation
  double val_loss = 0;
};

struct SumTrainReport {
  double initial_val_loss = 0;
  double final_val_loss = 0;
  std::vector<double> step_losses;
  std::vector<LearningCurvePoint> curve;
  std::vector<CheckpointRegistry::Entry> best;
  std::uint64_t knapsack_checksum_before = 0;
  std::uint64_t knapsack_checksum_after = 0;
};

// Noise-free loss over the validation set with fixed sampling seeds and, in
// knapsack mode, fixed per-document capacities.
double validation_loss(const Summarizer& model, std::span<const EncodedDocument> docs, const SumTrainOptions& opts,
                       int batch_size = 64);

SumTrainReport train_summarizer(Summarizer& model, std::span<const EncodedDocument> train,
                                std::span<const EncodedDocument> valid, const SumTrainOptions& opts);

// Names of every parameter outside the scorer.
std::vector<std::string> critic_parameters(const Summarizer& model);

// Trains the encoder and predictor alone on random selections with positive
// terms only.
SumTrainReport warm_up_critic(Summarizer& model, std::span<const EncodedDocument> train,
                              std::span<const EncodedDocument> valid, long steps, double lr, int batch_size,
                              std::uint64_t seed);

}  // namespace lcsum
