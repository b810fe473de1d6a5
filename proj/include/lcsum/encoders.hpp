#pragma once

// Documents with their corpus I/O, and the frozen first-level sentence encoders.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lcsum/tensor.hpp"

namespace lcsum {

// Number of Unicode code points in UTF-8 text.
int utf8_length(std::string_view text);

// Lowercased alphanumeric runs. Non-ASCII code points count as alphanumeric,
// so scripts without spaces come out as long runs unless `char_unigrams` is
// set, in which case every non-ASCII code point becomes its own token.
std::vector<std::string> tokenize(std::string_view text, bool char_unigrams = false);

struct Document {
  std::string id;
  std::vector<std::string> sentences;
  std::vector<int> char_lengths;
  std::vector<std::string> reference;  // optional
  std::vector<int> planted;            // optional ground-truth key sentences

  static Document from_sentences(std::string id, std::vector<std::string> sentences,
                                 std::vector<std::string> reference = {});
  int size() const { return static_cast<int>(sentences.size()); }
  void validate() const;
};

// Rule-based splitting on terminal punctuation with an abbreviation guard.
Document segment(std::string_view raw_text, std::string id = "");

// JSONL with {"id", "sentences" | "text", "reference"?, "planted"?}. Records
// that already carry sentences are taken as they are.
std::vector<Document> load_corpus(const std::filesystem::path& path);
void save_corpus(const std::filesystem::path& path, const std::vector<Document>& docs);
nlohmann::json document_to_json(const Document& doc);
Document document_from_json(const nlohmann::json& j);

struct SentenceEmbeddings {
  int rows = 0;
  int dim = 0;
  std::vector<Real> values;  // row-major rows x dim
  std::string encoder;
  bool frozen = true;

  Tensor tensor() const { return Tensor::constant({rows, dim}, values); }
  std::span<const Real> row(int i) const {
    return std::span<const Real>(values).subspan(static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim));
  }
};

class SentenceEncoder {
 public:
  virtual ~SentenceEncoder() = default;
  virtual SentenceEmbeddings encode(const Document& doc) const = 0;
  virtual int dim() const = 0;
  virtual nlohmann::json to_json() const = 0;
};

// Signed feature hashing of tokens into `dim` buckets, rows L2-normalised.
class HashedBowEncoder : public SentenceEncoder {
 public:
  HashedBowEncoder(int dim, std::uint64_t seed);
  SentenceEmbeddings encode(const Document& doc) const override;
  int dim() const override { return dim_; }
  nlohmann::json to_json() const override;

 private:
  int dim_;
  std::uint64_t seed_;
};

SentenceEmbeddings encode_hashed_bow(const Document& doc, int dim, std::uint64_t seed);

// tf-idf weights fitted on a corpus, projected to `dim` with a per-token
// seeded Gaussian vector, rows L2-normalised.
class TfidfEncoder : public SentenceEncoder {
 public:
  TfidfEncoder(int dim, std::uint64_t seed) : dim_(dim), seed_(seed) {}
  void fit(const std::vector<Document>& corpus);
  double idf(const std::string& token) const;
  SentenceEmbeddings encode(const Document& doc) const override;
  int dim() const override { return dim_; }
  nlohmann::json to_json() const override;
  static TfidfEncoder from_json(const nlohmann::json& j);

 private:
  int dim_;
  std::uint64_t seed_;
  std::size_t documents_ = 0;
  std::map<std::string, int> df_;
};

// File format: text header line "dim=<d> rows=<n>\n", then n*d little-endian
// f32 values.
SentenceEmbeddings load_external(const Document& doc, const std::filesystem::path& path);
void write_external(const std::filesystem::path& path, const SentenceEmbeddings& emb);

// Reads <dir>/<doc id>.emb for each document.
class ExternalEncoder : public SentenceEncoder {
 public:
  ExternalEncoder(std::filesystem::path dir, int dim) : dir_(std::move(dir)), dim_(dim) {}
  SentenceEmbeddings encode(const Document& doc) const override;
  int dim() const override { return dim_; }
  nlohmann::json to_json() const override;

 private:
  std::filesystem::path dir_;
  int dim_;
};

// Rebuilds an encoder from its to_json() descriptor.
std::unique_ptr<SentenceEncoder> make_encoder(const nlohmann::json& j);

}  // namespace lcsum
