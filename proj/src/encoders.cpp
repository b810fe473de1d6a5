#include "lcsum/encoders.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "lcsum/checkpoint.hpp"
#include "lcsum/errors.hpp"
#include "lcsum/rng.hpp"

namespace lcsum {
namespace fs = std::filesystem;

namespace {

// Byte length of the UTF-8 sequence starting with `lead` (1 for stray bytes).
std::size_t utf8_width(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

void normalise_rows(std::vector<Real>& values, int rows, int dim, const std::string& doc_id) {
  for (int r = 0; r < rows; ++r) {
    Real* row = values.data() + static_cast<std::size_t>(r) * dim;
    double norm = 0;
    for (int c = 0; c < dim; ++c) norm += static_cast<double>(row[c]) * row[c];
    if (norm == 0) {
      spdlog::warn("document '{}': sentence {} has no tokens; using a zero vector", doc_id, r);
      continue;
    }
    const double inv = 1.0 / std::sqrt(norm);
    for (int c = 0; c < dim; ++c) row[c] = static_cast<Real>(row[c] * inv);
  }
}

const std::set<std::string, std::less<>>& abbreviations() {
  static const std::set<std::string, std::less<>> list{
      "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc", "e.g", "i.e", "inc", "ltd",
      "co", "corp", "no", "fig", "gen", "gov", "sen", "rep", "u.s", "u.k", "jan", "feb", "mar",
      "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec", "mt", "ave", "approx"};
  return list;
}

bool is_terminal(std::string_view text, std::size_t pos, std::size_t& width) {
  const unsigned char c = static_cast<unsigned char>(text[pos]);
  width = 1;
  if (c == '.' || c == '!' || c == '?') return true;
  // Full-width terminators: U+3002, U+FF01, U+FF1F.
  static const std::array<std::string_view, 3> wide{"\xE3\x80\x82", "\xEF\xBC\x81", "\xEF\xBC\x9F"};
  for (auto w : wide) {
    if (text.substr(pos, w.size()) == w) {
      width = w.size();
      return true;
    }
  }
  return false;
}

// Word immediately before `pos` (letters and inner dots), lowercased.
std::string word_before(std::string_view text, std::size_t pos) {
  std::size_t b = pos;
  while (b > 0 && (std::isalpha(static_cast<unsigned char>(text[b - 1])) || text[b - 1] == '.')) --b;
  std::string w(text.substr(b, pos - b));
  for (auto& ch : w) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return w;
}

}  // namespace

int utf8_length(std::string_view text) {
  int n = 0;
  for (std::size_t i = 0; i < text.size(); i += utf8_width(static_cast<unsigned char>(text[i]))) ++n;
  return n;
}

std::vector<std::string> tokenize(std::string_view text, bool char_unigrams) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (std::size_t i = 0; i < text.size();) {
    const auto c = static_cast<unsigned char>(text[i]);
    const std::size_t w = utf8_width(c);
    if (c >= 0x80) {
      if (char_unigrams) {
        flush();
        out.emplace_back(text.substr(i, w));
      } else {
        cur.append(text.substr(i, w));
      }
    } else if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
    i += w;
  }
  flush();
  return out;
}

Document Document::from_sentences(std::string id, std::vector<std::string> sentences,
                                  std::vector<std::string> reference) {
  Document d;
  d.id = std::move(id);
  d.sentences = std::move(sentences);
  d.reference = std::move(reference);
  for (const auto& s : d.sentences) d.char_lengths.push_back(utf8_length(s));
  d.validate();
  return d;
}

void Document::validate() const {
  LCSUM_REQUIRE(!sentences.empty(), "document '" + id + "' has no sentences");
  LCSUM_REQUIRE(char_lengths.size() == sentences.size(), "document '" + id + "': length count mismatch");
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    LCSUM_REQUIRE(char_lengths[i] == utf8_length(sentences[i]),
                  "document '" + id + "': char length of sentence " + std::to_string(i) + " is wrong");
    LCSUM_REQUIRE(char_lengths[i] >= 1, "document '" + id + "': empty sentence " + std::to_string(i));
  }
  for (int p : planted) {
    LCSUM_REQUIRE(p >= 0 && p < size(), "document '" + id + "': planted index out of range");
  }
}

Document segment(std::string_view raw_text, std::string id) {
  std::vector<std::string> sentences;
  std::size_t start = 0;
  for (std::size_t i = 0; i < raw_text.size();) {
    std::size_t w = 1;
    if (!is_terminal(raw_text, i, w)) {
      i += utf8_width(static_cast<unsigned char>(raw_text[i]));
      continue;
    }
    std::size_t end = i + w;
    while (end < raw_text.size() && (raw_text[end] == '.' || raw_text[end] == '!' || raw_text[end] == '?' ||
                                     raw_text[end] == '"' || raw_text[end] == '\'' || raw_text[end] == ')')) {
      ++end;
    }
    const bool ascii = w == 1;
    const bool boundary = !ascii || end == raw_text.size() || std::isspace(static_cast<unsigned char>(raw_text[end]));
    const bool abbreviation = ascii && raw_text[i] == '.' && abbreviations().count(word_before(raw_text, i)) != 0;
    if (boundary && !abbreviation) {
      auto s = trim(raw_text.substr(start, end - start));
      if (!s.empty()) sentences.emplace_back(s);
      start = end;
    }
    i = end;
  }
  auto tail = trim(raw_text.substr(std::min(start, raw_text.size())));
  if (!tail.empty()) sentences.emplace_back(tail);
  if (sentences.empty()) throw ContractError("segment: no sentences found in document '" + id + "'");
  return Document::from_sentences(std::move(id), std::move(sentences));
}

nlohmann::json document_to_json(const Document& doc) {
  nlohmann::ordered_json j;
  j["id"] = doc.id;
  j["sentences"] = doc.sentences;
  if (!doc.reference.empty()) j["reference"] = doc.reference;
  if (!doc.planted.empty()) j["planted"] = doc.planted;
  return nlohmann::json::parse(j.dump());
}

Document document_from_json(const nlohmann::json& j) {
  try {
    Document d;
    const std::string id = j.value("id", std::string());
    if (j.contains("sentences")) {
      d = Document::from_sentences(id, j.at("sentences").get<std::vector<std::string>>());
    } else if (j.contains("text")) {
      d = segment(j.at("text").get<std::string>(), id);
    } else {
      throw ContractError("document '" + id + "' has neither sentences nor text");
    }
    if (j.contains("reference")) {
      const auto& r = j.at("reference");
      d.reference = r.is_string() ? std::vector<std::string>{r.get<std::string>()} : r.get<std::vector<std::string>>();
    }
    if (j.contains("planted")) d.planted = j.at("planted").get<std::vector<int>>();
    d.validate();
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(std::string("malformed document record: ") + e.what());
  }
}

std::vector<Document> load_corpus(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus " + path.string());
  std::vector<Document> docs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      docs.push_back(document_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const ContractError& e) {
      throw ContractError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (docs.empty()) throw ContractError("corpus " + path.string() + " is empty");
  return docs;
}

void save_corpus(const fs::path& path, const std::vector<Document>& docs) {
  std::string out;
  for (const auto& d : docs) {
    nlohmann::ordered_json j;
    j["id"] = d.id;
    j["sentences"] = d.sentences;
    if (!d.reference.empty()) j["reference"] = d.reference;
    if (!d.planted.empty()) j["planted"] = d.planted;
    out += j.dump();
    out += '\n';
  }
  write_text_atomic(path, out);
}

// ---- hashed bag of words ----

HashedBowEncoder::HashedBowEncoder(int dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  LCSUM_REQUIRE(dim >= 16, "hashed encoder dimension must be at least 16");
}

SentenceEmbeddings HashedBowEncoder::encode(const Document& doc) const {
  SentenceEmbeddings e;
  e.rows = doc.size();
  e.dim = dim_;
  e.encoder = "hashed";
  e.values.assign(static_cast<std::size_t>(e.rows) * dim_, 0);
  for (int r = 0; r < e.rows; ++r) {
    for (const auto& tok : tokenize(doc.sentences[static_cast<std::size_t>(r)])) {
      const std::uint64_t h = hash64(seed_, hash_string(tok));
      const auto bucket = static_cast<std::size_t>(h % static_cast<std::uint64_t>(dim_));
      e.values[static_cast<std::size_t>(r) * dim_ + bucket] += (h >> 63) ? Real(-1) : Real(1);
    }
  }
  normalise_rows(e.values, e.rows, dim_, doc.id);
  return e;
}

nlohmann::json HashedBowEncoder::to_json() const { return {{"type", "hashed"}, {"dim", dim_}, {"seed", seed_}}; }

SentenceEmbeddings encode_hashed_bow(const Document& doc, int dim, std::uint64_t seed) {
  return HashedBowEncoder(dim, seed).encode(doc);
}

// ---- tf-idf projection ----

void TfidfEncoder::fit(const std::vector<Document>& corpus) {
  LCSUM_REQUIRE(dim_ >= 16, "tf-idf encoder dimension must be at least 16");
  df_.clear();
  documents_ = 0;
  // Each sentence counts as a document for idf purposes.
  for (const auto& d : corpus) {
    for (const auto& s : d.sentences) {
      ++documents_;
      auto toks = tokenize(s);
      std::sort(toks.begin(), toks.end());
      toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
      for (auto& t : toks) ++df_[t];
    }
  }
}

double TfidfEncoder::idf(const std::string& token) const {
  auto it = df_.find(token);
  const double df = it == df_.end() ? 0.0 : it->second;
  return std::log((1.0 + static_cast<double>(documents_)) / (1.0 + df)) + 1.0;
}

SentenceEmbeddings TfidfEncoder::encode(const Document& doc) const {
  LCSUM_REQUIRE(documents_ > 0, "tf-idf encoder used before fit");
  SentenceEmbeddings e;
  e.rows = doc.size();
  e.dim = dim_;
  e.encoder = "tfidf";
  e.values.assign(static_cast<std::size_t>(e.rows) * dim_, 0);
  const Real scale = static_cast<Real>(1.0 / std::sqrt(static_cast<double>(dim_)));
  for (int r = 0; r < e.rows; ++r) {
    std::map<std::string, int> tf;
    for (auto& t : tokenize(doc.sentences[static_cast<std::size_t>(r)])) ++tf[t];
    Real* row = e.values.data() + static_cast<std::size_t>(r) * dim_;
    for (const auto& [tok, count] : tf) {
      const auto w = static_cast<Real>(count * idf(tok));
      Rng proj(hash64(seed_, hash_string(tok)));
      for (int c = 0; c < dim_; ++c) row[c] += w * scale * static_cast<Real>(proj.normal());
    }
  }
  normalise_rows(e.values, e.rows, dim_, doc.id);
  return e;
}

nlohmann::json TfidfEncoder::to_json() const {
  return {{"type", "tfidf"}, {"dim", dim_}, {"seed", seed_}, {"documents", documents_}, {"df", df_}};
}

TfidfEncoder TfidfEncoder::from_json(const nlohmann::json& j) {
  TfidfEncoder enc(j.at("dim").get<int>(), j.at("seed").get<std::uint64_t>());
  enc.documents_ = j.at("documents").get<std::size_t>();
  enc.df_ = j.at("df").get<std::map<std::string, int>>();
  return enc;
}

// ---- external vectors ----

SentenceEmbeddings load_external(const Document& doc, const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embeddings " + path.string());
  std::string header;
  std::getline(in, header);
  int dim = 0, rows = 0;
  if (std::sscanf(header.c_str(), "dim=%d rows=%d", &dim, &rows) != 2 || dim < 1 || rows < 0) {
    throw IoError("bad embeddings header in " + path.string() + ": '" + header + "'");
  }
  if (rows != doc.size()) {
    throw ContractError("embeddings " + path.string() + " hold " + std::to_string(rows) + " rows but document '" +
                        doc.id + "' has " + std::to_string(doc.size()) + " sentences");
  }
  SentenceEmbeddings e;
  e.rows = rows;
  e.dim = dim;
  e.encoder = "external";
  e.values.resize(static_cast<std::size_t>(rows) * dim);
  for (auto& v : e.values) {
    std::array<unsigned char, 4> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw IoError("truncated embeddings file " + path.string());
    const std::uint32_t bits = b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    v = static_cast<Real>(std::bit_cast<float>(bits));
  }
  return e;
}

void write_external(const fs::path& path, const SentenceEmbeddings& emb) {
  std::string out = "dim=" + std::to_string(emb.dim) + " rows=" + std::to_string(emb.rows) + "\n";
  for (Real v : emb.values) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
  }
  write_text_atomic(path, out);
}

SentenceEmbeddings ExternalEncoder::encode(const Document& doc) const {
  auto e = load_external(doc, dir_ / (doc.id + ".emb"));
  if (e.dim != dim_) {
    throw ContractError("embeddings for '" + doc.id + "' have dim " + std::to_string(e.dim) + ", expected " +
                        std::to_string(dim_));
  }
  return e;
}

nlohmann::json ExternalEncoder::to_json() const {
  return {{"type", "external"}, {"dir", dir_.string()}, {"dim", dim_}};
}

std::unique_ptr<SentenceEncoder> make_encoder(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "hashed") return std::make_unique<HashedBowEncoder>(j.at("dim").get<int>(), j.at("seed").get<std::uint64_t>());
  if (type == "tfidf") return std::make_unique<TfidfEncoder>(TfidfEncoder::from_json(j));
  if (type == "external") return std::make_unique<ExternalEncoder>(j.at("dir").get<std::string>(), j.at("dim").get<int>());
  throw ContractError("unknown encoder type: " + type);
}

}  // namespace lcsum
