#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "lcsum/encoders.hpp"
#include "lcsum/errors.hpp"

using namespace lcsum;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("lcsum_enc_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

double dot(std::span<const Real> a, std::span<const Real> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

}  // namespace

TEST_CASE("utf8 length counts code points") {
  CHECK(utf8_length("") == 0);
  CHECK(utf8_length("abc") == 3);
  CHECK(utf8_length("\xE4\xBD\xA0\xE5\xA5\xBD") == 2);  // two CJK characters
  CHECK(utf8_length("caf\xC3\xA9") == 4);
}

TEST_CASE("tokenize lowercases alphanumeric runs") {
  CHECK(tokenize("The cat, the HAT!") == std::vector<std::string>{"the", "cat", "the", "hat"});
  CHECK(tokenize("x2 y-3") == std::vector<std::string>{"x2", "y", "3"});
  CHECK(tokenize("\xE4\xBD\xA0\xE5\xA5\xBD", true).size() == 2);
  CHECK(tokenize("\xE4\xBD\xA0\xE5\xA5\xBD").size() == 1);
}

TEST_CASE("segment splits on terminal punctuation") {
  auto d = segment("A. B? C!", "d");
  CHECK(d.sentences == std::vector<std::string>{"A.", "B?", "C!"});
  CHECK(d.char_lengths == std::vector<int>{2, 2, 2});
  CHECK(d.id == "d");
}

TEST_CASE("segment keeps abbreviations and decimals inside sentences") {
  auto d = segment("Dr. Smith paid 3.5 dollars. He left e.g. early. Done");
  REQUIRE(d.size() == 3);
  CHECK(d.sentences[0] == "Dr. Smith paid 3.5 dollars.");
  CHECK(d.sentences[1] == "He left e.g. early.");
  CHECK(d.sentences[2] == "Done");
}

TEST_CASE("segment handles closing quotes and full-width terminators") {
  auto d = segment("He said \"stop.\" Then went. \xE4\xBD\xA0\xE5\xA5\xBD\xE3\x80\x82\xE5\x86\x8D\xE8\xA7\x81\xEF\xBC\x81");
  REQUIRE(d.size() == 4);
  CHECK(d.sentences[0] == "He said \"stop.\"");
  CHECK(d.char_lengths[2] == 3);
}

TEST_CASE("segment of blank text is a contract error") {
  CHECK_THROWS_AS(segment("   "), ContractError);
}

TEST_CASE("corpus round trip, pass-through and raw text records") {
  auto dir = temp_dir("corpus");
  {
    std::ofstream out(dir / "in.jsonl");
    out << R"({"id":"a","sentences":["One. Two.","Three"],"reference":"x y","planted":[1]})" << "\n\n";
    out << R"({"id":"b","text":"First one. Second one."})" << "\n";
  }
  auto docs = load_corpus(dir / "in.jsonl");
  REQUIRE(docs.size() == 2);
  CHECK(docs[0].size() == 2);  // pre-split sentences are not re-segmented
  CHECK(docs[0].reference == std::vector<std::string>{"x y"});
  CHECK(docs[0].planted == std::vector<int>{1});
  CHECK(docs[1].sentences == std::vector<std::string>{"First one.", "Second one."});

  save_corpus(dir / "out.jsonl", docs);
  auto again = load_corpus(dir / "out.jsonl");
  REQUIRE(again.size() == 2);
  CHECK(again[0].sentences == docs[0].sentences);
  CHECK(again[0].planted == docs[0].planted);
  CHECK(again[1].char_lengths == docs[1].char_lengths);
}

TEST_CASE("malformed corpus lines name the line") {
  auto dir = temp_dir("bad");
  {
    std::ofstream out(dir / "c.jsonl");
    out << R"({"id":"a","sentences":["x"]})" << "\n" << R"({"id":"b"})" << "\n";
  }
  try {
    load_corpus(dir / "c.jsonl");
    FAIL("expected ContractError");
  } catch (const ContractError& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
  CHECK_THROWS_AS(load_corpus(dir / "missing.jsonl"), IoError);
}

TEST_CASE("hashed encoder rows are unit norm and deterministic") {
  auto d = Document::from_sentences("h", {"the cat sat", "a dog ran far", "the cat sat"});
  auto e = encode_hashed_bow(d, 64, 7);
  CHECK(e.rows == 3);
  CHECK(e.dim == 64);
  for (int r = 0; r < 3; ++r) CHECK(dot(e.row(r), e.row(r)) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(dot(e.row(0), e.row(2)) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(encode_hashed_bow(d, 64, 7).values == e.values);
  CHECK(encode_hashed_bow(d, 64, 8).values != e.values);
  CHECK_THROWS_AS(HashedBowEncoder(8, 1), ContractError);
}

TEST_CASE("sentences without tokens map to zero rows") {
  auto d = Document::from_sentences("z", {"hello world", "?!"});
  auto e = encode_hashed_bow(d, 32, 1);
  CHECK(dot(e.row(1), e.row(1)) == 0.0);
}

TEST_CASE("tf-idf encoder separates topics and serialises") {
  std::vector<Document> corpus{
      Document::from_sentences("a", {"rain storm flood warning", "the market rose today", "the storm hit the coast"}),
      Document::from_sentences("b", {"the market fell sharply", "stocks and the market"})};
  TfidfEncoder enc(128, 3);
  enc.fit(corpus);
  CHECK(enc.idf("the") < enc.idf("flood"));
  CHECK(enc.idf("unseen") > enc.idf("flood"));
  auto e = enc.encode(corpus[0]);
  for (int r = 0; r < e.rows; ++r) CHECK(dot(e.row(r), e.row(r)) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(dot(e.row(0), e.row(2)) > dot(e.row(0), e.row(1)));

  auto restored = make_encoder(enc.to_json());
  CHECK(restored->encode(corpus[0]).values == e.values);
  TfidfEncoder unfitted(64, 1);
  CHECK_THROWS_AS(unfitted.encode(corpus[0]), ContractError);
}

TEST_CASE("external embeddings round trip and mismatch errors") {
  auto dir = temp_dir("ext");
  auto d = Document::from_sentences("doc7", {"one", "two"});
  SentenceEmbeddings emb{2, 3, {1, 2, 3, 4, 5, -6.5}, "external", true};
  write_external(dir / "doc7.emb", emb);
  auto back = load_external(d, dir / "doc7.emb");
  CHECK(back.values == emb.values);
  CHECK(ExternalEncoder(dir, 3).encode(d).values == emb.values);
  CHECK_THROWS_AS(ExternalEncoder(dir, 4).encode(d), ContractError);

  auto three = Document::from_sentences("doc7", {"a", "b", "c"});
  try {
    load_external(three, dir / "doc7.emb");
    FAIL("expected ContractError");
  } catch (const ContractError& e) {
    CHECK(std::string(e.what()).find("doc7") != std::string::npos);
  }
  {
    std::ofstream out(dir / "bad.emb", std::ios::binary);
    out << "dim=3 rows=2\n" << "abc";
  }
  CHECK_THROWS_AS(load_external(d, dir / "bad.emb"), IoError);
}
