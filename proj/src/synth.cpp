#include "lcsum/synth.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <string>

#include "lcsum/errors.hpp"
#include "lcsum/rng.hpp"

namespace lcsum {
namespace {

constexpr std::array<const char*, 10> kFunctionWords{"the", "of", "and", "to", "in", "a", "is", "was", "for", "on"};
constexpr std::uint64_t kNoisePool = 200000;

// Pronounceable pseudo-word; `tail` keeps the topic and noise pools disjoint.
std::string pseudo_word(std::uint64_t h, const char* tail) {
  static constexpr std::string_view consonants = "bcdfghklmnprstvz";
  static constexpr std::string_view vowels = "aeiou";
  std::string w;
  const int syllables = 2 + static_cast<int>(h % 2);
  for (int i = 0; i < syllables; ++i) {
    h = hash64(h, static_cast<std::uint64_t>(i));
    w.push_back(consonants[h % consonants.size()]);
    w.push_back(vowels[(h >> 8) % vowels.size()]);
  }
  return w + tail;
}

std::string topic_word(std::uint64_t seed, std::uint64_t index) { return pseudo_word(hash64(seed ^ 0x70c1c, index), "n"); }
std::string noise_word(std::uint64_t seed, std::uint64_t index) { return pseudo_word(hash64(seed ^ 0x9015e, index), "k"); }

std::string sentence_of(std::vector<std::string> words) {
  std::string s;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) s += ' ';
    s += words[i];
  }
  s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s + ".";
}

}  // namespace

void SynthCorpusOptions::validate() const {
  LCSUM_REQUIRE(docs >= 10, "synthetic corpus needs at least 10 documents");
  LCSUM_REQUIRE(planted >= 1, "at least one planted sentence is required");
  LCSUM_REQUIRE(topic_pool >= topic_words, "topic pool must hold at least topic_words words");
  LCSUM_REQUIRE(min_sentences > planted && max_sentences >= min_sentences,
                "sentence counts must exceed the planted count");
  LCSUM_REQUIRE(topic_words >= 2, "topic vocabulary too small");
  LCSUM_REQUIRE(topic_share > 0 && topic_share <= 1, "topic share must be in (0, 1]");
  LCSUM_REQUIRE(distractor_topic_rate >= 0 && distractor_topic_rate < topic_share,
                "distractor topic rate must be below the planted topic share");
}

std::vector<Document> synth_corpus(const SynthCorpusOptions& opts) {
  opts.validate();
  std::vector<Document> out;
  out.reserve(static_cast<std::size_t>(opts.docs));
  for (int d = 0; d < opts.docs; ++d) {
    Rng rng(hash64(opts.seed, static_cast<std::uint64_t>(d)));
    const int n = static_cast<int>(rng.uniform_int(opts.min_sentences, opts.max_sentences));

    std::vector<std::string> topic;
    for (int t = 0; t < opts.topic_words; ++t) {
      topic.push_back(topic_word(opts.seed, static_cast<std::uint64_t>(rng.uniform_int(0, opts.topic_pool - 1))));
    }

    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    for (int i = n; i > 1; --i) std::swap(order[static_cast<std::size_t>(i - 1)], order[static_cast<std::size_t>(rng.uniform_int(0, i - 1))]);
    std::vector<int> planted(order.begin(), order.begin() + opts.planted);
    std::sort(planted.begin(), planted.end());

    std::vector<std::string> sentences;
    for (int i = 0; i < n; ++i) {
      const bool key = std::binary_search(planted.begin(), planted.end(), i);
      const int tokens = key ? static_cast<int>(rng.uniform_int(8, 14)) : static_cast<int>(rng.uniform_int(4, 18));
      const double topic_rate = key ? opts.topic_share : opts.distractor_topic_rate;
      std::vector<std::string> words;
      for (int t = 0; t < tokens; ++t) {
        const double u = rng.uniform();
        if (u < topic_rate) {
          words.push_back(topic[static_cast<std::size_t>(rng.uniform_int(0, opts.topic_words - 1))]);
        } else if (u < topic_rate + 0.2) {
          words.emplace_back(kFunctionWords[static_cast<std::size_t>(rng.uniform_int(0, kFunctionWords.size() - 1))]);
        } else {
          words.push_back(noise_word(opts.seed, static_cast<std::uint64_t>(rng.uniform_int(0, kNoisePool - 1))));
        }
      }
      sentences.push_back(sentence_of(std::move(words)));
    }

    std::string reference;
    for (int p : planted) {
      if (!reference.empty()) reference += ' ';
      reference += sentences[static_cast<std::size_t>(p)];
    }
    Document doc = Document::from_sentences("synth-" + std::to_string(d), std::move(sentences), {reference});
    doc.planted = std::move(planted);
    out.push_back(std::move(doc));
  }
  return out;
}

}  // namespace lcsum
