#pragma once

// Synthetic corpus with planted key sentences. Each document draws a small
// topic vocabulary; planted sentences are written mostly in it, distractors
// mostly in words that occur nowhere else, so the planted sentences are the
// ones best predicted by (and most predictive of) the rest of the document.

#include <cstdint>
#include <vector>

#include "lcsum/encoders.hpp"

namespace lcsum {

struct SynthCorpusOptions {
  int docs = 500;
  int planted = 3;
  int min_sentences = 8;
  int max_sentences = 16;
  int topic_words = 12;      // per document
  int topic_pool = 200;      // corpus-wide vocabulary the topics draw from
  double topic_share = 0.7;  // fraction of planted-sentence tokens from the topic
  double distractor_topic_rate = 0.08;
  std::uint64_t seed = 42;

  void validate() const;
};

// Documents carry `planted` (ascending) and a single reference made of the
// planted sentences in document order.
std::vector<Document> synth_corpus(const SynthCorpusOptions& opts);

}  // namespace lcsum
