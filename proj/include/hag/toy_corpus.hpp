#pragma once

// Deterministic templated review corpus with hand-built dependency parses,
// small enough for end-to-end tests to run offline in minutes.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hag/corpus.hpp"

namespace hag {

struct ToyCorpus {
  std::string reviews_jsonl;
  std::string conllu;
};

// Every review has a distinct (user, item) pair and two or three sentences,
// each naming exactly one aspect.
ToyCorpus make_toy_corpus(std::size_t n_reviews = 60, std::uint64_t seed = 7);

std::vector<ParsedReview> parse_toy_corpus(const ToyCorpus& corpus);

// Writes reviews.jsonl and parses.conllu into `dir`.
void write_toy_corpus(const ToyCorpus& corpus, const std::filesystem::path& dir);

}  // namespace hag
