#pragma once

// Text-generation and rating metrics. Text scores are fractions in [0, 1];
// the report scales them to percentages.

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"

namespace hag {

using Tokens = std::vector<std::string>;

struct EvalPair {
  Tokens candidate;
  std::vector<Tokens> references;
};

// Corpus BLEU-1 .. BLEU-max_n (cumulative, uniform weights) with clipped
// counts and the closest-reference brevity penalty. If an order n >= 2 has no
// match, every order n >= 2 gets add-one smoothing. Throws std::invalid_argument
// on an empty pair list or max_n outside 1..4.
std::vector<double> bleu(const std::vector<EvalPair>& pairs, std::size_t max_n = 4);

struct RougeScores {
  double rouge1 = 0.0;
  double rougeL = 0.0;
};
// F1, best reference per pair, mean over pairs.
RougeScores rouge(const std::vector<EvalPair>& pairs);

std::size_t lcs_length(const Tokens& a, const Tokens& b);

struct MeteorAlignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
};
// Exact-match alignment with the most matches and, among those, the fewest chunks.
MeteorAlignment meteor_align(const Tokens& candidate, const Tokens& reference);
double meteor_sentence(const Tokens& candidate, const Tokens& reference);
// Best reference per pair, mean over pairs.
double meteor(const std::vector<EvalPair>& pairs);

// Fraction of (generated explanation j, gold aspect j) pairs where the aspect
// occurs as a contiguous span of the explanation. A missing explanation counts
// as a miss. Throws std::invalid_argument when there are no gold aspects.
double fmr(const std::vector<std::vector<Tokens>>& generated, const std::vector<std::vector<std::string>>& gold_aspects);

// Throws std::invalid_argument on a length mismatch or empty input.
double mae(const std::vector<double>& preds, const std::vector<double>& golds);

struct MetricReport {
  double bleu1 = 0.0;
  double bleu4 = 0.0;
  double rouge1 = 0.0;
  double rougeL = 0.0;
  double meteor = 0.0;
  double fmr = 0.0;
  double mae = 0.0;
  std::size_t n_examples = 0;

  nlohmann::json to_json() const;
};

struct EvalExample {
  std::vector<Tokens> generated;           // one per generated aspect
  std::vector<std::string> gold_aspects;
  std::vector<Tokens> gold_explanations;
  double predicted_rating = 0.0;           // already clamped
  double gold_rating = 0.0;
};

// Text metrics compare the concatenated generated explanations with the
// concatenated gold explanations.
MetricReport evaluate_examples(const std::vector<EvalExample>& examples);

}  // namespace hag
