#pragma once

// Review ingestion, aspect extraction, target explanations, vocabularies and
// train/valid/test splitting.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hag/syngraph.hpp"

namespace hag {

struct ReviewRecord {
  std::string user_id;
  std::string item_id;
  double rating = 0.0;
  std::string text;
  std::vector<std::vector<std::string>> sentences;  // tokenized, lowercase
  std::string parse_ref;
};

// One JSON object per line with keys user, item, rating, text, parse_ref.
// Throws DataError naming the line on malformed JSON or a rating outside [1, 5].
std::vector<ReviewRecord> load_reviews(const std::filesystem::path& path);
ReviewRecord parse_review_line(std::string_view line, std::size_t line_no);

struct ParsedReview {
  ReviewRecord record;
  std::vector<DependencyTree> trees;  // one per sentence, unpruned
};

inline constexpr std::string_view kNoAspect = "<no_aspect>";

struct AspectVocabulary {
  std::vector<std::string> aspects;              // count desc, then lexicographic
  std::map<std::string, std::size_t> counts;

  bool contains(const std::string& a) const { return counts.count(a) != 0; }
  std::size_t size() const { return aspects.size(); }
};

// Orders by descending count with lexicographic tie-break and keeps `limit`.
AspectVocabulary rank_aspects(const std::map<std::string, std::size_t>& counts, std::size_t limit);

// Aspect mentions in one sentence, in token order: lowercase lemmas of NOUN
// tokens that head an amod edge or are the dependent of an nsubj edge. With
// `compounds`, a noun with a NOUN compound dependent yields "dependent head".
std::vector<std::string> aspect_mentions(const DependencyTree& tree, bool compounds = false);

// Corpus-wide aspect vocabulary from all mentions, top `limit` kept.
AspectVocabulary build_aspect_vocab(const std::vector<ParsedReview>& reviews, std::size_t limit = 2000,
                                    bool compounds = false);

enum class Side { kUser, kItem };

// Top-n aspects of one user or item, counted over that side's reviews and
// restricted to the corpus vocabulary; padded with kNoAspect up to n.
// Throws DataError if the id has no reviews.
std::vector<std::string> extract_aspects(const std::vector<ParsedReview>& reviews, Side side, const std::string& id,
                                         std::size_t n, const AspectVocabulary& corpus, bool compounds = false);

struct TrainingExample {
  std::string user_id;
  std::string item_id;
  double rating = 0.0;
  std::vector<std::string> gold_aspects;
  std::vector<std::vector<std::string>> gold_explanations;  // words only; EOS is added at encoding
};

// Pairs each sentence that mentions exactly one known aspect with that
// aspect, keeping the first sentence per aspect. Explanations are cut to
// `max_len - 1` words (room for EOS); a sentence whose aspect falls past the
// cut is dropped. Returns nullopt if fewer than two aspects remain.
std::optional<TrainingExample> extract_targets(const ReviewRecord& record, const AspectVocabulary& aspects,
                                               std::size_t max_len = 0);

// True if `aspect` (possibly multi-word) occurs as a contiguous token span.
bool contains_span(const std::vector<std::string>& tokens, const std::string& aspect);

class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::size_t kBos = 2;
  static constexpr std::size_t kEos = 3;
  static constexpr std::size_t kReserved = 4;

  Vocabulary();
  // Reserved tokens are prepended; duplicates are rejected.
  static Vocabulary from_words(const std::vector<std::string>& words);

  std::size_t id(const std::string& word) const;  // kUnk when absent
  bool contains(const std::string& word) const { return index_.count(word) != 0; }
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }
  std::vector<std::size_t> encode(const std::vector<std::string>& words) const;

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, std::size_t> index_;
};

// The (d_v - 4) most frequent words (count desc, lexicographic ties) plus the
// four reserved tokens. Throws DataError on an empty corpus.
Vocabulary build_vocab(const std::vector<ReviewRecord>& records, std::size_t d_v);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
  std::vector<std::size_t> test;
};

// Seeded shuffle, then floor(0.8 N) / floor(0.1 N) / remainder.
SplitIndices split(std::size_t n_records, std::uint64_t seed);

std::string format_split_manifest(const SplitIndices& s);
SplitIndices parse_split_manifest(std::string_view text);
std::string format_aspect_vocab(const AspectVocabulary& v);
AspectVocabulary parse_aspect_vocab(std::string_view text);

}  // namespace hag
