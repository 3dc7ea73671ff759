#include "hag/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

#include "hag/errors.hpp"
#include "hag/rng.hpp"
#include "hag/text.hpp"

namespace hag {

ReviewRecord parse_review_line(std::string_view line, std::size_t line_no) {
  const std::string where = "reviews line " + std::to_string(line_no);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(where + ": malformed JSON (" + e.what() + ")");
  }
  if (!j.is_object()) throw DataError(where + ": expected a JSON object");
  ReviewRecord r;
  try {
    r.user_id = j.at("user").get<std::string>();
    r.item_id = j.at("item").get<std::string>();
    r.rating = j.at("rating").get<double>();
    r.text = j.at("text").get<std::string>();
    r.parse_ref = j.at("parse_ref").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(where + ": " + e.what());
  }
  if (!(r.rating >= 1.0 && r.rating <= 5.0)) {
    throw DataError(where + ": rating " + std::to_string(r.rating) + " outside [1, 5]");
  }
  r.sentences = split_sentences(r.text);
  if (r.sentences.empty()) throw DataError(where + ": review text has no sentences");
  return r;
}

std::vector<ReviewRecord> load_reviews(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open reviews file " + path.string());
  std::vector<ReviewRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_review_line(line, line_no));
  }
  return out;
}

// ---- aspects -----------------------------------------------------------------

AspectVocabulary rank_aspects(const std::map<std::string, std::size_t>& counts, std::size_t limit) {
  std::vector<std::pair<std::string, std::size_t>> items(counts.begin(), counts.end());
  // counts is already lexicographic, so a stable sort by count gives the tie-break.
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  AspectVocabulary v;
  for (const auto& [a, c] : items) {
    if (v.aspects.size() == limit) break;
    if (c == 0) continue;
    v.aspects.push_back(a);
    v.counts[a] = c;
  }
  return v;
}

std::vector<std::string> aspect_mentions(const DependencyTree& tree, bool compounds) {
  std::vector<bool> hit(tree.tokens.size(), false);
  for (const auto& e : tree.edges) {
    if (e.relation == "amod" && tree.tokens[e.head].upos == "NOUN") hit[e.head] = true;
    if (e.relation == "nsubj" && tree.tokens[e.dependent].upos == "NOUN") hit[e.dependent] = true;
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < tree.tokens.size(); ++i) {
    if (!hit[i]) continue;
    std::string aspect = to_lower(tree.tokens[i].lemma);
    if (compounds) {
      for (const auto& e : tree.edges) {
        if (e.head == i && e.relation == "compound" && tree.tokens[e.dependent].upos == "NOUN") {
          aspect = to_lower(tree.tokens[e.dependent].lemma) + " " + aspect;
          break;
        }
      }
    }
    out.push_back(std::move(aspect));
  }
  return out;
}

AspectVocabulary build_aspect_vocab(const std::vector<ParsedReview>& reviews, std::size_t limit, bool compounds) {
  std::map<std::string, std::size_t> counts;
  for (const auto& r : reviews)
    for (const auto& t : r.trees)
      for (auto& a : aspect_mentions(t, compounds)) ++counts[a];
  return rank_aspects(counts, limit);
}

std::vector<std::string> extract_aspects(const std::vector<ParsedReview>& reviews, Side side, const std::string& id,
                                         std::size_t n, const AspectVocabulary& corpus, bool compounds) {
  if (n == 0) throw ConfigError("extract_aspects: n must be >= 1");
  std::map<std::string, std::size_t> counts;
  bool found = false;
  for (const auto& r : reviews) {
    const std::string& key = side == Side::kUser ? r.record.user_id : r.record.item_id;
    if (key != id) continue;
    found = true;
    for (const auto& t : r.trees)
      for (auto& a : aspect_mentions(t, compounds))
        if (corpus.contains(a)) ++counts[a];
  }
  if (!found) {
    throw DataError(std::string("extract_aspects: no reviews for ") + (side == Side::kUser ? "user '" : "item '") + id +
                    "'");
  }
  std::vector<std::string> top = rank_aspects(counts, n).aspects;
  while (top.size() < n) top.emplace_back(kNoAspect);
  return top;
}

bool contains_span(const std::vector<std::string>& tokens, const std::string& aspect) {
  const auto parts = split_ws(aspect);
  if (parts.empty() || parts.size() > tokens.size()) return false;
  for (std::size_t i = 0; i + parts.size() <= tokens.size(); ++i) {
    if (std::equal(parts.begin(), parts.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) return true;
  }
  return false;
}

std::optional<TrainingExample> extract_targets(const ReviewRecord& record, const AspectVocabulary& aspects,
                                               std::size_t max_len) {
  TrainingExample ex;
  ex.user_id = record.user_id;
  ex.item_id = record.item_id;
  ex.rating = record.rating;
  std::set<std::string> used;
  for (const auto& sentence : record.sentences) {
    std::vector<std::string> hits;
    for (const auto& a : aspects.aspects)
      if (contains_span(sentence, a)) hits.push_back(a);
    if (hits.size() != 1 || used.count(hits[0])) continue;
    std::vector<std::string> words = sentence;
    if (max_len > 0 && words.size() > max_len - 1) {
      words.resize(max_len - 1);
      if (!contains_span(words, hits[0])) continue;
    }
    used.insert(hits[0]);
    ex.gold_aspects.push_back(hits[0]);
    ex.gold_explanations.push_back(std::move(words));
  }
  if (ex.gold_aspects.size() < 2) return std::nullopt;
  return ex;
}

// ---- vocabulary ----------------------------------------------------------------

Vocabulary::Vocabulary() : tokens_{"<pad>", "<unk>", "<bos>", "<eos>"} {
  for (std::size_t i = 0; i < tokens_.size(); ++i) index_[tokens_[i]] = i;
}

Vocabulary Vocabulary::from_words(const std::vector<std::string>& words) {
  Vocabulary v;
  for (const auto& w : words) {
    if (!v.index_.try_emplace(w, v.tokens_.size()).second) throw DataError("vocabulary: duplicate token '" + w + "'");
    v.tokens_.push_back(w);
  }
  return v;
}

std::size_t Vocabulary::id(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<std::size_t> Vocabulary::encode(const std::vector<std::string>& words) const {
  std::vector<std::size_t> ids;
  ids.reserve(words.size());
  for (const auto& w : words) ids.push_back(id(w));
  return ids;
}

Vocabulary build_vocab(const std::vector<ReviewRecord>& records, std::size_t d_v) {
  if (d_v < 5) throw ConfigError("build_vocab: d_v must be >= 5");
  std::map<std::string, std::size_t> counts;
  for (const auto& r : records)
    for (const auto& s : r.sentences)
      for (const auto& w : s) ++counts[w];
  Vocabulary reserved;
  for (const auto& t : reserved.tokens()) counts.erase(t);
  if (counts.empty()) throw DataError("build_vocab: empty corpus");
  return Vocabulary::from_words(rank_aspects(counts, d_v - Vocabulary::kReserved).aspects);
}

// ---- splits --------------------------------------------------------------------

SplitIndices split(std::size_t n_records, std::uint64_t seed) {
  if (n_records < 10) throw DataError("split: need at least 10 records, got " + std::to_string(n_records));
  std::vector<std::size_t> order(n_records);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  shuffle(std::span<std::size_t>(order), rng);
  const std::size_t n_train = n_records * 8 / 10;
  const std::size_t n_valid = n_records / 10;
  SplitIndices s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.valid.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                 order.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid), order.end());
  return s;
}

std::string format_split_manifest(const SplitIndices& s) {
  std::ostringstream os;
  auto line = [&](const char* name, const std::vector<std::size_t>& idx) {
    os << name;
    for (auto i : idx) os << ' ' << i;
    os << '\n';
  };
  line("train", s.train);
  line("valid", s.valid);
  line("test", s.test);
  return os.str();
}

SplitIndices parse_split_manifest(std::string_view text) {
  SplitIndices s;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    auto parts = split_ws(line);
    if (parts.empty()) continue;
    std::vector<std::size_t>* dst = parts[0] == "train" ? &s.train
                                    : parts[0] == "valid" ? &s.valid
                                    : parts[0] == "test"  ? &s.test
                                                          : nullptr;
    if (!dst) throw DataError("split manifest: unknown split '" + parts[0] + "'");
    for (std::size_t i = 1; i < parts.size(); ++i) dst->push_back(std::stoul(parts[i]));
  }
  return s;
}

std::string format_aspect_vocab(const AspectVocabulary& v) {
  std::ostringstream os;
  for (const auto& a : v.aspects) os << a << '\t' << v.counts.at(a) << '\n';
  return os.str();
}

AspectVocabulary parse_aspect_vocab(std::string_view text) {
  AspectVocabulary v;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw DataError("aspect vocabulary: expected 'aspect<TAB>count'");
    std::string a = line.substr(0, tab);
    v.counts[a] = std::stoul(line.substr(tab + 1));
    v.aspects.push_back(std::move(a));
  }
  return v;
}

}  // namespace hag
