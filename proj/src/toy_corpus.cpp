#include "hag/toy_corpus.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "hag/dataset.hpp"
#include "hag/errors.hpp"
#include "hag/rng.hpp"

namespace hag {

namespace {

struct AspectWords {
  const char* aspect;
  std::array<const char*, 2> good;
  std::array<const char*, 2> bad;
};

constexpr std::array<AspectWords, 8> kAspects{{
    {"screen", {"bright", "sharp"}, {"dim", "blurry"}},
    {"battery", {"long", "reliable"}, {"weak", "short"}},
    {"price", {"fair", "low"}, {"high", "steep"}},
    {"sound", {"clear", "rich"}, {"tinny", "flat"}},
    {"camera", {"crisp", "fast"}, {"grainy", "slow"}},
    {"design", {"sleek", "elegant"}, {"bulky", "ugly"}},
    {"keyboard", {"comfortable", "quiet"}, {"stiff", "noisy"}},
    {"charger", {"compact", "quick"}, {"flimsy", "loose"}},
}};

// $A = aspect noun, $J = adjective. head 0 = root.
struct TemplateToken {
  const char* form;
  const char* lemma;
  const char* upos;
  int head;
  const char* rel;
};

const std::vector<std::vector<TemplateToken>>& templates() {
  static const std::vector<std::vector<TemplateToken>> t{
      {{"the", "the", "DET", 2, "det"},
       {"$A", "$A", "NOUN", 4, "nsubj"},
       {"is", "be", "AUX", 4, "cop"},
       {"$J", "$J", "ADJ", 0, "root"},
       {".", ".", "PUNCT", 4, "punct"}},
      {{"i", "i", "PRON", 2, "nsubj"},
       {"love", "love", "VERB", 0, "root"},
       {"the", "the", "DET", 5, "det"},
       {"$J", "$J", "ADJ", 5, "amod"},
       {"$A", "$A", "NOUN", 2, "obj"},
       {".", ".", "PUNCT", 2, "punct"}},
      {{"the", "the", "DET", 2, "det"},
       {"$A", "$A", "NOUN", 3, "nsubj"},
       {"feels", "feel", "VERB", 0, "root"},
       {"$J", "$J", "ADJ", 3, "xcomp"},
       {".", ".", "PUNCT", 3, "punct"}},
      {{"it", "it", "PRON", 2, "nsubj"},
       {"has", "have", "VERB", 0, "root"},
       {"a", "a", "DET", 5, "det"},
       {"$J", "$J", "ADJ", 5, "amod"},
       {"$A", "$A", "NOUN", 2, "obj"},
       {".", ".", "PUNCT", 2, "punct"}},
  };
  return t;
}

std::string substitute(const char* s, const std::string& aspect, const std::string& adj) {
  const std::string v(s);
  if (v == "$A") return aspect;
  if (v == "$J") return adj;
  return v;
}

std::string two_digits(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02zu", i);
  return buf;
}

}  // namespace

ToyCorpus make_toy_corpus(std::size_t n_reviews, std::uint64_t seed) {
  constexpr std::size_t kUsers = 10, kItems = 12;
  if (n_reviews < 1 || n_reviews > kUsers * kItems) {
    throw ConfigError("toy corpus size must be in 1.." + std::to_string(kUsers * kItems));
  }
  Rng rng(seed);

  struct Item {
    std::array<std::size_t, 3> aspects;
    int quality;
  };
  std::vector<Item> items(kItems);
  for (auto& it : items) {
    std::vector<std::size_t> pool(kAspects.size());
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    shuffle(std::span(pool), rng);
    it.aspects = {pool[0], pool[1], pool[2]};
    it.quality = 2 + static_cast<int>(uniform_index(rng, 4));
  }
  std::vector<int> user_offset(kUsers);
  for (auto& o : user_offset) o = static_cast<int>(uniform_index(rng, 3)) - 1;

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t u = 0; u < kUsers; ++u)
    for (std::size_t i = 0; i < kItems; ++i) pairs.emplace_back(u, i);
  shuffle(std::span(pairs), rng);
  pairs.resize(n_reviews);

  ToyCorpus out;
  std::ostringstream jsonl, conllu;
  for (std::size_t r = 0; r < pairs.size(); ++r) {
    const auto [u, i] = pairs[r];
    const Item& item = items[i];
    const int rating = std::clamp(item.quality + user_offset[u], 1, 5);
    const bool good = rating >= 3;
    const std::size_t mentions = u % 2 == 0 ? 3 : 2;
    const auto& tmpl = templates()[u % templates().size()];
    const std::string ref = "r" + two_digits(r + 1);

    conllu << "# review_id = " << ref << "\n";
    std::string text;
    for (std::size_t s = 0; s < mentions; ++s) {
      const AspectWords& a = kAspects[item.aspects[s]];
      const std::string adj = (good ? a.good : a.bad)[(u / 2) % 2];
      conllu << "# sent_id = " << ref << "-" << s + 1 << "\n";
      std::string sentence;
      for (std::size_t k = 0; k < tmpl.size(); ++k) {
        const TemplateToken& t = tmpl[k];
        const std::string form = substitute(t.form, a.aspect, adj);
        conllu << k + 1 << '\t' << form << '\t' << substitute(t.lemma, a.aspect, adj) << '\t' << t.upos << "\t_\t_\t"
               << t.head << '\t' << t.rel << "\t_\t_\n";
        if (form == ".") sentence += ".";
        else sentence += (sentence.empty() ? "" : " ") + form;
      }
      conllu << "\n";
      text += (text.empty() ? "" : " ") + sentence;
    }
    nlohmann::json j{{"user", "u" + two_digits(u)},
                     {"item", "i" + two_digits(i)},
                     {"rating", rating},
                     {"text", text},
                     {"parse_ref", ref}};
    jsonl << j.dump() << "\n";
  }
  out.reviews_jsonl = jsonl.str();
  out.conllu = conllu.str();
  return out;
}

std::vector<ParsedReview> parse_toy_corpus(const ToyCorpus& corpus) {
  std::vector<ReviewRecord> records;
  std::istringstream in(corpus.reviews_jsonl);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty()) records.push_back(parse_review_line(line, line_no));
  }
  std::map<std::string, std::vector<DependencyTree>> parses;
  for (auto& t : parse_conllu(corpus.conllu)) parses[t.doc_id].push_back(std::move(t));
  return attach_parses(records, parses);
}

void write_toy_corpus(const ToyCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "reviews.jsonl", std::ios::binary) << corpus.reviews_jsonl;
  std::ofstream(dir / "parses.conllu", std::ios::binary) << corpus.conllu;
  if (!std::filesystem::exists(dir / "parses.conllu")) throw DataError("cannot write toy corpus to " + dir.string());
}

}  // namespace hag
