#pragma once

// Shared builders for tests: the micro model, random graphs, the toy corpus
// and scratch directories.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hag/config.hpp"
#include "hag/corpus.hpp"
#include "hag/dataset.hpp"
#include "hag/decoder.hpp"
#include "hag/encoder.hpp"
#include "hag/model.hpp"
#include "hag/rng.hpp"
#include "hag/toy_corpus.hpp"

#ifndef HAG_SOURCE_DIR
#define HAG_SOURCE_DIR "."
#endif
#ifndef HAG_CLI_PATH
#define HAG_CLI_PATH "hag"
#endif

namespace fixture {

namespace fs = std::filesystem;

inline hag::HagConfig micro_config() {
  hag::HagConfig c;
  c.d0 = 4;
  c.d1 = 8;
  c.d2 = 4;
  c.n_aspects = 2;
  c.pool_layers = 2;
  c.pool_ratio = 0.5;
  c.fm_factors = 3;
  c.max_len_single = 6;
  c.max_len_multi = 6;
  c.max_aspects = 3;
  return c;
}

// vocab 20 words, 8 decoder aspect ids (BOS, EOS and six aspects).
inline hag::ModelDims micro_dims() {
  hag::ModelDims d;
  d.vocab = 20;
  d.aspect_vocab = 8;
  d.relations = 4;
  d.users = 3;
  d.items = 3;
  return d;
}

// Random undirected edges with probability p, relation ids in [0, relations).
inline hag::GraphInput random_graph(hag::Rng& rng, std::size_t n, std::size_t vocab, std::size_t relations, double p) {
  hag::GraphInput g;
  for (std::size_t i = 0; i < n; ++i) g.node_ids.push_back(hag::Vocabulary::kReserved + hag::uniform_index(rng, vocab - hag::Vocabulary::kReserved));
  g.adj.n = n;
  g.adj.a.assign(n * n, 0);
  g.adj.rel.assign(n * n, -1);
  for (std::size_t h = 0; h < n; ++h)
    for (std::size_t t = h + 1; t < n; ++t) {
      if (hag::uniform01(rng) >= p) continue;
      const int r = static_cast<int>(hag::uniform_index(rng, relations));
      g.adj.a[h * n + t] = g.adj.a[t * n + h] = 1;
      g.adj.rel[h * n + t] = r;
      g.adj.rel[t * n + h] = static_cast<int>(hag::uniform_index(rng, 2)) ? r : static_cast<int>(hag::uniform_index(rng, relations));
    }
  return g;
}

// n aspects of one or two random words; the last slot is padded when asked.
inline hag::SideInput random_side(hag::Rng& rng, const hag::HagConfig& cfg, const hag::ModelDims& dims,
                                  std::size_t nodes, bool pad_last = false) {
  hag::SideInput s;
  if (nodes > 0) s.graph = random_graph(rng, nodes, dims.vocab, dims.relations, 0.35);
  for (std::size_t k = 0; k < cfg.n_aspects; ++k) {
    if (pad_last && k + 1 == cfg.n_aspects) {
      s.aspects.emplace_back(std::nullopt);
      continue;
    }
    std::vector<std::size_t> words(1 + hag::uniform_index(rng, 2));
    for (auto& w : words) w = hag::Vocabulary::kReserved + hag::uniform_index(rng, dims.vocab - hag::Vocabulary::kReserved);
    s.aspects.emplace_back(words);
  }
  return s;
}

inline void randomize(hag::HagModel& model, hag::Rng& rng, double scale) {
  for (const auto& [name, t] : model.named_parameters()) {
    auto v = hag::Tensor(t).mutable_values();
    for (double& x : v) x = hag::uniform(rng, -scale, scale);
  }
}

// Two aspects plus EOS_ASPECT, explanations ending in EOS.
inline hag::EncodedExample micro_example(std::size_t user, std::size_t item, double rating) {
  hag::EncodedExample ex;
  ex.user = "u" + std::to_string(user);
  ex.item = "i" + std::to_string(item);
  ex.user_idx = user;
  ex.item_idx = item;
  ex.rating = rating;
  ex.aspect_targets = {hag::kAspectOffset + 3, hag::kAspectOffset + 1, hag::kEosAspect};
  ex.explanation_targets = {{5, 9, 12, hag::Vocabulary::kEos}, {7, 15, hag::Vocabulary::kEos}};
  return ex;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

// Fresh empty directory under the system temp dir.
inline fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "hag_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// The toy config with paths pointing into `dir`, where the corpus is written.
inline hag::RunConfig toy_config(const fs::path& dir) {
  hag::RunConfig cfg = hag::load_config(std::string(HAG_SOURCE_DIR) + "/configs/toy.conf");
  hag::write_toy_corpus(hag::make_toy_corpus(), dir / "toy");
  cfg.reviews = (dir / "toy" / "reviews.jsonl").string();
  cfg.conllu = (dir / "toy" / "parses.conllu").string();
  cfg.workdir = (dir / "work").string();
  return cfg;
}

inline std::vector<hag::ParsedReview> toy_reviews() { return hag::parse_toy_corpus(hag::make_toy_corpus()); }

}  // namespace fixture
