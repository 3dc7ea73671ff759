#pragma once

// Model and run configuration in a flat `key = value` text format. Lines
// starting with '#' are comments. Unknown keys are rejected.

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>

namespace hag {

enum class GenerationMode { kSingle, kMulti };

struct HagConfig {
  std::size_t d0 = 64;    // graph node dim
  std::size_t d1 = 128;   // hidden and word dim
  std::size_t d2 = 32;    // user/item id dim
  std::size_t n_aspects = 4;
  std::size_t pool_layers = 2;
  double pool_ratio = 0.5;
  std::size_t fm_factors = 8;
  std::size_t max_vocab = 30000;
  std::size_t max_aspect_vocab = 2000;
  std::size_t max_len_single = 15;
  std::size_t max_len_multi = 25;
  std::size_t max_aspects = 4;
  std::size_t graph_cap = 500;
  std::set<std::string> prune{"case", "cc", "det", "mark", "nmod:poss", "punct"};  // removed before merging
  bool compound_aspects = false;
  bool lemma_nodes = false;
  bool tie_node_embeddings = false;  // share the word table as node table when d0 == d1
  double leaky_slope = 0.2;
  GenerationMode mode = GenerationMode::kMulti;

  // Ablations.
  bool no_agp = false;       // skip GAT and scoring; banks use raw node embeddings
  bool gat_only = false;     // GAT without top-K selection
  bool no_relation = false;  // drop the relation term from attention logits

  std::size_t d_prime() const { return d0 * pool_layers + d1; }
  std::size_t max_len() const { return mode == GenerationMode::kSingle ? max_len_single : max_len_multi; }
  std::size_t aspects_per_example() const { return mode == GenerationMode::kSingle ? 1 : max_aspects; }
  // Throws ConfigError on out-of-range values.
  void validate() const;
};

struct TrainConfig {
  std::size_t epochs = 20;
  double lr = 0.002;
  std::size_t batch = 16;
  double clip_norm = 5.0;
  double w_aspect = 1.0;
  double w_explanation = 1.0;
  double w_rating = 1.0;

  void validate() const;
};

struct RunConfig {
  HagConfig model;
  TrainConfig train;
  std::uint64_t seed = 1;
  std::string reviews;  // JSONL
  std::string conllu;   // directory or single file
  std::string workdir = "work";

  void validate() const;
};

// Applies one assignment. Throws ConfigError on unknown key or bad value.
void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value);
std::string get_config_value(const RunConfig& cfg, std::string_view key);

RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});
// Every key in a fixed order; parse_config(format_config(c)) == c.
std::string format_config(const RunConfig& cfg);

}  // namespace hag
