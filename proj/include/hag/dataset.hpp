#pragma once

// Preprocessed dataset: per-user and per-item syntax graphs and aspect lists,
// vocabularies, and encoded examples for each split. Everything derived from
// text (graphs, vocabularies, aspects) uses the training split only.

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hag/config.hpp"
#include "hag/corpus.hpp"
#include "hag/encoder.hpp"
#include "hag/model.hpp"
#include "hag/syngraph.hpp"

namespace hag {

inline constexpr std::string_view kColdStart = "<cold>";

struct EncodedExample {
  std::string user;
  std::string item;
  std::size_t user_idx = 0;
  std::size_t item_idx = 0;
  double rating = 0.0;
  std::vector<std::string> gold_aspects;
  std::vector<std::vector<std::string>> gold_explanations;
  std::vector<std::size_t> aspect_targets;  // decoder ids, EOS_ASPECT appended when multi mode has room
  std::vector<std::vector<std::size_t>> explanation_targets;  // word ids ending in EOS
};

struct DatasetStats {
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t reviews = 0;
  std::size_t aspects = 0;
  std::size_t train = 0, valid = 0, test = 0;
  double mean_user_nodes = 0.0, mean_item_nodes = 0.0;
  double mean_user_edges = 0.0, mean_item_edges = 0.0;
};

struct Bundle {
  RunConfig config;
  Vocabulary vocab;
  AspectVocabulary aspects;
  std::map<std::string, int> relations;  // id 0 is reserved for labels unseen in training
  std::vector<std::string> users;        // index 0 = cold start
  std::vector<std::string> items;
  std::vector<SyntaxGraph> user_graphs;  // canonical form, aligned with users
  std::vector<SyntaxGraph> item_graphs;
  std::vector<std::vector<std::string>> user_aspects;  // n each, kNoAspect padded
  std::vector<std::vector<std::string>> item_aspects;
  SplitIndices split;
  std::size_t n_reviews = 0;
  std::vector<EncodedExample> train, valid, test;

  // Model-ready inputs, aligned with users / items.
  std::vector<SideInput> user_inputs;
  std::vector<SideInput> item_inputs;

  ModelDims dims() const;
  std::size_t user_index(const std::string& id) const;  // 0 when unknown
  std::size_t item_index(const std::string& id) const;
  DatasetStats stats() const;
  // Rebuilds user_inputs / item_inputs from graphs and aspect lists.
  void prepare_inputs();
  const std::vector<EncodedExample>& examples(const std::string& split_name) const;
};

// Trees keyed by review id. A file's trees go under the most recent
// "# review_id" / "# newdoc id" comment, or the file stem when none is given.
// `path` is a file or a directory of *.conllu files read in name order.
std::map<std::string, std::vector<DependencyTree>> load_parses(const std::filesystem::path& path);

// Attaches parses to records. Throws DataError on an unresolved parse_ref or
// a tree count that differs from the sentence count.
std::vector<ParsedReview> attach_parses(const std::vector<ReviewRecord>& records,
                                        const std::map<std::string, std::vector<DependencyTree>>& parses);

Bundle build_bundle(const std::vector<ParsedReview>& reviews, const RunConfig& config);
// Reads config.reviews and config.conllu.
Bundle build_bundle(const RunConfig& config);

// Every file is deterministic text, so equal inputs give byte-identical bundles.
void save_bundle(const Bundle& bundle, const std::filesystem::path& dir);
// `config` supplies model settings that do not change the bundle contents.
Bundle load_bundle(const std::filesystem::path& dir, const RunConfig& config);
Bundle load_bundle(const std::filesystem::path& dir);

std::string format_stats(const DatasetStats& s);

EncodedExample encode_example(const TrainingExample& ex, const Bundle& bundle);

}  // namespace hag
