#pragma once

// Command implementations behind the `hag` executable. Artifacts live under
// config.workdir: bundle/, checkpoints, history.csv, generations and reports.

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hag/config.hpp"
#include "hag/dataset.hpp"
#include "hag/decoder.hpp"
#include "hag/metrics.hpp"
#include "hag/model.hpp"
#include "hag/training.hpp"

namespace hag {

std::filesystem::path bundle_dir(const RunConfig& config);

DatasetStats cmd_preprocess(const RunConfig& config);

struct TrainResult {
  std::vector<EpochRecord> history;
  std::filesystem::path best;
  std::filesystem::path last;
};
// Writes best.ckpt (lowest validation loss), last.ckpt (resumable, refreshed
// every epoch) and history.csv into the workdir.
TrainResult cmd_train(const RunConfig& config, const std::optional<std::filesystem::path>& resume = std::nullopt);

// Generates for the (user, item) pairs in `pairs` (one "user item" per line)
// or, when `pairs` is empty, for every example of `split`. Returns the count.
std::size_t cmd_generate(const RunConfig& config, const std::filesystem::path& checkpoint,
                         const std::filesystem::path& pairs, const std::string& split,
                         const std::filesystem::path& out);

// `outputs` is generate's JSONL; `gold` holds one example per line in the
// bundle's split format. Lines must align pair by pair.
MetricReport cmd_evaluate(const std::filesystem::path& outputs, const std::filesystem::path& gold);

// Builds a model whose shapes match the checkpoint and loads its weights.
std::unique_ptr<HagModel> load_model(const Checkpoint& ckpt, const Bundle& bundle);

struct Generated {
  const EncodedExample* example;
  GenerationOutput output;
};
std::vector<Generated> generate_examples(const HagModel& model, const Bundle& bundle,
                                         const std::vector<EncodedExample>& examples);
MetricReport score(const std::vector<Generated>& generated, const Bundle& bundle);

// Preprocess, train and evaluate in memory. Deterministic in (reviews, config).
struct Experiment {
  MetricReport report;
  std::vector<EpochRecord> history;
};
Experiment run_experiment(const std::vector<ParsedReview>& reviews, const RunConfig& config,
                          const std::string& eval_split = "test");

struct TableRow {
  std::string label;
  MetricReport report;
};
// Tab-separated: first column `key`, then FMR, BLEU-4, ROUGE-L, MAE.
std::string format_table(const std::string& key, const std::vector<TableRow>& rows);

// `spec` is "key=v1,v2,..." over any config key.
std::vector<TableRow> run_sweep(const std::vector<ParsedReview>& reviews, const RunConfig& config,
                                const std::string& spec, const std::string& eval_split = "test");

// Variants: full, no_agp, gat_only, no_relation.
std::vector<TableRow> run_ablation(const std::vector<ParsedReview>& reviews, const RunConfig& config,
                                   const std::vector<std::string>& variants, const std::string& eval_split = "test");

// Sets the config switch for one variant name; throws ConfigError on an unknown one.
void apply_ablation(RunConfig& config, const std::string& variant);

// Reads config.reviews and config.conllu.
std::vector<ParsedReview> load_parsed_reviews(const RunConfig& config);

}  // namespace hag
