#include "hag/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "hag/checkpoint.hpp"
#include "hag/errors.hpp"
#include "hag/text.hpp"

namespace hag {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + p.string());
  out << text;
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw DataError("cannot open " + p.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line))
    if (line.find_first_not_of(" \t\r") != std::string::npos) out.push_back(line);
  return out;
}

// Model tensors replaced by the best-epoch copies the trainer keeps.
Checkpoint with_best_weights(Checkpoint ckpt) {
  for (auto& t : ckpt.tensors) {
    if (t.name.find('/') != std::string::npos) continue;
    if (const TensorBlob* b = ckpt.find("best/" + t.name)) t.data = b->data;
  }
  return ckpt;
}

}  // namespace

fs::path bundle_dir(const RunConfig& config) { return fs::path(config.workdir) / "bundle"; }

std::vector<ParsedReview> load_parsed_reviews(const RunConfig& config) {
  if (config.reviews.empty()) throw ConfigError("no reviews file configured");
  if (config.conllu.empty()) throw ConfigError("no CoNLL-U path configured");
  const auto records = load_reviews(config.reviews);
  if (records.empty()) throw DataError("empty corpus: " + config.reviews);
  return attach_parses(records, load_parses(config.conllu));
}

DatasetStats cmd_preprocess(const RunConfig& config) {
  const Bundle b = build_bundle(load_parsed_reviews(config), config);
  const fs::path dir = bundle_dir(config);
  save_bundle(b, dir);
  return b.stats();
}

std::unique_ptr<HagModel> load_model(const Checkpoint& ckpt, const Bundle& bundle) {
  check_vocab_matches(ckpt.vocab, bundle);
  auto model = std::make_unique<HagModel>(ckpt.config.model, ckpt.dims, ckpt.config.seed);
  load_model_tensors(ckpt, *model);
  return model;
}

TrainResult cmd_train(const RunConfig& config, const std::optional<fs::path>& resume) {
  config.validate();
  const Bundle bundle = load_bundle(bundle_dir(config), config);
  HagModel model(config.model, bundle.dims(), config.seed);
  Trainer trainer(model, bundle, config.train, config.seed);
  if (resume) trainer.restore(read_checkpoint(*resume));

  const fs::path work(config.workdir);
  TrainResult result{{}, work / "best.ckpt", work / "last.ckpt"};
  write_text(work / "config.conf", format_config(config));
  auto persist = [&] {
    const Checkpoint ckpt = trainer.to_checkpoint(config);
    write_checkpoint(result.last, ckpt);
    write_checkpoint(result.best, with_best_weights(ckpt));
    write_text(work / "history.csv", format_history_csv(trainer.history()));
  };
  trainer.fit([&](const EpochRecord&) { persist(); });
  persist();
  result.history = trainer.history();
  return result;
}

std::size_t cmd_generate(const RunConfig& config, const fs::path& checkpoint, const fs::path& pairs,
                         const std::string& split, const fs::path& out) {
  const Bundle bundle = load_bundle(bundle_dir(config), config);
  const Checkpoint ckpt = read_checkpoint(checkpoint);
  const auto model = load_model(ckpt, bundle);

  std::vector<std::pair<std::string, std::string>> todo;
  if (!pairs.empty()) {
    std::size_t line_no = 0;
    for (const auto& line : read_lines(pairs)) {
      ++line_no;
      const auto f = split_ws(line);
      if (f.size() != 2) throw DataError(pairs.string() + " line " + std::to_string(line_no) + ": expected 'user item'");
      todo.emplace_back(f[0], f[1]);
    }
  } else {
    for (const auto& ex : bundle.examples(split)) todo.emplace_back(ex.user, ex.item);
  }

  std::string text;
  for (const auto& [user, item] : todo) {
    const std::size_t u = bundle.user_index(user), i = bundle.item_index(item);
    const GenerationOutput g = generate(*model, bundle.user_inputs[u], bundle.item_inputs[i], u, i);
    text += to_json(g, user, item, bundle.vocab, bundle.aspects.aspects).dump() + "\n";
  }
  write_text(out, text);
  return todo.size();
}

MetricReport cmd_evaluate(const fs::path& outputs, const fs::path& gold) {
  const auto out_lines = read_lines(outputs);
  const auto gold_lines = read_lines(gold);
  std::vector<EvalExample> examples;
  for (std::size_t k = 0; k < gold_lines.size(); ++k) {
    nlohmann::json g, o;
    try {
      g = nlohmann::json::parse(gold_lines[k]);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(gold.string() + " line " + std::to_string(k + 1) + ": " + e.what());
    }
    const std::string pair = "(" + g.value("user", "?") + ", " + g.value("item", "?") + ")";
    if (k >= out_lines.size()) throw DataError("no generated output for gold pair " + pair + " at line " + std::to_string(k + 1));
    try {
      o = nlohmann::json::parse(out_lines[k]);
      if (o.at("user") != g.at("user") || o.at("item") != g.at("item")) {
        throw DataError("line " + std::to_string(k + 1) + ": output pair (" + o.at("user").get<std::string>() + ", " +
                        o.at("item").get<std::string>() + ") does not match gold pair " + pair);
      }
      EvalExample e;
      e.generated = o.at("explanations").get<std::vector<Tokens>>();
      e.predicted_rating = std::clamp(o.at("rating_pred").get<double>(), 1.0, 5.0);
      e.gold_aspects = g.at("aspects").get<std::vector<std::string>>();
      e.gold_explanations = g.at("explanations").get<std::vector<Tokens>>();
      e.gold_rating = g.at("rating").get<double>();
      examples.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw DataError(outputs.string() + " line " + std::to_string(k + 1) + ": " + ex.what());
    }
  }
  if (out_lines.size() > gold_lines.size()) {
    throw DataError(outputs.string() + " has " + std::to_string(out_lines.size()) + " lines but gold has " +
                    std::to_string(gold_lines.size()));
  }
  if (examples.empty()) throw DataError("evaluate: empty evaluation set");
  return evaluate_examples(examples);
}

std::vector<Generated> generate_examples(const HagModel& model, const Bundle& bundle,
                                         const std::vector<EncodedExample>& examples) {
  std::vector<Generated> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    out.push_back({&ex, generate(model, bundle.user_inputs.at(ex.user_idx), bundle.item_inputs.at(ex.item_idx),
                                 ex.user_idx, ex.item_idx)});
  }
  return out;
}

MetricReport score(const std::vector<Generated>& generated, const Bundle& bundle) {
  std::vector<EvalExample> examples;
  for (const auto& g : generated) {
    EvalExample e;
    for (const auto& ids : g.output.explanations) {
      Tokens words;
      for (std::size_t id : ids) words.push_back(bundle.vocab.token(id));
      e.generated.push_back(std::move(words));
    }
    e.gold_aspects = g.example->gold_aspects;
    e.gold_explanations = g.example->gold_explanations;
    e.predicted_rating = g.output.clamped_rating();
    e.gold_rating = g.example->rating;
    examples.push_back(std::move(e));
  }
  if (examples.empty()) throw DataError("evaluate: empty evaluation set");
  return evaluate_examples(examples);
}

Experiment run_experiment(const std::vector<ParsedReview>& reviews, const RunConfig& config,
                          const std::string& eval_split) {
  const Bundle bundle = build_bundle(reviews, config);
  HagModel model(config.model, bundle.dims(), config.seed);
  Trainer trainer(model, bundle, config.train, config.seed);
  trainer.fit();
  trainer.copy_best_into(model);
  Experiment e;
  e.history = trainer.history();
  e.report = score(generate_examples(model, bundle, bundle.examples(eval_split)), bundle);
  return e;
}

std::string format_table(const std::string& key, const std::vector<TableRow>& rows) {
  std::string out = key + "\tFMR\tBLEU-4\tROUGE-L\tMAE\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "\t%.4f\t%.2f\t%.2f\t%.4f\n", r.report.fmr, r.report.bleu4, r.report.rougeL,
                  r.report.mae);
    out += r.label + buf;
  }
  return out;
}

std::vector<TableRow> run_sweep(const std::vector<ParsedReview>& reviews, const RunConfig& config,
                                const std::string& spec, const std::string& eval_split) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("sweep spec must look like key=v1,v2,...");
  const std::string key = spec.substr(0, eq);
  std::string values = spec.substr(eq + 1);
  for (char& c : values)
    if (c == ',') c = ' ';
  const auto list = split_ws(values);
  if (list.empty()) throw ConfigError("sweep over " + key + " has no values");
  std::vector<TableRow> rows;
  for (const auto& v : list) {
    RunConfig c = config;
    set_config_value(c, key, v);
    c.validate();
    rows.push_back({v, run_experiment(reviews, c, eval_split).report});
  }
  return rows;
}

void apply_ablation(RunConfig& config, const std::string& variant) {
  if (variant == "full") return;
  if (variant == "no_agp") config.model.no_agp = true;
  else if (variant == "gat_only") config.model.gat_only = true;
  else if (variant == "no_relation") config.model.no_relation = true;
  else throw ConfigError("unknown ablation '" + variant + "' (expected full, no_agp, gat_only or no_relation)");
}

std::vector<TableRow> run_ablation(const std::vector<ParsedReview>& reviews, const RunConfig& config,
                                   const std::vector<std::string>& variants, const std::string& eval_split) {
  std::vector<TableRow> rows;
  for (const auto& v : variants) {
    RunConfig c = config;
    apply_ablation(c, v);
    c.validate();
    rows.push_back({v, run_experiment(reviews, c, eval_split).report});
  }
  return rows;
}

}  // namespace hag
