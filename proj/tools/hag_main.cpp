// hag: preprocess | train | generate | evaluate | ablate | toy

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hag/checkpoint.hpp"
#include "hag/config.hpp"
#include "hag/errors.hpp"
#include "hag/pipeline.hpp"
#include "hag/toy_corpus.hpp"

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string workdir;
  std::vector<std::string> sets;
  std::string ablate;
};

hag::RunConfig resolve(const Common& c) {
  hag::RunConfig cfg;
  if (!c.config_path.empty()) cfg = hag::load_config(c.config_path);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.workdir.empty()) cfg.workdir = c.workdir;
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw hag::ConfigError("--set expects key=value, got '" + s + "'");
    hag::set_config_value(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  if (!c.ablate.empty()) hag::apply_ablation(cfg, c.ablate);
  cfg.validate();
  return cfg;
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary | std::ios::trunc) << text;
}

int run(int argc, char** argv) {
  CLI::App app{"Aspect-guided explainable recommendation over review syntax graphs"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--config", common.config_path, "key = value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", common.seed, "random seed");
  app.add_option("--workdir", common.workdir, "artifact directory");
  app.add_option("--set", common.sets, "override a config key (key=value), repeatable");
  app.add_option("--ablate", common.ablate, "full | no_agp | gat_only | no_relation");

  auto* toy = app.add_subcommand("toy", "write the bundled toy corpus");
  std::string toy_out = "toy";
  std::size_t toy_reviews = 60;
  toy->add_option("--out", toy_out, "output directory");
  toy->add_option("--reviews", toy_reviews, "number of reviews");

  auto* pre = app.add_subcommand("preprocess", "build graphs, vocabularies and splits");

  auto* train = app.add_subcommand("train", "train and write checkpoints");
  std::string resume;
  train->add_option("--resume", resume, "resume from a last.ckpt")->check(CLI::ExistingFile);

  auto* gen = app.add_subcommand("generate", "greedy generation for (user, item) pairs");
  std::string ckpt_path, pairs, split = "test", gen_out;
  gen->add_option("--checkpoint", ckpt_path, "checkpoint file")->required()->check(CLI::ExistingFile);
  gen->add_option("--pairs", pairs, "file with 'user item' per line")->check(CLI::ExistingFile);
  gen->add_option("--split", split, "bundle split used when --pairs is absent");
  gen->add_option("--out", gen_out, "output JSONL (default <workdir>/generated_<split>.jsonl)");

  auto* eval = app.add_subcommand("evaluate", "score generations, or run a sweep");
  std::string outputs, gold, report, sweep, eval_split = "test";
  eval->add_option("--outputs", outputs, "generated JSONL");
  eval->add_option("--gold", gold, "gold JSONL (bundle split file)");
  eval->add_option("--report", report, "write the JSON report here as well");
  eval->add_option("--sweep", sweep, "key=v1,v2,... retrains per value and prints a table");
  eval->add_option("--eval-split", eval_split, "split scored by --sweep");

  auto* abl = app.add_subcommand("ablate", "train each variant and print a table");
  std::vector<std::string> variants{"full", "no_agp", "gat_only", "no_relation"};
  abl->add_option("--variants", variants, "variants to run")->delimiter(',');
  abl->add_option("--eval-split", eval_split, "split to score");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (*toy) {
    hag::write_toy_corpus(hag::make_toy_corpus(toy_reviews), toy_out);
    std::cout << "wrote " << toy_reviews << " reviews to " << toy_out << "\n";
    return 0;
  }
  const hag::RunConfig cfg = resolve(common);
  const fs::path work(cfg.workdir);

  if (*pre) {
    const auto stats = hag::cmd_preprocess(cfg);
    std::cout << hag::format_stats(stats);
  } else if (*train) {
    const auto r = hag::cmd_train(cfg, resume.empty() ? std::nullopt : std::optional<fs::path>(resume));
    if (!r.history.empty()) {
      const auto& last = r.history.back();
      std::cout << "epoch " << last.epoch << " train loss " << last.train.total << " valid loss "
                << last.valid.mean.total << "\n";
    }
    std::cout << "checkpoints: " << r.best.string() << ", " << r.last.string() << "\n";
  } else if (*gen) {
    const fs::path out = gen_out.empty() ? work / ("generated_" + split + ".jsonl") : fs::path(gen_out);
    const auto n = hag::cmd_generate(cfg, ckpt_path, pairs, split, out);
    std::cout << "generated " << n << " outputs into " << out.string() << "\n";
  } else if (*eval) {
    if (!sweep.empty()) {
      const auto reviews = hag::load_parsed_reviews(cfg);
      const auto rows = hag::run_sweep(reviews, cfg, sweep, eval_split);
      const std::string key = sweep.substr(0, sweep.find('='));
      const std::string table = hag::format_table(key, rows);
      write_file(work / ("sweep_" + key + ".tsv"), table);
      std::cout << table;
    } else {
      if (outputs.empty() || gold.empty()) throw hag::ConfigError("evaluate needs --outputs and --gold, or --sweep");
      const auto r = hag::cmd_evaluate(outputs, gold);
      const std::string text = r.to_json().dump(2) + "\n";
      if (!report.empty()) write_file(report, text);
      std::cout << text;
    }
  } else if (*abl) {
    const auto reviews = hag::load_parsed_reviews(cfg);
    const std::string table = hag::format_table("variant", hag::run_ablation(reviews, cfg, variants, eval_split));
    write_file(work / "ablation.tsv", table);
    std::cout << table;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const hag::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const hag::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const hag::CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return 2;
  } catch (const hag::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const hag::ShapeError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
