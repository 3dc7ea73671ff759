#include "hag/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "hag/decoder.hpp"
#include "hag/errors.hpp"
#include "hag/text.hpp"

namespace hag {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write " + p.string());
  out << text;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

std::vector<std::string> split_char(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

// Settings that change what preprocessing writes.
const std::vector<std::string>& bundle_keys() {
  static const std::vector<std::string> keys{"n_aspects", "max_vocab", "max_aspect_vocab", "max_len_single",
                                             "max_len_multi", "max_aspects", "graph_cap", "prune",
                                             "compound_aspects", "lemma_nodes", "mode", "seed"};
  return keys;
}

std::size_t index_of(const std::vector<std::string>& names, const std::string& id) {
  const auto it = std::find(names.begin() + 1, names.end(), id);
  return it == names.end() ? 0 : static_cast<std::size_t>(it - names.begin());
}

SideInput make_side(const SyntaxGraph& graph, const std::vector<std::string>& aspects, const Bundle& b) {
  SideInput side;
  if (!graph.empty()) {
    for (const auto& w : graph.nodes()) side.graph.node_ids.push_back(b.vocab.id(w));
    side.graph.adj = adjacency(graph, b.relations, 0);
  }
  for (const auto& a : aspects) {
    if (a == kNoAspect) side.aspects.emplace_back(std::nullopt);
    else side.aspects.emplace_back(b.vocab.encode(split_ws(a)));
  }
  return side;
}

nlohmann::json example_json(const EncodedExample& e) {
  return {{"user", e.user},
          {"item", e.item},
          {"rating", e.rating},
          {"aspects", e.gold_aspects},
          {"explanations", e.gold_explanations}};
}

}  // namespace

ModelDims Bundle::dims() const {
  ModelDims d;
  d.vocab = vocab.size();
  d.aspect_vocab = aspects.size() + kAspectOffset;
  int max_rel = 0;
  for (const auto& [_, id] : relations) max_rel = std::max(max_rel, id);
  d.relations = static_cast<std::size_t>(max_rel) + 1;
  d.users = users.size();
  d.items = items.size();
  return d;
}

std::size_t Bundle::user_index(const std::string& id) const { return index_of(users, id); }
std::size_t Bundle::item_index(const std::string& id) const { return index_of(items, id); }

DatasetStats Bundle::stats() const {
  DatasetStats s;
  s.users = users.size() - 1;
  s.items = items.size() - 1;
  s.reviews = n_reviews;
  s.aspects = aspects.size();
  s.train = train.size();
  s.valid = valid.size();
  s.test = test.size();
  auto mean = [](const std::vector<SyntaxGraph>& gs, bool edges) {
    if (gs.size() <= 1) return 0.0;
    double total = 0.0;
    for (std::size_t i = 1; i < gs.size(); ++i)
      total += static_cast<double>(edges ? gs[i].edges().size() : gs[i].nodes().size());
    return total / static_cast<double>(gs.size() - 1);
  };
  s.mean_user_nodes = mean(user_graphs, false);
  s.mean_item_nodes = mean(item_graphs, false);
  s.mean_user_edges = mean(user_graphs, true);
  s.mean_item_edges = mean(item_graphs, true);
  return s;
}

void Bundle::prepare_inputs() {
  user_inputs.clear();
  item_inputs.clear();
  for (std::size_t i = 0; i < users.size(); ++i) user_inputs.push_back(make_side(user_graphs[i], user_aspects[i], *this));
  for (std::size_t i = 0; i < items.size(); ++i) item_inputs.push_back(make_side(item_graphs[i], item_aspects[i], *this));
}

const std::vector<EncodedExample>& Bundle::examples(const std::string& split_name) const {
  if (split_name == "train") return train;
  if (split_name == "valid") return valid;
  if (split_name == "test") return test;
  throw ConfigError("unknown split '" + split_name + "' (expected train, valid or test)");
}

std::map<std::string, std::vector<DependencyTree>> load_parses(const fs::path& path) {
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& e : fs::directory_iterator(path))
      if (e.is_regular_file() && e.path().extension() == ".conllu") files.push_back(e.path());
    std::sort(files.begin(), files.end());
  } else if (fs::is_regular_file(path)) {
    files.push_back(path);
  } else {
    throw DataError("CoNLL-U path not found: " + path.string());
  }
  std::map<std::string, std::vector<DependencyTree>> out;
  for (const auto& f : files) {
    std::vector<DependencyTree> trees;
    try {
      trees = parse_conllu(read_file(f));
    } catch (const DataError& e) {
      throw DataError(f.string() + ": " + e.what());
    }
    for (auto& t : trees) {
      const std::string key = t.doc_id.empty() ? f.stem().string() : t.doc_id;
      out[key].push_back(std::move(t));
    }
  }
  return out;
}

std::vector<ParsedReview> attach_parses(const std::vector<ReviewRecord>& records,
                                        const std::map<std::string, std::vector<DependencyTree>>& parses) {
  std::vector<ParsedReview> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto it = parses.find(r.parse_ref);
    if (it == parses.end()) throw DataError("review " + std::to_string(i + 1) + ": unresolved parse_ref '" + r.parse_ref + "'");
    if (it->second.size() != r.sentences.size()) {
      throw DataError("review " + std::to_string(i + 1) + ": parse '" + r.parse_ref + "' has " +
                      std::to_string(it->second.size()) + " trees for " + std::to_string(r.sentences.size()) +
                      " sentences");
    }
    out.push_back({r, it->second});
  }
  return out;
}

EncodedExample encode_example(const TrainingExample& ex, const Bundle& bundle) {
  const HagConfig& cfg = bundle.config.model;
  EncodedExample e;
  e.user = ex.user_id;
  e.item = ex.item_id;
  e.user_idx = bundle.user_index(ex.user_id);
  e.item_idx = bundle.item_index(ex.item_id);
  e.rating = ex.rating;
  const std::size_t m = std::min(ex.gold_aspects.size(), cfg.aspects_per_example());
  e.gold_aspects.assign(ex.gold_aspects.begin(), ex.gold_aspects.begin() + static_cast<std::ptrdiff_t>(m));
  e.gold_explanations.assign(ex.gold_explanations.begin(), ex.gold_explanations.begin() + static_cast<std::ptrdiff_t>(m));
  for (std::size_t j = 0; j < m; ++j) {
    const auto& names = bundle.aspects.aspects;
    const auto it = std::find(names.begin(), names.end(), e.gold_aspects[j]);
    if (it == names.end()) throw DataError("gold aspect '" + e.gold_aspects[j] + "' is not in the aspect vocabulary");
    e.aspect_targets.push_back(kAspectOffset + static_cast<std::size_t>(it - names.begin()));
    auto words = bundle.vocab.encode(e.gold_explanations[j]);
    words.push_back(Vocabulary::kEos);
    e.explanation_targets.push_back(std::move(words));
  }
  if (cfg.mode == GenerationMode::kMulti && m < cfg.max_aspects) e.aspect_targets.push_back(kEosAspect);
  return e;
}

Bundle build_bundle(const std::vector<ParsedReview>& reviews, const RunConfig& config) {
  config.validate();
  const HagConfig& cfg = config.model;
  if (reviews.empty()) throw DataError("empty corpus");
  Bundle b;
  b.config = config;
  b.n_reviews = reviews.size();
  b.split = split(reviews.size(), config.seed);

  std::vector<ParsedReview> train;
  std::vector<ReviewRecord> train_records;
  for (std::size_t i : b.split.train) {
    train.push_back(reviews[i]);
    train_records.push_back(reviews[i].record);
  }
  b.aspects = build_aspect_vocab(train, cfg.max_aspect_vocab, cfg.compound_aspects);
  b.vocab = build_vocab(train_records, cfg.max_vocab);

  std::set<std::string> user_ids, item_ids;
  for (const auto& r : train_records) {
    user_ids.insert(r.user_id);
    item_ids.insert(r.item_id);
  }
  const NodeKey key = cfg.lemma_nodes ? NodeKey::kLemma : NodeKey::kForm;
  const std::vector<std::string> cold(cfg.n_aspects, std::string(kNoAspect));
  auto build_side = [&](const std::set<std::string>& ids, Side side, std::vector<std::string>& names,
                        std::vector<SyntaxGraph>& graphs, std::vector<std::vector<std::string>>& aspects) {
    names = {std::string(kColdStart)};
    graphs = {SyntaxGraph{}};
    aspects = {cold};
    for (const auto& id : ids) {
      std::vector<DependencyTree> trees;
      for (const auto& r : train) {
        if ((side == Side::kUser ? r.record.user_id : r.record.item_id) != id) continue;
        for (const auto& t : r.trees) trees.push_back(prune(t, cfg.prune));
      }
      names.push_back(id);
      graphs.push_back(canonicalize(cap_nodes(merge(trees, key), cfg.graph_cap)));
      aspects.push_back(extract_aspects(train, side, id, cfg.n_aspects, b.aspects, cfg.compound_aspects));
    }
  };
  build_side(user_ids, Side::kUser, b.users, b.user_graphs, b.user_aspects);
  build_side(item_ids, Side::kItem, b.items, b.item_graphs, b.item_aspects);

  std::set<std::string> labels;
  for (const auto* gs : {&b.user_graphs, &b.item_graphs})
    for (const auto& g : *gs)
      for (const auto& r : g.relations()) labels.insert(r);
  int next = 1;
  for (const auto& l : labels) b.relations[l] = next++;

  auto encode_split = [&](const std::vector<std::size_t>& idx, std::vector<EncodedExample>& out) {
    for (std::size_t i : idx) {
      if (auto ex = extract_targets(reviews[i].record, b.aspects, cfg.max_len())) out.push_back(encode_example(*ex, b));
    }
  };
  encode_split(b.split.train, b.train);
  encode_split(b.split.valid, b.valid);
  encode_split(b.split.test, b.test);
  b.prepare_inputs();
  return b;
}

Bundle build_bundle(const RunConfig& config) {
  if (config.reviews.empty()) throw ConfigError("no reviews file configured");
  if (config.conllu.empty()) throw ConfigError("no CoNLL-U path configured");
  const auto records = load_reviews(config.reviews);
  if (records.empty()) throw DataError("empty corpus: " + config.reviews);
  return build_bundle(attach_parses(records, load_parses(config.conllu)), config);
}

std::string format_stats(const DatasetStats& s) {
  std::ostringstream os;
  os.precision(6);
  os << "users\titems\treviews\taspects\ttrain\tvalid\ttest\tuser_nodes\titem_nodes\tuser_edges\titem_edges\n";
  os << s.users << '\t' << s.items << '\t' << s.reviews << '\t' << s.aspects << '\t' << s.train << '\t' << s.valid
     << '\t' << s.test << '\t' << s.mean_user_nodes << '\t' << s.mean_item_nodes << '\t' << s.mean_user_edges << '\t'
     << s.mean_item_edges << '\n';
  return os.str();
}

void save_bundle(const Bundle& b, const fs::path& dir) {
  fs::create_directories(dir / "graphs");
  write_file(dir / "config.conf", format_config(b.config));
  write_file(dir / "vocab.txt", join(b.vocab.tokens(), "\n") + "\n");
  write_file(dir / "aspects.tsv", format_aspect_vocab(b.aspects));
  std::string rel;
  for (const auto& [label, id] : b.relations) rel += label + "\t" + std::to_string(id) + "\n";
  write_file(dir / "relations.tsv", rel);
  write_file(dir / "split.txt", format_split_manifest(b.split));
  auto side = [&](const std::string& name, const std::vector<std::string>& ids, const std::vector<SyntaxGraph>& graphs,
                  const std::vector<std::vector<std::string>>& aspects) {
    std::string table;
    for (std::size_t i = 1; i < ids.size(); ++i) {
      table += std::to_string(i) + "\t" + ids[i] + "\t" + join(aspects[i], "|") + "\n";
      write_file(dir / "graphs" / (name + "_" + std::to_string(i) + ".txt"), serialize(graphs[i]));
    }
    write_file(dir / (name + "s.tsv"), table);
  };
  side("user", b.users, b.user_graphs, b.user_aspects);
  side("item", b.items, b.item_graphs, b.item_aspects);
  for (const auto& [name, exs] : {std::pair{"train", &b.train}, {"valid", &b.valid}, {"test", &b.test}}) {
    std::string text;
    for (const auto& e : *exs) text += example_json(e).dump() + "\n";
    write_file(dir / (std::string(name) + ".jsonl"), text);
  }
  write_file(dir / "stats.tsv", format_stats(b.stats()));
}

Bundle load_bundle(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("bundle directory not found: " + dir.string() + " (run preprocess first)");
  Bundle b;
  b.config = load_config((dir / "config.conf").string());
  auto words = lines_of(read_file(dir / "vocab.txt"));
  if (words.size() < Vocabulary::kReserved) throw DataError("vocab.txt is truncated");
  b.vocab = Vocabulary::from_words({words.begin() + Vocabulary::kReserved, words.end()});
  b.aspects = parse_aspect_vocab(read_file(dir / "aspects.tsv"));
  for (const auto& line : lines_of(read_file(dir / "relations.tsv"))) {
    const auto f = split_char(line, '\t');
    if (f.size() != 2) throw DataError("relations.tsv: bad line '" + line + "'");
    b.relations[f[0]] = std::stoi(f[1]);
  }
  b.split = parse_split_manifest(read_file(dir / "split.txt"));
  b.n_reviews = b.split.train.size() + b.split.valid.size() + b.split.test.size();

  const std::vector<std::string> cold(b.config.model.n_aspects, std::string(kNoAspect));
  auto side = [&](const std::string& name, std::vector<std::string>& ids, std::vector<SyntaxGraph>& graphs,
                  std::vector<std::vector<std::string>>& aspects) {
    ids = {std::string(kColdStart)};
    graphs = {SyntaxGraph{}};
    aspects = {cold};
    for (const auto& line : lines_of(read_file(dir / (name + "s.tsv")))) {
      const auto f = split_char(line, '\t');
      if (f.size() != 3 || f[0] != std::to_string(ids.size())) throw DataError(name + "s.tsv: bad line '" + line + "'");
      ids.push_back(f[1]);
      aspects.push_back(split_char(f[2], '|'));
      std::ifstream in(dir / "graphs" / (name + "_" + f[0] + ".txt"));
      if (!in) throw DataError("missing graph file for " + name + " " + f[0]);
      graphs.push_back(deserialize(in));
    }
  };
  side("user", b.users, b.user_graphs, b.user_aspects);
  side("item", b.items, b.item_graphs, b.item_aspects);

  for (const auto& [name, exs] : {std::pair{"train", &b.train}, {"valid", &b.valid}, {"test", &b.test}}) {
    std::size_t line_no = 0;
    for (const auto& line : lines_of(read_file(dir / (std::string(name) + ".jsonl")))) {
      ++line_no;
      TrainingExample ex;
      try {
        const auto j = nlohmann::json::parse(line);
        ex.user_id = j.at("user").get<std::string>();
        ex.item_id = j.at("item").get<std::string>();
        ex.rating = j.at("rating").get<double>();
        ex.gold_aspects = j.at("aspects").get<std::vector<std::string>>();
        ex.gold_explanations = j.at("explanations").get<std::vector<std::vector<std::string>>>();
      } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string(name) + ".jsonl line " + std::to_string(line_no) + ": " + e.what());
      }
      exs->push_back(encode_example(ex, b));
    }
  }
  b.prepare_inputs();
  return b;
}

Bundle load_bundle(const fs::path& dir, const RunConfig& config) {
  Bundle b = load_bundle(dir);
  for (const auto& key : bundle_keys()) {
    const auto have = get_config_value(b.config, key), want = get_config_value(config, key);
    if (have != want) {
      throw ConfigError("bundle in " + dir.string() + " was built with " + key + " = " + have + ", requested " + want +
                        "; re-run preprocess");
    }
  }
  b.config = config;
  return b;
}

}  // namespace hag
