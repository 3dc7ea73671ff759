#include "hag/config.hpp"

#include <cmath>

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "hag/corpus.hpp"
#include "hag/errors.hpp"
#include "hag/syngraph.hpp"
#include "hag/text.hpp"

namespace hag {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::size_t to_size(std::string_view key, std::string_view v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("config key '" + std::string(key) + "': expected a non-negative integer, got '" + std::string(v) + "'");
  }
  return out;
}

double to_double(std::string_view key, std::string_view v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(std::string(v), &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + std::string(key) + "': expected a number, got '" + std::string(v) + "'");
  }
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw ConfigError("config key '" + std::string(key) + "': expected a boolean, got '" + std::string(v) + "'");
}

std::string fmt_double(double d) {
  std::ostringstream os;
  os.precision(17);
  os << d;
  return os.str();
}

struct Binding {
  const char* key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define SIZE_KEY(name, field)                                                           \
  Binding {                                                                             \
    name, [](RunConfig& c, std::string_view v) { c.field = to_size(name, v); },         \
        [](const RunConfig& c) { return std::to_string(c.field); }                      \
  }
#define DOUBLE_KEY(name, field)                                                         \
  Binding {                                                                             \
    name, [](RunConfig& c, std::string_view v) { c.field = to_double(name, v); },       \
        [](const RunConfig& c) { return fmt_double(c.field); }                          \
  }
#define BOOL_KEY(name, field)                                                           \
  Binding {                                                                             \
    name, [](RunConfig& c, std::string_view v) { c.field = to_bool(name, v); },         \
        [](const RunConfig& c) { return std::string(c.field ? "true" : "false"); }      \
  }
#define STRING_KEY(name, field)                                                         \
  Binding {                                                                             \
    name, [](RunConfig& c, std::string_view v) { c.field = std::string(v); },           \
        [](const RunConfig& c) { return c.field; }                                      \
  }

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> kBindings = {
      SIZE_KEY("d0", model.d0),
      SIZE_KEY("d1", model.d1),
      SIZE_KEY("d2", model.d2),
      SIZE_KEY("n_aspects", model.n_aspects),
      SIZE_KEY("pool_layers", model.pool_layers),
      DOUBLE_KEY("pool_ratio", model.pool_ratio),
      SIZE_KEY("fm_factors", model.fm_factors),
      SIZE_KEY("max_vocab", model.max_vocab),
      SIZE_KEY("max_aspect_vocab", model.max_aspect_vocab),
      SIZE_KEY("max_len_single", model.max_len_single),
      SIZE_KEY("max_len_multi", model.max_len_multi),
      SIZE_KEY("max_aspects", model.max_aspects),
      SIZE_KEY("graph_cap", model.graph_cap),
      Binding{"prune",
              [](RunConfig& c, std::string_view v) {
                c.model.prune.clear();
                std::string s(v);
                for (char& ch : s)
                  if (ch == ',') ch = ' ';
                for (auto& r : split_ws(s)) c.model.prune.insert(r);
              },
              [](const RunConfig& c) {
                std::string out;
                for (const auto& r : c.model.prune) out += (out.empty() ? "" : ",") + r;
                return out;
              }},
      BOOL_KEY("compound_aspects", model.compound_aspects),
      BOOL_KEY("lemma_nodes", model.lemma_nodes),
      BOOL_KEY("tie_node_embeddings", model.tie_node_embeddings),
      DOUBLE_KEY("leaky_slope", model.leaky_slope),
      Binding{"mode",
              [](RunConfig& c, std::string_view v) {
                if (v == "single") c.model.mode = GenerationMode::kSingle;
                else if (v == "multi") c.model.mode = GenerationMode::kMulti;
                else throw ConfigError("config key 'mode': expected single or multi, got '" + std::string(v) + "'");
              },
              [](const RunConfig& c) { return std::string(c.model.mode == GenerationMode::kSingle ? "single" : "multi"); }},
      BOOL_KEY("no_agp", model.no_agp),
      BOOL_KEY("gat_only", model.gat_only),
      BOOL_KEY("no_relation", model.no_relation),
      SIZE_KEY("epochs", train.epochs),
      DOUBLE_KEY("lr", train.lr),
      SIZE_KEY("batch", train.batch),
      DOUBLE_KEY("clip_norm", train.clip_norm),
      DOUBLE_KEY("w_aspect", train.w_aspect),
      DOUBLE_KEY("w_explanation", train.w_explanation),
      DOUBLE_KEY("w_rating", train.w_rating),
      Binding{"seed", [](RunConfig& c, std::string_view v) { c.seed = to_size("seed", v); },
              [](const RunConfig& c) { return std::to_string(c.seed); }},
      STRING_KEY("reviews", reviews),
      STRING_KEY("conllu", conllu),
      STRING_KEY("workdir", workdir),
  };
  return kBindings;
}

#undef SIZE_KEY
#undef DOUBLE_KEY
#undef BOOL_KEY
#undef STRING_KEY

const Binding& find_binding(std::string_view key) {
  for (const auto& b : bindings())
    if (key == b.key) return b;
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

}  // namespace

void HagConfig::validate() const {
  if (!(pool_ratio > 0.0 && pool_ratio <= 1.0)) throw ConfigError("pool_ratio must be in (0, 1]");
  if (pool_layers < 1) throw ConfigError("pool_layers must be >= 1");
  if (n_aspects < 1) throw ConfigError("n_aspects must be >= 1");
  if (d0 < 1 || d1 < 1 || d2 < 1 || fm_factors < 1) throw ConfigError("dimensions must be >= 1");
  if (max_vocab < 5) throw ConfigError("max_vocab must be >= 5");
  if (max_aspects < 1 || max_len_single < 2 || max_len_multi < 2) throw ConfigError("length limits too small");
  if (graph_cap < 1) throw ConfigError("graph_cap must be >= 1");
  if (no_agp && gat_only) throw ConfigError("no_agp and gat_only are mutually exclusive");
  if (tie_node_embeddings && d0 != d1) throw ConfigError("tie_node_embeddings requires d0 == d1");
  if (!std::isfinite(leaky_slope)) throw ConfigError("leaky_slope must be finite");
}

void TrainConfig::validate() const {
  if (batch < 1) throw ConfigError("batch must be >= 1");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be finite and >= 0");
  if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be > 0");
  for (double w : {w_aspect, w_explanation, w_rating})
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("loss weights must be finite and >= 0");
}

void RunConfig::validate() const {
  model.validate();
  train.validate();
}

void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value) {
  find_binding(key).set(cfg, trim(value));
}

std::string get_config_value(const RunConfig& cfg, std::string_view key) { return find_binding(key).get(cfg); }

RunConfig parse_config(std::string_view text, RunConfig base) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    set_config_value(base, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return base;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string format_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& b : bindings()) out += std::string(b.key) + " = " + b.get(cfg) + "\n";
  return out;
}

}  // namespace hag
