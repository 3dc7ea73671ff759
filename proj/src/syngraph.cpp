#include "hag/syngraph.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <sstream>

#include "hag/errors.hpp"
#include "hag/text.hpp"

namespace hag {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      cols.push_back(line.substr(start));
      break;
    }
    cols.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return cols;
}

bool parse_size(std::string_view s, std::size_t& out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

std::string comment_value(std::string_view line, std::string_view key) {
  // "# key = value"
  std::string_view body = line.substr(1);
  while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
  if (body.substr(0, key.size()) != key) return {};
  body.remove_prefix(key.size());
  while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
  if (body.empty() || body.front() != '=') return {};
  body.remove_prefix(1);
  while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
  while (!body.empty() && (body.back() == ' ' || body.back() == '\r')) body.remove_suffix(1);
  return std::string(body);
}

struct PendingRow {
  DepToken token;
  std::size_t head = 0;  // 1-based, 0 = root
  std::string relation;
};

DependencyTree finish_block(std::vector<PendingRow>& rows, std::size_t first_line, const std::string& doc_id,
                            const std::string& sent_id) {
  const std::string where = "CoNLL-U sentence starting at line " + std::to_string(first_line);
  DependencyTree tree;
  tree.doc_id = doc_id;
  tree.sent_id = sent_id;
  std::size_t roots = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    tree.tokens.push_back(rows[i].token);
    if (rows[i].head == 0) {
      ++roots;
      tree.root = i;
    } else if (rows[i].head > rows.size()) {
      throw DataError(where + ": head " + std::to_string(rows[i].head) + " out of range");
    } else {
      tree.edges.push_back({rows[i].head - 1, rows[i].relation, i});
    }
  }
  if (roots != 1) throw DataError(where + ": expected exactly one root, found " + std::to_string(roots));
  // Every token must reach the root by following heads.
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::size_t cur = i, steps = 0;
    while (rows[cur].head != 0) {
      cur = rows[cur].head - 1;
      if (++steps > rows.size()) throw DataError(where + ": cyclic heads");
    }
  }
  rows.clear();
  return tree;
}

}  // namespace

std::vector<DependencyTree> parse_conllu(std::string_view text) {
  std::vector<DependencyTree> trees;
  std::vector<PendingRow> rows;
  std::string doc_id, sent_id;
  std::size_t line_no = 0, block_start = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (line.empty()) {
      if (!rows.empty()) trees.push_back(finish_block(rows, block_start, doc_id, sent_id));
      sent_id.clear();
      if (nl == text.size()) break;
      continue;
    }
    if (line.front() == '#') {
      if (auto v = comment_value(line, "review_id"); !v.empty()) doc_id = v;
      else if (auto d = comment_value(line, "newdoc id"); !d.empty()) doc_id = d;
      else if (auto s = comment_value(line, "sent_id"); !s.empty()) sent_id = s;
      continue;
    }
    const auto cols = split_tabs(line);
    if (cols.size() != 10) {
      throw DataError("CoNLL-U line " + std::to_string(line_no) + ": expected 10 columns, found " +
                      std::to_string(cols.size()));
    }
    if (cols[0].find('-') != std::string_view::npos || cols[0].find('.') != std::string_view::npos) continue;
    std::size_t id = 0, head = 0;
    if (!parse_size(cols[0], id) || id != rows.size() + 1) {
      throw DataError("CoNLL-U line " + std::to_string(line_no) + ": bad token id '" + std::string(cols[0]) + "'");
    }
    if (!parse_size(cols[6], head)) {
      throw DataError("CoNLL-U line " + std::to_string(line_no) + ": bad head '" + std::string(cols[6]) + "'");
    }
    if (rows.empty()) block_start = line_no;
    rows.push_back({{std::string(cols[1]), std::string(cols[2]), std::string(cols[3])}, head, std::string(cols[7])});
  }
  if (!rows.empty()) trees.push_back(finish_block(rows, block_start, doc_id, sent_id));
  return trees;
}

const std::set<std::string>& default_prune_relations() {
  static const std::set<std::string> kDrop{"det", "punct", "nmod:poss", "case", "cc", "mark"};
  return kDrop;
}

DependencyTree prune(const DependencyTree& tree, const std::set<std::string>& drop) {
  std::vector<DepEdge> kept;
  std::vector<bool> touched(tree.tokens.size(), false);
  for (const auto& e : tree.edges) {
    if (drop.count(e.relation)) continue;
    kept.push_back(e);
    touched[e.head] = touched[e.dependent] = true;
  }
  touched[tree.root] = true;

  std::vector<std::size_t> remap(tree.tokens.size(), SyntaxGraph::npos);
  DependencyTree out;
  out.doc_id = tree.doc_id;
  out.sent_id = tree.sent_id;
  for (std::size_t i = 0; i < tree.tokens.size(); ++i) {
    if (!touched[i]) continue;
    remap[i] = out.tokens.size();
    out.tokens.push_back(tree.tokens[i]);
  }
  out.root = remap[tree.root];
  for (auto& e : kept) out.edges.push_back({remap[e.head], e.relation, remap[e.dependent]});
  return out;
}

// ---- SyntaxGraph ------------------------------------------------------------

std::size_t SyntaxGraph::add_node(const std::string& word) {
  auto [it, inserted] = index_.try_emplace(word, nodes_.size());
  if (inserted) nodes_.push_back(word);
  return it->second;
}

bool SyntaxGraph::add_edge(std::size_t head, const std::string& relation, std::size_t tail) {
  if (head >= nodes_.size() || tail >= nodes_.size()) throw DataError("syntax graph edge endpoint out of range");
  if (head == tail) throw DataError("syntax graph self-edge on '" + nodes_[head] + "' (" + relation + ")");
  GraphEdge e{head, relation, tail};
  if (!edge_set_.insert(e).second) return false;
  edges_.push_back(std::move(e));
  return true;
}

std::set<std::string> SyntaxGraph::relations() const {
  std::set<std::string> r;
  for (const auto& e : edges_) r.insert(e.relation);
  return r;
}

std::size_t SyntaxGraph::find(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? npos : it->second;
}

std::size_t SyntaxGraph::degree(std::size_t node) const {
  std::size_t d = 0;
  for (const auto& e : edges_) d += (e.head == node) + (e.tail == node);
  return d;
}

SyntaxGraph merge(const std::vector<DependencyTree>& trees, NodeKey key) {
  SyntaxGraph g;
  for (const auto& tree : trees) {
    std::vector<std::size_t> ids;
    ids.reserve(tree.tokens.size());
    for (const auto& tok : tree.tokens) ids.push_back(g.add_node(to_lower(key == NodeKey::kForm ? tok.form : tok.lemma)));
    for (const auto& e : tree.edges) {
      if (ids[e.head] == ids[e.dependent]) continue;
      g.add_edge(ids[e.head], e.relation, ids[e.dependent]);
    }
  }
  return g;
}

namespace {
SyntaxGraph rebuild(const SyntaxGraph& graph, const std::vector<std::size_t>& order) {
  // order: old node indices in their new order
  std::vector<std::size_t> remap(graph.nodes().size(), SyntaxGraph::npos);
  SyntaxGraph out;
  for (std::size_t old : order) remap[old] = out.add_node(graph.nodes()[old]);
  for (const auto& e : graph.edges()) {
    if (remap[e.head] == SyntaxGraph::npos || remap[e.tail] == SyntaxGraph::npos) continue;
    out.add_edge(remap[e.head], e.relation, remap[e.tail]);
  }
  return out;
}
}  // namespace

SyntaxGraph canonicalize(const SyntaxGraph& graph) {
  std::vector<std::size_t> order(graph.nodes().size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return graph.nodes()[a] < graph.nodes()[b]; });
  SyntaxGraph tmp = rebuild(graph, order);
  std::vector<GraphEdge> edges = tmp.edges();
  std::sort(edges.begin(), edges.end());
  SyntaxGraph out;
  for (const auto& w : tmp.nodes()) out.add_node(w);
  for (const auto& e : edges) out.add_edge(e.head, e.relation, e.tail);
  return out;
}

SyntaxGraph cap_nodes(const SyntaxGraph& graph, std::size_t max_nodes) {
  const std::size_t n = graph.nodes().size();
  if (n <= max_nodes) return graph;
  std::vector<std::size_t> deg(n, 0);
  for (const auto& e : graph.edges()) {
    ++deg[e.head];
    ++deg[e.tail];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return deg[a] > deg[b]; });
  order.resize(max_nodes);
  std::sort(order.begin(), order.end());
  return rebuild(graph, order);
}

std::string serialize(const SyntaxGraph& graph) {
  std::ostringstream os;
  os << graph.nodes().size() << ' ' << graph.edges().size() << '\n';
  for (const auto& w : graph.nodes()) os << w << '\n';
  for (const auto& e : graph.edges()) os << e.head << ' ' << e.relation << ' ' << e.tail << '\n';
  return os.str();
}

SyntaxGraph deserialize(std::istream& in) {
  std::size_t n = 0, m = 0;
  if (!(in >> n >> m)) throw DataError("graph: missing '|X| |E|' header");
  SyntaxGraph g;
  for (std::size_t i = 0; i < n; ++i) {
    std::string w;
    if (!(in >> w)) throw DataError("graph: expected " + std::to_string(n) + " node lines");
    if (g.add_node(w) != i) throw DataError("graph: duplicate node '" + w + "'");
  }
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t h = 0, t = 0;
    std::string r;
    if (!(in >> h >> r >> t)) throw DataError("graph: expected " + std::to_string(m) + " edge lines");
    if (!g.add_edge(h, r, t)) throw DataError("graph: duplicate edge");
  }
  return g;
}

AdjacencyView adjacency(const SyntaxGraph& graph, const std::map<std::string, int>& relation_ids, int unknown_id) {
  if (graph.empty()) throw DataError("adjacency: empty graph");
  AdjacencyView v;
  v.n = graph.nodes().size();
  v.a.assign(v.n * v.n, 0);
  v.rel.assign(v.n * v.n, -1);
  auto id_of = [&](const std::string& r) {
    auto it = relation_ids.find(r);
    return it == relation_ids.end() ? unknown_id : it->second;
  };
  // Directed edges first so they take precedence over mirrored ones.
  for (const auto& e : graph.edges()) {
    const std::size_t ht = e.head * v.n + e.tail;
    if (v.rel[ht] < 0) v.rel[ht] = id_of(e.relation);
    v.a[ht] = 1;
  }
  for (const auto& e : graph.edges()) {
    const std::size_t th = e.tail * v.n + e.head;
    if (v.rel[th] < 0) v.rel[th] = id_of(e.relation);
    v.a[th] = 1;
  }
  return v;
}

}  // namespace hag
