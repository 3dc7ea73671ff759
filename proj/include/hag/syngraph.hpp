#pragma once

// Review-based syntax graphs: CoNLL-U dependency trees are pruned of
// low-information relations and merged so that identical words across
// sentences and reviews become a single node.

#include <cstddef>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace hag {

struct DepToken {
  std::string form;
  std::string lemma;
  std::string upos;
};

struct DepEdge {
  std::size_t head = 0;  // token index
  std::string relation;
  std::size_t dependent = 0;

  bool operator==(const DepEdge&) const = default;
};

struct DependencyTree {
  std::vector<DepToken> tokens;
  std::vector<DepEdge> edges;
  std::size_t root = 0;
  std::string doc_id;   // from the most recent "# review_id =" / "# newdoc id =" comment
  std::string sent_id;  // from "# sent_id ="
};

// Parses a CoNLL-U document. Multiword-token ranges (1-2) and empty nodes
// (1.1) are skipped. Throws DataError on a malformed line (with its line
// number), on multiple roots and on cyclic or out-of-range heads.
std::vector<DependencyTree> parse_conllu(std::string_view text);

// Removes edges whose relation is in `drop`, then every token left without an
// incident edge. The root always survives.
DependencyTree prune(const DependencyTree& tree, const std::set<std::string>& drop);

const std::set<std::string>& default_prune_relations();

enum class NodeKey { kForm, kLemma };

struct GraphEdge {
  std::size_t head = 0;  // node index
  std::string relation;
  std::size_t tail = 0;

  auto operator<=>(const GraphEdge&) const = default;
};

class SyntaxGraph {
 public:
  // Returns the node index, adding the word if it is new.
  std::size_t add_node(const std::string& word);
  // Adds (head, relation, tail) unless already present. Throws DataError on
  // a self-edge or unknown endpoint. Returns true if the edge was new.
  bool add_edge(std::size_t head, const std::string& relation, std::size_t tail);

  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::vector<GraphEdge>& edges() const { return edges_; }
  std::set<std::string> relations() const;
  std::size_t find(const std::string& word) const;  // npos if absent
  std::size_t degree(std::size_t node) const;
  bool empty() const { return nodes_.empty(); }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<std::string> nodes_;
  std::map<std::string, std::size_t> index_;
  std::vector<GraphEdge> edges_;
  std::set<GraphEdge> edge_set_;
};

// Union of the trees with words merged by lowercase form (or lemma). Node
// order is first appearance; self-loops between identical words are dropped.
SyntaxGraph merge(const std::vector<DependencyTree>& trees, NodeKey key = NodeKey::kForm);

// Nodes sorted lexicographically, edges sorted by (head, relation, tail).
SyntaxGraph canonicalize(const SyntaxGraph& graph);

// Keeps the `max_nodes` highest-degree nodes (earlier node wins ties) and the
// edges among them, preserving node order.
SyntaxGraph cap_nodes(const SyntaxGraph& graph, std::size_t max_nodes);

// Line format: "|X| |E|", one node per line, then "head_idx relation tail_idx".
std::string serialize(const SyntaxGraph& graph);
SyntaxGraph deserialize(std::istream& in);

struct AdjacencyView {
  std::size_t n = 0;
  std::vector<unsigned char> a;  // n x n, symmetric, zero diagonal
  std::vector<int> rel;          // n x n relation id per ordered pair, -1 if no edge

  bool connected(std::size_t h, std::size_t t) const { return a[h * n + t] != 0; }
};

// Relation ids come from `relation_ids`; labels missing from it map to
// `unknown_id`. For an edge (h, r, t) the pair (h, t) carries r, and (t, h)
// carries r too unless the graph has its own edge from t to h.
AdjacencyView adjacency(const SyntaxGraph& graph, const std::map<std::string, int>& relation_ids,
                        int unknown_id = 0);

}  // namespace hag
