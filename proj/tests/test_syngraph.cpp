#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"

#include "hag/errors.hpp"
#include "hag/syngraph.hpp"

using namespace hag;

namespace {

const char* kTwoTokens =
    "1\ta\ta\tDET\t_\t_\t2\tdet\t_\t_\n"
    "2\tstory\tstory\tNOUN\t_\t_\t0\troot\t_\t_\n\n";

std::vector<DependencyTree> pair_trees() {
  return parse_conllu(fixture::read_file(std::string(HAG_SOURCE_DIR) + "/tests/data/merged_pair/reviews.conllu"));
}

}  // namespace

TEST_CASE("parse a two-token block") {
  const auto trees = parse_conllu(kTwoTokens);
  REQUIRE(trees.size() == 1);
  const auto& t = trees[0];
  CHECK(t.tokens[t.root].form == "story");
  REQUIRE(t.edges.size() == 1);
  CHECK(t.tokens[t.edges[0].head].form == "story");
  CHECK(t.edges[0].relation == "det");
  CHECK(t.tokens[t.edges[0].dependent].form == "a");
}

TEST_CASE("parse errors") {
  CHECK(parse_conllu("").empty());
  CHECK_THROWS_AS(parse_conllu("1\ta\ta\tDET\t_\t_\t0\troot\t_\t_\n2\tb\tb\tNOUN\t_\t_\t0\troot\t_\t_\n\n"), DataError);
  CHECK_THROWS_AS(parse_conllu("1\ta\ta\tDET\t_\t_\t2\tdet\t_\t_\n2\tb\tb\tNOUN\t_\t_\t1\tnsubj\t_\t_\n\n"), DataError);
  CHECK_THROWS_AS(parse_conllu("1\ta\ta\tDET\t_\t_\t7\tdet\t_\t_\n2\tb\tb\tNOUN\t_\t_\t0\troot\t_\t_\n\n"), DataError);
  try {
    parse_conllu("# c\n1\ta\ta\n");
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("multiword ranges and empty nodes are skipped") {
  const auto trees = parse_conllu(
      "1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n"
      "1\tdo\tdo\tAUX\t_\t_\t3\taux\t_\t_\n"
      "2\tn't\tnot\tPART\t_\t_\t3\tadvmod\t_\t_\n"
      "2.1\tx\tx\tX\t_\t_\t_\t_\t_\t_\n"
      "3\tgo\tgo\tVERB\t_\t_\t0\troot\t_\t_\n\n");
  REQUIRE(trees.size() == 1);
  CHECK(trees[0].tokens.size() == 3);
}

TEST_CASE("doc and sentence ids come from comments") {
  const auto trees = pair_trees();
  REQUIRE(trees.size() == 2);
  CHECK(trees[0].doc_id == "pair");
  CHECK(trees[1].sent_id == "pair-2");
}

TEST_CASE("prune removes the relation and isolated tokens") {
  const auto t = parse_conllu(kTwoTokens)[0];
  const auto p = prune(t, {"det"});
  CHECK(p.edges.empty());
  REQUIRE(p.tokens.size() == 1);
  CHECK(p.tokens[p.root].form == "story");

  const auto same = prune(t, {});
  CHECK(same.tokens.size() == t.tokens.size());
  CHECK(same.edges == t.edges);
}

TEST_CASE("merged graph of the two reviews") {
  std::vector<DependencyTree> pruned;
  for (const auto& t : pair_trees()) pruned.push_back(prune(t, default_prune_relations()));
  const SyntaxGraph g = merge(pruned);
  const std::size_t story = g.find("story");
  REQUIRE(story != SyntaxGraph::npos);
  CHECK(g.degree(story) == 2);
  for (const auto& e : g.edges())
    if (e.head == story || e.tail == story) CHECK(e.relation == "nmod:with");
  CHECK(g.nodes().size() == 5);

  const std::string golden = fixture::read_file(std::string(HAG_SOURCE_DIR) + "/tests/data/merged_pair/graph.txt");
  CHECK(serialize(canonicalize(g)) == golden);
}

TEST_CASE("merging is an idempotent union") {
  const auto t = pair_trees()[0];
  CHECK(serialize(merge({t, t})) == serialize(merge({t})));

  const auto a = parse_conllu("1\tx\tx\tNOUN\t_\t_\t0\troot\t_\t_\n2\ty\ty\tADJ\t_\t_\t1\tamod\t_\t_\n\n")[0];
  const auto b = parse_conllu("1\tp\tp\tNOUN\t_\t_\t0\troot\t_\t_\n2\tq\tq\tADJ\t_\t_\t1\tamod\t_\t_\n3\tr\tr\tADJ\t_\t_\t1\tamod\t_\t_\n\n")[0];
  const auto g = merge({a, b});
  CHECK(g.nodes().size() == 5);
  CHECK(g.edges().size() == 3);
}

TEST_CASE("merge by lemma joins inflections") {
  const auto a = parse_conllu("1\tTwists\ttwist\tNOUN\t_\t_\t0\troot\t_\t_\n2\tgood\tgood\tADJ\t_\t_\t1\tamod\t_\t_\n\n")[0];
  const auto b = parse_conllu("1\ttwist\ttwist\tNOUN\t_\t_\t0\troot\t_\t_\n2\tbad\tbad\tADJ\t_\t_\t1\tamod\t_\t_\n\n")[0];
  CHECK(merge({a, b}, NodeKey::kForm).nodes().size() == 4);
  CHECK(merge({a, b}, NodeKey::kLemma).nodes().size() == 3);
}

TEST_CASE("self edges are rejected") {
  SyntaxGraph g;
  const auto a = g.add_node("a");
  CHECK_THROWS_AS(g.add_edge(a, "amod", a), DataError);
  CHECK_THROWS_AS(g.add_edge(a, "amod", 9), DataError);
  const auto b = g.add_node("b");
  CHECK(g.add_edge(a, "amod", b));
  CHECK_FALSE(g.add_edge(a, "amod", b));
}

TEST_CASE("adjacency of a single edge and of a path") {
  SyntaxGraph g;
  const auto a = g.add_node("a"), b = g.add_node("b");
  g.add_edge(a, "amod", b);
  const auto v = adjacency(g, {{"amod", 3}});
  CHECK(v.a == std::vector<unsigned char>{0, 1, 1, 0});
  CHECK(v.rel[a * 2 + b] == 3);
  CHECK(v.rel[b * 2 + a] == 3);

  const auto c = g.add_node("c");
  g.add_edge(b, "nsubj", c);
  const auto p = adjacency(g, {});
  std::size_t ones = 0;
  for (auto x : p.a) ones += x;
  CHECK(ones == 4);
  CHECK(p.rel[b * 3 + c] == 0);
  CHECK(p.rel[a * 3 + c] == -1);
}

TEST_CASE("a reverse edge keeps its own relation") {
  SyntaxGraph g;
  const auto a = g.add_node("a"), b = g.add_node("b");
  g.add_edge(a, "amod", b);
  g.add_edge(b, "nsubj", a);
  const auto v = adjacency(g, {{"amod", 1}, {"nsubj", 2}});
  CHECK(v.rel[a * 2 + b] == 1);
  CHECK(v.rel[b * 2 + a] == 2);
}

TEST_CASE("canonical form is independent of insertion order") {
  SyntaxGraph g1, g2;
  g1.add_edge(g1.add_node("x"), "amod", g1.add_node("y"));
  g1.add_edge(g1.find("y"), "nsubj", g1.add_node("z"));
  const auto z = g2.add_node("z"), y = g2.add_node("y"), x = g2.add_node("x");
  g2.add_edge(y, "nsubj", z);
  g2.add_edge(x, "amod", y);
  CHECK(serialize(canonicalize(g1)) == serialize(canonicalize(g2)));
}

TEST_CASE("serialize and deserialize round trip") {
  std::vector<DependencyTree> trees = pair_trees();
  const SyntaxGraph g = canonicalize(merge(trees));
  std::istringstream in(serialize(g));
  CHECK(serialize(deserialize(in)) == serialize(g));
  std::istringstream bad("3 1\na\nb\n");
  CHECK_THROWS_AS(deserialize(bad), DataError);
}

TEST_CASE("cap keeps the highest-degree nodes") {
  SyntaxGraph g;
  const auto hub = g.add_node("hub");
  for (const char* w : {"a", "b", "c"}) g.add_edge(hub, "amod", g.add_node(w));
  g.add_edge(g.find("a"), "nsubj", g.find("b"));
  const auto capped = cap_nodes(g, 3);
  CHECK(capped.nodes() == std::vector<std::string>{"hub", "a", "b"});
  CHECK(capped.edges().size() == 3);
  CHECK(serialize(cap_nodes(g, 10)) == serialize(g));
}
