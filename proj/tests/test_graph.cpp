#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <sstream>

#include "kromfac/graph.hpp"
#include "test_support.hpp"

using namespace kromfac;

namespace {
LoadedGraph parse(const std::string& text) {
  std::istringstream in(text);
  return load_edge_list(in);
}

std::vector<std::size_t> degrees(const Graph& g) {
  std::vector<std::size_t> d;
  for (NodeId u = 0; u < g.n(); ++u) d.push_back(g.degree(u));
  return d;
}
}  // namespace

TEST_CASE("load_edge_list parses a path") {
  auto loaded = parse("0 1\n1 2");
  CHECK(loaded.graph.n() == 3);
  CHECK(loaded.graph.edge_count() == 2);
  CHECK(loaded.graph.has_edge(loaded.ids.id("0"), loaded.ids.id("1")));
  CHECK(loaded.graph.has_edge(loaded.ids.id("1"), loaded.ids.id("2")));
  CHECK_FALSE(loaded.graph.has_edge(loaded.ids.id("0"), loaded.ids.id("2")));
  CHECK(loaded.graph.valid());
}

TEST_CASE("load_edge_list collapses reversed duplicates and skips comments") {
  auto loaded = parse("a b\nb a\n# c");
  CHECK(loaded.graph.n() == 2);
  CHECK(loaded.graph.edge_count() == 1);
  CHECK_FALSE(loaded.ids.contains("c"));
}

TEST_CASE("load_edge_list drops self-loops with a count") {
  auto loaded = parse("0 0\n0 1");
  CHECK(loaded.graph.edge_count() == 1);
  CHECK(loaded.dropped_self_loops == 1);
}

TEST_CASE("load_edge_list reports the offending line") {
  try {
    parse("0 1\n\n2 3 4\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse("0\n"), ParseError);
}

TEST_CASE("edge list round-trips with identical degree sequence") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Graph g = testing::random_graph(30, 0.15, rng);
    std::ostringstream out;
    write_edge_list(out, g);
    std::istringstream in(out.str());
    auto back = load_edge_list(in);
    // Isolated nodes do not appear in an edge list.
    std::vector<std::size_t> a = degrees(g), b = degrees(back.graph);
    std::erase(a, 0);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
    CHECK(back.graph.edge_count() == g.edge_count());
    // Relabelled through the id map, the edge sets coincide.
    for (const auto& [u, v] : back.graph.edges()) {
      CHECK(g.has_edge(std::stoul(back.ids.label(u)), std::stoul(back.ids.label(v))));
    }
  }
}

TEST_CASE("write_edge_list emits sorted external labels") {
  auto loaded = parse("x y\ny z\nx z\n");
  std::ostringstream out;
  write_edge_list(out, loaded.graph, &loaded.ids);
  CHECK(out.str() == "x y\nx z\ny z\n");
}

TEST_CASE("induced_subgraph examples") {
  const Graph triangle = testing::complete_graph(3);
  const std::vector<NodeId> keep01{0, 1};
  auto sub = induced_subgraph(triangle, keep01);
  CHECK(sub.graph.n() == 2);
  CHECK(sub.graph.edge_count() == 1);
  CHECK(sub.graph.has_edge(0, 1));

  const std::vector<NodeId> all{0, 1, 2};
  auto same = induced_subgraph(triangle, all);
  CHECK(same.graph == triangle);
  CHECK(same.original == all);

  const std::vector<NodeId> ends{0, 2};
  auto apart = induced_subgraph(testing::path_graph(3), ends);
  CHECK(apart.graph.n() == 2);
  CHECK(apart.graph.edge_count() == 0);

  const std::vector<NodeId> bad{0, 5};
  CHECK_THROWS_AS(induced_subgraph(triangle, bad), std::invalid_argument);
}

TEST_CASE("induced_subgraph never gains edges or degree") {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const Graph g = testing::random_graph(25, 0.2, rng);
    std::vector<NodeId> keep;
    for (NodeId u = 0; u < g.n(); ++u)
      if (rng.bernoulli(0.6)) keep.push_back(u);
    auto sub = induced_subgraph(g, keep);
    CHECK(sub.graph.valid());
    CHECK(sub.graph.edge_count() <= g.edge_count());
    bool covers_every_edge = true;
    for (const auto& [u, v] : g.edges()) {
      const bool in_u = std::binary_search(keep.begin(), keep.end(), u);
      const bool in_v = std::binary_search(keep.begin(), keep.end(), v);
      covers_every_edge = covers_every_edge && in_u && in_v;
    }
    CHECK((sub.graph.edge_count() == g.edge_count()) == covers_every_edge);
    for (NodeId i = 0; i < sub.graph.n(); ++i) {
      CHECK(sub.graph.degree(i) <= g.degree(sub.original[i]));
    }
  }
}

TEST_CASE("from_edges rejects out-of-range ids") {
  const std::vector<Edge> edges{{0, 3}};
  CHECK_THROWS_AS(Graph::from_edges(3, edges), std::invalid_argument);
}
