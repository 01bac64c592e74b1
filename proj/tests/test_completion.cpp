#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "kromfac/completion.hpp"
#include "test_support.hpp"

using namespace kromfac;

namespace {

const std::vector<double> kTheta{0.9, 0.5, 0.5, 0.3};

NodeMapping identity_mapping(std::size_t n, std::size_t m) {
  NodeMapping map;
  for (std::size_t u = 0; u < n + m; ++u) map.sigma.push_back(u);
  map.observed_count = n;
  return map;
}

// Path 0-1 with two recovered nodes 2 and 3.
RecoveredGraph hand_example() {
  RecoveredGraph rg;
  rg.base = testing::path_graph(2);
  rg.missing = 2;
  rg.z1 = {{0, 2}, {1, 3}};
  rg.z2 = {{2, 3}};
  return rg;
}

Graph restrict_to_observed(const Graph& g, std::size_t n) {
  std::vector<NodeId> keep(n);
  for (NodeId u = 0; u < n; ++u) keep[u] = u;
  return induced_subgraph(g, keep).graph;
}

}  // namespace

TEST_CASE("as_graph on a hand-built recovered graph") {
  const auto rg = hand_example();
  const std::vector<NodeId> order{2};
  const Graph g = as_graph(rg, 1, order);
  CHECK(g.n() == 3);
  CHECK(g.edges() == std::vector<Edge>{{0, 1}, {0, 2}});

  SUBCASE("i = 0 is the base graph") {
    CHECK(as_graph(rg, 0, order) == rg.base);
    CHECK(as_graph(rg, 0, std::vector<NodeId>{}) == rg.base);
  }
  SUBCASE("i = M is the full graph") {
    const Graph full = rg.full();
    CHECK(full.n() == 4);
    CHECK(full.edges() == std::vector<Edge>{{0, 1}, {0, 2}, {1, 3}, {2, 3}});
  }
  SUBCASE("reordering renumbers recovered nodes") {
    const std::vector<NodeId> reversed{3, 2};
    const Graph one = as_graph(rg, 1, reversed);
    CHECK(one.edges() == std::vector<Edge>{{0, 1}, {1, 2}});
    const Graph two = as_graph(rg, 2, reversed);
    CHECK(two.edges() == std::vector<Edge>{{0, 1}, {0, 3}, {1, 2}, {2, 3}});
  }
  SUBCASE("bad orders") {
    CHECK_THROWS_AS(as_graph(rg, 2, order), std::invalid_argument);
    CHECK_THROWS_AS(as_graph(rg, 1, std::vector<NodeId>{1}), std::invalid_argument);
    CHECK_THROWS_AS(as_graph(rg, 1, std::vector<NodeId>{4}), std::invalid_argument);
    CHECK_THROWS_AS(as_graph(rg, 2, std::vector<NodeId>{2, 2}), std::invalid_argument);
  }
}

TEST_CASE("realize_missing with no missing nodes") {
  Rng rng(3);
  const Graph g = testing::random_graph(6, 0.4, rng);
  const KroneckerModel model(2, 3, kTheta);
  const auto rg = realize_missing(g, model, identity_mapping(6, 0), 0, 11);
  CHECK(rg.z1.empty());
  CHECK(rg.z2.empty());
  CHECK(rg.trials == 0);
  CHECK(rg.full() == g);
}

TEST_CASE("realize_missing covers the missing pairs of a 6 + 2 layout") {
  Rng rng(5);
  const Graph g = testing::random_graph(6, 0.5, rng);
  const KroneckerModel model(2, 3, kTheta);
  for (auto sampler : {BlockSampler::exhaustive, BlockSampler::grouped}) {
    const auto rg = realize_missing(g, model, identity_mapping(6, 2), 2, 99, sampler);
    CHECK(rg.trials == 13);
    CHECK(rg.base == g);
    for (const auto& [u, r] : rg.z1) {
      CHECK(u < 6);
      CHECK(r >= 6);
      CHECK(r < 8);
    }
    for (const auto& [r, s] : rg.z2) {
      CHECK(r == 6);
      CHECK(s == 7);
    }
  }
}

TEST_CASE("realize_missing rejects inconsistent mappings") {
  const Graph g = testing::path_graph(6);
  const KroneckerModel model(2, 3, kTheta);
  CHECK_THROWS_AS(realize_missing(g, model, identity_mapping(6, 1), 2, 1), std::invalid_argument);
  auto map = identity_mapping(6, 2);
  map.sigma[7] = 0;
  CHECK_THROWS_AS(realize_missing(g, model, map, 2, 1), std::invalid_argument);
  map.sigma[7] = 8;
  CHECK_THROWS_AS(realize_missing(g, model, map, 2, 1), std::invalid_argument);
}

TEST_CASE("floor-valued model realizes almost no edges") {
  const Graph g = testing::complete_graph(6);
  const KroneckerModel model(2, 3, std::vector<double>(4, kThetaFloor));
  std::size_t total = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto rg = realize_missing(g, model, identity_mapping(6, 2), 2, seed);
    total += rg.z1.size() + rg.z2.size();
  }
  CHECK(total <= 2);
}

TEST_CASE("realized edge frequency matches the Kronecker entry") {
  const Graph g = testing::path_graph(6);
  const KroneckerModel model(2, 3, kTheta);
  const double p = kron_entry(model, 0, 6);
  constexpr int kRuns = 10000;
  int hits = 0;
  for (std::uint64_t seed = 0; seed < kRuns; ++seed) {
    const auto rg = realize_missing(g, model, identity_mapping(6, 2), 2, seed);
    hits += std::find(rg.z1.begin(), rg.z1.end(), Edge{0, 6}) != rg.z1.end();
  }
  const double freq = static_cast<double>(hits) / kRuns;
  const double se = std::sqrt(p * (1 - p) / kRuns);
  CHECK(std::abs(freq - p) <= 3 * se);
}

TEST_CASE("as_graph grows monotonically and never touches the observed block") {
  Rng rng(17);
  const Graph g = testing::random_graph(20, 0.2, rng);
  const KroneckerModel model(2, 5, std::vector<double>{0.95, 0.6, 0.6, 0.35});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto rg = realize_missing(g, model, identity_mapping(20, 8), 8, seed);
    auto order = rg.recovered_ids();
    Rng shuffle(seed);
    std::shuffle(order.begin(), order.end(), shuffle.engine());
    Graph prev = as_graph(rg, 0, order);
    CHECK(prev == g);
    for (std::size_t i = 1; i <= 8; ++i) {
      const Graph next = as_graph(rg, i, order);
      CHECK(next.n() == 20 + i);
      CHECK(next.valid());
      for (const auto& [u, v] : prev.edges()) CHECK(next.has_edge(u, v));
      CHECK(restrict_to_observed(next, 20) == g);
      prev = next;
    }
  }
}

TEST_CASE("recovered graph text round trip") {
  Rng rng(2);
  const Graph g = testing::random_graph(10, 0.3, rng);
  const KroneckerModel model(2, 4, std::vector<double>{0.9, 0.7, 0.7, 0.4});
  const auto rg = realize_missing(g, model, identity_mapping(10, 5), 5, 8);
  std::stringstream buf;
  write_recovered(buf, rg);
  const auto back = read_recovered(buf);
  CHECK(back.base == rg.base);
  CHECK(back.missing == rg.missing);
  CHECK(back.z1 == rg.z1);
  CHECK(back.z2 == rg.z2);
  CHECK(back.trials == rg.trials);

  SUBCASE("isolated trailing nodes survive through the header") {
    RecoveredGraph sparse;
    sparse.base = Graph::from_edges(4, std::vector<Edge>{{0, 1}});
    sparse.missing = 1;
    std::stringstream s;
    write_recovered(s, sparse);
    CHECK(read_recovered(s).base.n() == 4);
  }
  SUBCASE("malformed input") {
    std::istringstream no_header("#BASE\n0 1\n");
    CHECK_THROWS_AS(read_recovered(no_header), ParseError);
    std::istringstream wrong_block("# nodes 2 missing 1\n#Z1\n0 1\n");
    CHECK_THROWS_AS(read_recovered(wrong_block), ParseError);
  }
}
