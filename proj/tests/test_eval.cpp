#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "kromfac/eval.hpp"
#include "kromfac/io.hpp"
#include "test_support.hpp"

using namespace kromfac;

namespace {

Cover random_cover(std::size_t n, Rng& rng) {
  Cover c;
  c.universe = n;
  const std::size_t k = 1 + rng.below(5);
  for (std::size_t j = 0; j < k; ++j) {
    auto& comm = c.communities.emplace_back();
    const double p = rng.uniform(0.05, 0.6);
    for (NodeId u = 0; u < n; ++u)
      if (rng.bernoulli(p)) comm.push_back(u);
  }
  return c;
}

// Reference entropy terms computed from explicit joint counts.
double h(double p) { return p > 0 ? -p * std::log(p) : 0.0; }

double ref_side(const Cover& x, const Cover& y) {
  const double n = static_cast<double>(x.universe);
  double total = 0.0;
  int counted = 0;
  for (const auto& xk : x.communities) {
    std::vector<int> in_x(x.universe, 0);
    for (NodeId u : xk) in_x[u] = 1;
    const double px = xk.size() / n;
    const double hx = h(px) + h(1 - px);
    if (hx == 0.0) continue;
    double best = hx;
    for (const auto& yl : y.communities) {
      std::vector<int> in_y(x.universe, 0);
      for (NodeId u : yl) in_y[u] = 1;
      double joint[2][2] = {{0, 0}, {0, 0}};
      for (std::size_t u = 0; u < x.universe; ++u) joint[in_x[u]][in_y[u]] += 1.0 / n;
      if (h(joint[1][1]) + h(joint[0][0]) <= h(joint[1][0]) + h(joint[0][1])) continue;
      const double py = yl.size() / n;
      const double hxy = h(joint[0][0]) + h(joint[0][1]) + h(joint[1][0]) + h(joint[1][1]);
      best = std::min(best, hxy - (h(py) + h(1 - py)));
    }
    total += best / hx;
    ++counted;
  }
  return counted ? total / counted : -1.0;
}

double tail_exponent(const Graph& g) {
  std::vector<std::size_t> deg(g.n());
  for (NodeId u = 0; u < g.n(); ++u) deg[u] = g.degree(u);
  std::sort(deg.begin(), deg.end());
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < deg.size(); ++k) {
    if (deg[k] == 0 || (k > 0 && deg[k] == deg[k - 1])) continue;
    const double ccdf = static_cast<double>(deg.size() - k) / deg.size();
    xs.push_back(std::log(static_cast<double>(deg[k])));
    ys.push_back(std::log(ccdf));
  }
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxy += (xs[k] - mx) * (ys[k] - my);
    sxx += (xs[k] - mx) * (xs[k] - mx);
  }
  return sxy / sxx;
}

// Preferential attachment with 2 edges per new node.
Graph heavy_tailed(std::size_t n, Rng& rng) {
  std::vector<Edge> edges{{0, 1}, {1, 2}, {0, 2}};
  std::vector<NodeId> ends{0, 1, 1, 2, 0, 2};
  for (NodeId u = 3; u < n; ++u) {
    for (int t = 0; t < 2; ++t) {
      const NodeId v = ends[rng.below(ends.size())];
      edges.emplace_back(v, u);
      ends.push_back(u);
      ends.push_back(v);
    }
  }
  return Graph::from_edges(n, edges);
}

bool connected(const Graph& g) {
  if (g.n() == 0) return true;
  std::vector<bool> seen(g.n());
  std::queue<NodeId> q;
  q.push(0);
  seen[0] = true;
  std::size_t count = 1;
  while (!q.empty()) {
    const NodeId u = q.front();
    q.pop();
    for (NodeId v : g.neighbors(u))
      if (!seen[v]) {
        seen[v] = true;
        ++count;
        q.push(v);
      }
  }
  return count == g.n();
}

}  // namespace

TEST_CASE("nmi hand cases") {
  Rng rng(1);
  const Cover x = random_cover(30, rng);
  CHECK(nmi(x, x) == 1.0);

  Cover halves{{{}, {}}, 40};
  Cover whole{{{}}, 40};
  for (NodeId u = 0; u < 40; ++u) {
    halves.communities[u < 20 ? 0 : 1].push_back(u);
    whole.communities[0].push_back(u);
  }
  CHECK(nmi(halves, whole) < 0.1);

  const Cover a{{{0, 1}}, 4};
  const Cover b{{{0, 1, 2}}, 4};
  const double expected = 1.0 - 0.5 * (ref_side(a, b) + ref_side(b, a));
  CHECK(nmi(a, b) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(nmi(a, b) > 0.0);
  CHECK(nmi(a, b) < 1.0);

  CHECK_THROWS_AS(nmi(a, Cover{{{0}}, 5}), std::invalid_argument);
  CHECK_THROWS_AS(nmi(a, Cover{{{7}}, 4}), std::invalid_argument);

  SUBCASE("degenerate covers") {
    const Cover empty{{{}}, 4};
    const Cover full{{{0, 1, 2, 3}}, 4};
    CHECK(nmi(empty, empty) == 1.0);
    CHECK(nmi(empty, full) == 0.0);
    CHECK(nmi(full, a) == 0.0);
  }
}

TEST_CASE("nmi matches the reference on random covers") {
  Rng rng(7);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 5 + rng.below(36);
    const Cover x = random_cover(n, rng), y = random_cover(n, rng);
    const double rx = ref_side(x, y), ry = ref_side(y, x);
    if (rx < 0 || ry < 0) continue;
    CHECK(nmi(x, y) == doctest::Approx(1.0 - 0.5 * (rx + ry)).epsilon(1e-12));
  }
}

TEST_CASE("nmi axioms") {
  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + rng.below(39);
    Cover x = random_cover(n, rng), y = random_cover(n, rng);
    const double s = nmi(x, y);
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
    CHECK(s == nmi(y, x));
    std::reverse(x.communities.begin(), x.communities.end());
    std::rotate(y.communities.begin(), y.communities.begin() + 1, y.communities.end());
    CHECK(nmi(x, y) == s);
    if (nmi(x, x) != 1.0) {
      // Only covers made entirely of empty or full communities are exempt.
      for (const auto& c : x.communities) CHECK((c.empty() || c.size() == n));
    }
  }
}

TEST_CASE("sample_size") {
  CHECK(sample_size(10, 0.7) == 7);
  CHECK(sample_size(10, 0.71) == 8);
  CHECK(sample_size(10, 1.0) == 10);
  CHECK(sample_size(3, 0.1) == 1);
  CHECK(sample_size(0, 0.5) == 0);
}

TEST_CASE("rn_sample") {
  Rng rng(3);
  const Graph g = testing::random_graph(10, 0.4, rng);
  const auto all = rn_sample(g, {SampleStrategy::rn, 1.0, 0.7, 5});
  CHECK(all.graph == g);
  CHECK(all.kept.size() == 10);
  const auto part = rn_sample(g, {SampleStrategy::rn, 0.7, 0.7, 5});
  CHECK(part.kept.size() == 7);
  CHECK(std::is_sorted(part.kept.begin(), part.kept.end()));
  CHECK(part.graph == induced_subgraph(g, part.kept).graph);
  CHECK_THROWS_AS(rn_sample(g, {SampleStrategy::rn, 0.0, 0.7, 5}), std::invalid_argument);
  CHECK_THROWS_AS(rn_sample(g, {SampleStrategy::rn, 1.5, 0.7, 5}), std::invalid_argument);

  const Graph twenty = testing::path_graph(20);
  constexpr int kSeeds = 2000;
  std::vector<int> hits(20);
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed)
    for (NodeId u : rn_sample(twenty, {SampleStrategy::rn, 0.7, 0.7, seed}).kept) ++hits[u];
  const double se = std::sqrt(0.7 * 0.3 / kSeeds);
  for (int count : hits) CHECK(std::abs(count / double(kSeeds) - 0.7) <= 3 * se);
}

TEST_CASE("ff_sample") {
  Rng rng(5);
  const Graph g = heavy_tailed(200, rng);
  const auto all = ff_sample(g, {SampleStrategy::ff, 1.0, 0.7, 3});
  CHECK(all.kept.size() == 200);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = ff_sample(g, {SampleStrategy::ff, 0.7, 0.7, seed});
    CHECK(s.kept.size() == 140);
    CHECK(s.graph == induced_subgraph(g, s.kept).graph);
    CHECK(s.kept == ff_sample(g, {SampleStrategy::ff, 0.7, 0.7, seed}).kept);
    // A fire that never dies out stays in one connected region.
    CHECK(connected(ff_sample(g, {SampleStrategy::ff, 0.7, 0.999999, seed}).graph));
  }
  CHECK_THROWS_AS(ff_sample(g, {SampleStrategy::ff, 0.7, 1.0, 3}), std::invalid_argument);
  CHECK_THROWS_AS(ff_sample(g, {SampleStrategy::ff, 0.7, 0.0, 3}), std::invalid_argument);

  SUBCASE("disconnected graphs are reseeded") {
    const Graph islands = testing::two_cliques(5);
    CHECK(ff_sample(islands, {SampleStrategy::ff, 0.9, 0.7, 1}).kept.size() == 9);
  }
}

TEST_CASE("forest fire keeps the degree tail closer than uniform sampling") {
  int closer = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed + 100);
    const Graph g = heavy_tailed(1000, rng);
    const double original = tail_exponent(g);
    const double ff = tail_exponent(ff_sample(g, {SampleStrategy::ff, 0.7, 0.7, seed}).graph);
    const double rn = tail_exponent(rn_sample(g, {SampleStrategy::rn, 0.7, 0.7, seed}).graph);
    closer += std::abs(ff - original) < std::abs(rn - original);
  }
  CHECK(closer >= 7);
}

TEST_CASE("agm_generate") {
  const auto empty = agm_generate(AffiliationMatrix(10, 2), 4);
  CHECK(empty.graph.edge_count() == 0);
  CHECK(empty.truth.communities == std::vector<std::vector<NodeId>>{{}, {}});

  AffiliationMatrix blocks(40, 2);
  for (std::size_t u = 0; u < 40; ++u) blocks.at(u, u < 20 ? 0 : 1) = 0.6;
  const double p = 1.0 - std::exp(-0.36);
  CHECK(p == doctest::Approx(0.3023).epsilon(1e-4));
  int within = 0, across = 0;
  constexpr int kDraws = 1000;
  for (std::uint64_t seed = 0; seed < kDraws; ++seed) {
    const auto planted = agm_generate(blocks, seed);
    within += planted.graph.has_edge(3, 11);
    across += planted.graph.has_edge(3, 30);
  }
  CHECK(std::abs(within / double(kDraws) - p) <= 3 * std::sqrt(p * (1 - p) / kDraws));
  CHECK(across == 0);
  const auto planted = agm_generate(blocks, 0);
  CHECK(planted.truth.communities.size() == 2);
  CHECK(planted.truth.communities[0].size() == 20);

  SUBCASE("overlapping members expect more neighbors") {
    const auto f = planted_affiliation(60, 3, 0.3, 0.8, 2);
    auto expected_degree = [&](NodeId u) {
      double d = 0.0;
      for (NodeId v = 0; v < 60; ++v)
        if (v != u) d += agm_edge_prob(f.row(u), f.row(v));
      return d;
    };
    double single = 0, multi = 0;
    int n_single = 0, n_multi = 0;
    for (NodeId u = 0; u < 60; ++u) {
      const int memberships = std::count_if(f.row(u).begin(), f.row(u).end(), [](double x) { return x > 0; });
      if (memberships == 2) {
        multi += expected_degree(u);
        ++n_multi;
      } else {
        single += expected_degree(u);
        ++n_single;
      }
    }
    REQUIRE(n_multi > 0);
    CHECK(multi / n_multi > single / n_single);
  }
}

TEST_CASE("graph_fingerprint") {
  const Graph a = testing::path_graph(5);
  CHECK(graph_fingerprint(a) == graph_fingerprint(testing::path_graph(5)));
  CHECK(graph_fingerprint(a) != graph_fingerprint(testing::path_graph(6)));
  CHECK(graph_fingerprint(a).size() == 16);
}

TEST_CASE("run_experiment") {
  const auto f = planted_affiliation(60, 2, 0.2, 0.9, 3);
  const auto planted = agm_generate(f, 4);
  KromfacConfig cfg;
  cfg.c = 2;
  cfg.seed = 5;
  cfg.em.em_iters = 4;
  cfg.em.grad_steps = 10;

  SUBCASE("nothing deleted") {
    const auto run = run_experiment(planted.graph, planted.truth, {SampleStrategy::rn, 1.0, 0.7, 1}, cfg);
    CHECK(run.report.missing == 0);
    CHECK(run.report.nmi.at("kromfac") == run.report.nmi.at("baseline1"));
    CHECK(run.report.nmi.at("kromfac") == run.report.nmi.at("baseline2"));
  }
  SUBCASE("30% deleted") {
    const auto run = run_experiment(planted.graph, planted.truth, {SampleStrategy::ff, 0.7, 0.7, 1}, cfg);
    const auto& rep = run.report;
    CHECK(rep.observed == 42);
    CHECK(rep.missing == 18);
    CHECK(rep.config.m == 18);
    CHECK(rep.nmi.size() == 3);
    for (const auto& [name, score] : rep.nmi) {
      CHECK(score >= 0.0);
      CHECK(score <= 1.0);
    }
    CHECK(rep.curve_nmi.size() == rep.trace.records.size());
    CHECK(rep.dataset.nodes == 60);
    CHECK(run.kept.size() == 42);

    const std::string text = report_to_json(rep);
    CHECK(report_to_json(report_from_json(text)) == text);
    const std::string csv = curve_csv(rep);
    CHECK(csv.rfind("i,loss,reg_loss,nmi\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(rep.trace.records.size() + 1));
  }
  CHECK_THROWS_AS(run_experiment(planted.graph, Cover{{}, 3}, {}, cfg), std::invalid_argument);
}
