#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "kromfac/eval.hpp"
#include "kromfac/pipeline.hpp"
#include "test_support.hpp"

using namespace kromfac;

namespace {

KromfacConfig small_config(std::size_t m, std::size_t c, std::uint64_t seed) {
  KromfacConfig cfg;
  cfg.m = m;
  cfg.c = c;
  cfg.seed = seed;
  cfg.em.em_iters = 5;
  cfg.em.grad_steps = 10;
  return cfg;
}

Graph planted_graph(std::uint64_t seed, std::size_t n = 60) {
  const auto f = planted_affiliation(n, 2, 0.2, 0.9, seed);
  return agm_generate(f, seed + 1).graph;
}

}  // namespace

TEST_CASE("regularized_loss") {
  CHECK(regularized_loss(5.0, 0, 10.0) == 5.0);
  CHECK(regularized_loss(5.0, 1, 10.0) == doctest::Approx(-1.9315).epsilon(1e-4));
  KromfacConfig cfg;
  CHECK(resolve_lambda(cfg, 10000) == 100000.0);
  cfg.lambda_override = 0.0;
  CHECK(resolve_lambda(cfg, 10000) == 0.0);
}

TEST_CASE("detection seeds differ by candidate and master seed") {
  KromfacConfig a, b;
  b.seed = 1;
  CHECK(detection_seed(a, 0) != detection_seed(a, 1));
  CHECK(detection_seed(a, 0) != detection_seed(b, 0));
  CHECK(detection_seed(a, 3) == detection_seed(a, 3));
}

TEST_CASE("M = 0 reduces to baseline 1") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Graph g = planted_graph(seed);
    const auto cfg = small_config(0, 2, seed);
    const auto result = run_kromfac(g, cfg);
    CHECK(result.trace.records.size() == 1);
    CHECK(result.trace.i_hat == 0);
    CHECK(result.trace.degenerate);
    CHECK_FALSE(result.fit.has_value());
    CHECK(result.cover == baseline1(g, cfg));
    CHECK(result.cover == baseline1(g, cfg.c, cfg.delta, [&] {
            DetectConfig d = cfg.detect;
            d.seed = detection_seed(cfg, 0);
            return d;
          }()));
    CHECK(baseline2(g, cfg) == baseline1(g, cfg));
  }
}

TEST_CASE("two 4-cliques through baseline 1") {
  const Graph g = testing::two_cliques(4);
  int exact = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    KromfacConfig cfg;
    cfg.c = 2;
    cfg.seed = seed;
    const Cover truth{{{0, 1, 2, 3}, {4, 5, 6, 7}}, 8};
    exact += nmi(baseline1(g, cfg), truth) == 1.0;
  }
  CHECK(exact >= 8);
}

TEST_CASE("edgeless graph gives empty communities") {
  const Graph g = Graph::from_edges(5, std::vector<Edge>{});
  const Cover cover = baseline1(g, 1, std::nullopt, DetectConfig{});
  CHECK(cover.communities.size() == 1);
  CHECK(cover.communities[0].empty());
}

TEST_CASE("search trace invariants") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Graph g = planted_graph(seed, 50);
    auto cfg = small_config(12, 2, seed);
    cfg.epsilon = 1.0;
    const auto result = run_kromfac(g, cfg);
    const auto& t = result.trace;
    CHECK(t.h == result.ranking.h);
    REQUIRE(t.records.size() == t.h + 1);
    CHECK(t.lambda == doctest::Approx(10.0 * 50));
    std::size_t argmin = 0;
    for (std::size_t k = 0; k < t.records.size(); ++k) {
      CHECK(t.records[k].i == k);
      CHECK(t.records[k].reg_loss == regularized_loss(t.records[k].loss, k, t.lambda));
      if (t.records[k].reg_loss < t.records[argmin].reg_loss) argmin = k;
    }
    CHECK(t.i_hat == t.records[argmin].i);
    CHECK(result.cover.universe == 50 + t.i_hat);
    CHECK(t.rows == 50 + t.i_hat);
    CHECK(t.cols == 2);
    CHECK(result.covers.size() == t.records.size());
    CHECK(result.covers[argmin] == result.cover);
    CHECK(result.recovered.missing == 12);
    CHECK(result.recovered.base == g);
  }
}

TEST_CASE("lambda = 0 picks the smallest raw loss") {
  const Graph g = planted_graph(4, 50);
  auto cfg = small_config(10, 2, 4);
  cfg.lambda_override = 0.0;
  cfg.epsilon = 1.0;
  const auto result = run_kromfac(g, cfg);
  double chosen = 0.0;
  for (const auto& r : result.trace.records)
    if (r.i == result.trace.i_hat) chosen = r.loss;
  for (const auto& r : result.trace.records) CHECK(chosen <= r.loss);
}

TEST_CASE("determinism and thread independence") {
  const Graph g = planted_graph(9, 50);
  auto cfg = small_config(10, 3, 21);
  cfg.epsilon = 1.0;
  const auto a = run_kromfac(g, cfg);
  const auto b = run_kromfac(g, cfg);
  cfg.threads = 4;
  const auto c = run_kromfac(g, cfg);
  CHECK(a.cover == b.cover);
  CHECK(a.trace == b.trace);
  CHECK(a.cover == c.cover);
  CHECK(a.trace == c.trace);
}

TEST_CASE("excluding i = 0") {
  const Graph g = planted_graph(2, 40);
  auto cfg = small_config(8, 2, 2);
  cfg.include_i0 = false;
  cfg.epsilon = 1e9;
  CHECK_THROWS_AS(run_kromfac(g, cfg), std::invalid_argument);

  cfg.epsilon = 1.0;
  const auto result = run_kromfac(g, cfg);
  REQUIRE_FALSE(result.trace.records.empty());
  CHECK(result.trace.records.front().i == 1);
  CHECK(result.trace.i_hat >= 1);
}

TEST_CASE("baseline 2 covers every recovered node") {
  const Graph g = planted_graph(6, 40);
  const auto cfg = small_config(7, 2, 6);
  const Cover cover = baseline2(g, cfg);
  CHECK(cover.universe == 47);
  const auto [fit, rg] = recover_missing(g, cfg);
  CHECK(baseline2(rg, cfg) == cover);
  CHECK(fit.mapping.sigma.size() == 47);
}

TEST_CASE("config validation") {
  const Graph g = testing::path_graph(4);
  KromfacConfig cfg;
  cfg.c = 0;
  CHECK_THROWS_AS(run_kromfac(g, cfg), std::invalid_argument);
  cfg.c = 1;
  cfg.lambda_coef = 0.0;
  CHECK_THROWS_AS(run_kromfac(g, cfg), std::invalid_argument);
  cfg.lambda_coef = 10.0;
  cfg.epsilon = -1.0;
  CHECK_THROWS_AS(run_kromfac(g, cfg), std::invalid_argument);
  cfg.epsilon.reset();
  cfg.delta = 0.0;
  CHECK_THROWS_AS(run_kromfac(g, cfg), std::invalid_argument);
  cfg.delta.reset();
  CHECK_THROWS_AS(run_kromfac(Graph{}, cfg), std::invalid_argument);
  CHECK_THROWS_AS(recover_missing(g, cfg), std::invalid_argument);
}
