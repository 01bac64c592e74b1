#pragma once

// Independent reference implementations used as test oracles. Nothing here
// calls into the code paths it is used to check.

#include <cmath>
#include <vector>

#include "kromfac/graph.hpp"
#include "kromfac/rng.hpp"

namespace kromfac::testing {

using Dense = std::vector<std::vector<double>>;

inline Dense kron_product(const Dense& a, const Dense& b) {
  const std::size_t m = a.size(), n = b.size();
  Dense out(m * n, std::vector<double>(m * n));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = 0; q < n; ++q) out[i * n + p][j * n + q] = a[i][j] * b[p][q];
  return out;
}

/// Theta^{(x)k} by repeated explicit Kronecker products.
inline Dense kron_power(const Dense& theta, unsigned k) {
  Dense out = theta;
  for (unsigned i = 1; i < k; ++i) out = kron_product(out, theta);
  return out;
}

inline Dense to_dense(const std::vector<double>& flat, std::size_t n0) {
  Dense d(n0, std::vector<double>(n0));
  for (std::size_t i = 0; i < n0; ++i)
    for (std::size_t j = 0; j < n0; ++j) d[i][j] = flat[i * n0 + j];
  return d;
}

/// Kronecker log-likelihood by direct summation over every unordered pair.
inline double brute_kron_ll(const Graph& g, const std::vector<std::uint64_t>& sigma,
                            const Dense& power) {
  double ll = 0.0;
  for (NodeId u = 0; u < g.n(); ++u) {
    for (NodeId v = u + 1; v < g.n(); ++v) {
      const double x = power[sigma[u]][sigma[v]];
      ll += g.has_edge(u, v) ? std::log(x) : std::log1p(-x);
    }
  }
  return ll;
}

/// Erdos-Renyi G(n, p).
inline Graph random_graph(std::size_t n, double p, Rng& rng) {
  std::vector<Edge> edges;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v)
      if (rng.bernoulli(p)) edges.emplace_back(u, v);
  return Graph::from_edges(n, edges);
}

/// Realizes Theta^k over the first n indices with the identity placement.
inline Graph realize_kronecker(const Dense& power, std::size_t n, Rng& rng) {
  std::vector<Edge> edges;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v)
      if (rng.bernoulli(power[u][v])) edges.emplace_back(u, v);
  return Graph::from_edges(n, edges);
}

inline Graph complete_graph(std::size_t n) {
  std::vector<Edge> edges;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v) edges.emplace_back(u, v);
  return Graph::from_edges(n, edges);
}

inline Graph path_graph(std::size_t n) {
  std::vector<Edge> edges;
  for (NodeId u = 0; u + 1 < n; ++u) edges.emplace_back(u, u + 1);
  return Graph::from_edges(n, edges);
}

inline Graph star_graph(std::size_t leaves) {
  std::vector<Edge> edges;
  for (NodeId v = 1; v <= leaves; ++v) edges.emplace_back(0, v);
  return Graph::from_edges(leaves + 1, edges);
}

/// Two disjoint cliques of `size` nodes each: {0..size-1} and {size..2size-1}.
inline Graph two_cliques(std::size_t size) {
  std::vector<Edge> edges;
  for (NodeId base : {NodeId{0}, static_cast<NodeId>(size)})
    for (NodeId u = 0; u < size; ++u)
      for (NodeId v = u + 1; v < size; ++v) edges.emplace_back(base + u, base + v);
  return Graph::from_edges(2 * size, edges);
}

}  // namespace kromfac::testing
