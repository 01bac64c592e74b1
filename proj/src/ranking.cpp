#include "kromfac/ranking.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace kromfac {

std::size_t degree_centrality(const Graph& g, NodeId u) {
  if (u >= g.n()) throw std::invalid_argument("node " + std::to_string(u) + " out of range");
  return g.degree(u);
}

Ranking select_influential(const RecoveredGraph& rg, double epsilon, const Centrality& centrality) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  const Graph full = rg.full();
  const std::size_t n = rg.observed();

  Ranking r;
  r.epsilon = epsilon;
  r.centrality.resize(rg.missing);
  for (std::size_t s = 0; s < rg.missing; ++s) {
    const auto u = static_cast<NodeId>(n + s);
    r.centrality[s] = centrality ? centrality(full, u) : static_cast<double>(degree_centrality(full, u));
    if (r.centrality[s] >= epsilon) r.order.push_back(u);
  }
  std::stable_sort(r.order.begin(), r.order.end(), [&](NodeId a, NodeId b) {
    return r.centrality[a - n] > r.centrality[b - n];
  });
  r.h = r.order.size();
  return r;
}

double default_epsilon(const RecoveredGraph& rg) {
  if (rg.total() == 0) throw std::invalid_argument("recovered graph is empty");
  const Graph full = rg.full();
  std::size_t k_max = 0;
  for (NodeId u = 0; u < full.n(); ++u) k_max = std::max(k_max, full.degree(u));
  return static_cast<double>(k_max) / 2.0;
}

}  // namespace kromfac
