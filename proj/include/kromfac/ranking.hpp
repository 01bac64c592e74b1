#pragma once

#include <functional>
#include <vector>

#include "kromfac/completion.hpp"
#include "kromfac/graph.hpp"

namespace kromfac {

/// Influential recovered nodes, strongest first.
struct Ranking {
  std::size_t h = 0;
  /// Recovered node ids (full-graph numbering) by descending centrality,
  /// ties by ascending id.
  std::vector<NodeId> order;
  /// Centrality of every recovered node, indexed by slot (id - N).
  std::vector<double> centrality;
  double epsilon = 0.0;
};

using Centrality = std::function<double(const Graph&, NodeId)>;

/// Number of incident edges. Throws std::invalid_argument when u is out of range.
std::size_t degree_centrality(const Graph& g, NodeId u);

/// Scores every recovered node on the full recovered graph and keeps those
/// with centrality >= epsilon. Throws std::invalid_argument unless epsilon > 0.
Ranking select_influential(const RecoveredGraph& rg, double epsilon, const Centrality& centrality = {});

/// Half the maximum degree over all nodes of the full recovered graph.
double default_epsilon(const RecoveredGraph& rg);

}  // namespace kromfac
