#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "kromfac/graph.hpp"
#include "kromfac/kron_model.hpp"

namespace kromfac {

/// The observed graph plus a realization of its missing blocks. Recovered
/// nodes carry ids [N, N + M) in the full graph, where N = base.n().
struct RecoveredGraph {
  Graph base;
  std::size_t missing = 0;
  /// Edges (u, r) with u < N <= r.
  std::vector<Edge> z1;
  /// Edges (r, s) with N <= r < s.
  std::vector<Edge> z2;
  /// Unordered pairs covered by Bernoulli trials.
  std::uint64_t trials = 0;

  std::size_t observed() const noexcept { return base.n(); }
  std::size_t total() const noexcept { return base.n() + missing; }
  /// Recovered node ids in slot order: N, N + 1, ..., N + M - 1.
  std::vector<NodeId> recovered_ids() const;
  /// The full recovered graph A_R^(M).
  Graph full() const;
};

/// Realizes the missing blocks of `observed` under `model` placed by `mapping`
/// (which must cover N + m positions). The observed block is copied as is.
RecoveredGraph realize_missing(const Graph& observed, const KroneckerModel& model,
                               const NodeMapping& mapping, std::size_t m, std::uint64_t seed,
                               BlockSampler sampler = BlockSampler::automatic);

/// A_R^(i): the base graph plus the first i recovered nodes of `order`,
/// renumbered N, N + 1, ... in that order, with the z1/z2 edges whose
/// recovered endpoints are all among them.
Graph as_graph(const RecoveredGraph& rg, std::size_t i, std::span<const NodeId> order);

/// Three edge-list sections "#BASE", "#Z1", "#Z2" over internal ids, preceded
/// by a "# nodes N missing M" line.
void write_recovered(std::ostream& out, const RecoveredGraph& rg);
RecoveredGraph read_recovered(std::istream& in);

}  // namespace kromfac
