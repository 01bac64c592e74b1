#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace kromfac {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;

/// Raised on malformed edge-list or community files.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Simple undirected graph over dense ids [0, n). Immutable once built;
/// neighbor lists are sorted and free of duplicates and self-loops.
class Graph {
 public:
  Graph() = default;

  /// Builds from an edge list. Self-loops are dropped, duplicates and
  /// reversed duplicates are collapsed. Throws std::invalid_argument on ids
  /// outside [0, n).
  static Graph from_edges(std::size_t n, std::span<const Edge> edges);

  std::size_t n() const noexcept { return adjacency_.size(); }
  std::size_t edge_count() const noexcept { return edge_count_; }
  std::size_t degree(NodeId u) const { return adjacency_.at(u).size(); }
  std::span<const NodeId> neighbors(NodeId u) const { return adjacency_.at(u); }
  bool has_edge(NodeId u, NodeId v) const;

  /// Every edge once as (u, v) with u < v, sorted lexicographically.
  std::vector<Edge> edges() const;

  /// Checks the structural invariants (symmetry, no loops, sorted, in range,
  /// consistent edge count).
  bool valid() const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::vector<std::vector<NodeId>> adjacency_;
  std::size_t edge_count_ = 0;
};

/// Bijection between external node labels and dense internal ids.
class NodeIdMap {
 public:
  /// Returns the internal id of `label`, assigning the next free id if unseen.
  NodeId intern(const std::string& label);
  /// Internal id of a label already present; throws std::out_of_range otherwise.
  NodeId id(const std::string& label) const { return to_internal_.at(label); }
  bool contains(const std::string& label) const { return to_internal_.contains(label); }
  const std::string& label(NodeId id) const { return to_external_.at(id); }
  std::size_t size() const noexcept { return to_external_.size(); }

  /// Labels "0", "1", ... for a graph that has no external naming.
  static NodeIdMap identity(std::size_t n);

 private:
  std::unordered_map<std::string, NodeId> to_internal_;
  std::vector<std::string> to_external_;
};

struct LoadedGraph {
  Graph graph;
  NodeIdMap ids;
  std::size_t dropped_self_loops = 0;
};

/// Parses an edge list: one edge per line as two whitespace-separated tokens,
/// '#' starts a comment line, blank lines are skipped.
LoadedGraph load_edge_list(std::istream& in);
LoadedGraph load_edge_list_file(const std::string& path);

/// Writes one line "u v" per edge sorted by (u, v), using external labels
/// when `ids` is given.
void write_edge_list(std::ostream& out, const Graph& g, const NodeIdMap* ids = nullptr);

struct Subgraph {
  Graph graph;
  /// original[i] is the id in the parent graph of node i of `graph`.
  std::vector<NodeId> original;
};

/// Induced subgraph over `keep`. Kept nodes are renumbered in ascending order
/// of their original ids. Throws std::invalid_argument on ids out of range.
Subgraph induced_subgraph(const Graph& g, std::span<const NodeId> keep);

}  // namespace kromfac
