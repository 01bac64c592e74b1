#include "kromfac/graph.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace kromfac {

Graph Graph::from_edges(std::size_t n, std::span<const Edge> edges) {
  Graph g;
  g.adjacency_.assign(n, {});
  for (const auto& [u, v] : edges) {
    if (u >= n || v >= n) {
      throw std::invalid_argument("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                                  ") out of range for " + std::to_string(n) + " nodes");
    }
    if (u == v) continue;
    g.adjacency_[u].push_back(v);
    g.adjacency_[v].push_back(u);
  }
  std::size_t total = 0;
  for (auto& nbrs : g.adjacency_) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    nbrs.shrink_to_fit();
    total += nbrs.size();
  }
  g.edge_count_ = total / 2;
  return g;
}

bool Graph::has_edge(NodeId u, NodeId v) const {
  const auto& nbrs = adjacency_.at(u);
  return std::binary_search(nbrs.begin(), nbrs.end(), v);
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count_);
  for (NodeId u = 0; u < adjacency_.size(); ++u) {
    for (NodeId v : adjacency_[u]) {
      if (u < v) out.emplace_back(u, v);
    }
  }
  return out;
}

bool Graph::valid() const {
  std::size_t total = 0;
  for (NodeId u = 0; u < adjacency_.size(); ++u) {
    const auto& nbrs = adjacency_[u];
    for (std::size_t i = 0; i < nbrs.size(); ++i) {
      const NodeId v = nbrs[i];
      if (v >= adjacency_.size() || v == u) return false;
      if (i > 0 && nbrs[i - 1] >= v) return false;
      if (!std::binary_search(adjacency_[v].begin(), adjacency_[v].end(), u)) return false;
    }
    total += nbrs.size();
  }
  return total == 2 * edge_count_;
}

NodeId NodeIdMap::intern(const std::string& label) {
  auto [it, inserted] = to_internal_.try_emplace(label, static_cast<NodeId>(to_external_.size()));
  if (inserted) to_external_.push_back(label);
  return it->second;
}

NodeIdMap NodeIdMap::identity(std::size_t n) {
  NodeIdMap m;
  for (std::size_t i = 0; i < n; ++i) m.intern(std::to_string(i));
  return m;
}

LoadedGraph load_edge_list(std::istream& in) {
  LoadedGraph out;
  std::vector<Edge> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream tokens(line);
    std::string a, b, extra;
    if (!(tokens >> a >> b) || (tokens >> extra)) {
      throw ParseError(line_no, "expected exactly two node tokens");
    }
    const NodeId u = out.ids.intern(a);
    const NodeId v = out.ids.intern(b);
    if (u == v) {
      ++out.dropped_self_loops;
      continue;
    }
    edges.emplace_back(u, v);
  }
  out.graph = Graph::from_edges(out.ids.size(), edges);
  return out;
}

LoadedGraph load_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_edge_list(in);
}

void write_edge_list(std::ostream& out, const Graph& g, const NodeIdMap* ids) {
  for (const auto& [u, v] : g.edges()) {
    if (ids) {
      out << ids->label(u) << ' ' << ids->label(v) << '\n';
    } else {
      out << u << ' ' << v << '\n';
    }
  }
}

Subgraph induced_subgraph(const Graph& g, std::span<const NodeId> keep) {
  Subgraph sub;
  sub.original.assign(keep.begin(), keep.end());
  std::sort(sub.original.begin(), sub.original.end());
  sub.original.erase(std::unique(sub.original.begin(), sub.original.end()), sub.original.end());
  if (!sub.original.empty() && sub.original.back() >= g.n()) {
    throw std::invalid_argument("node " + std::to_string(sub.original.back()) +
                                " out of range for induced subgraph");
  }
  constexpr NodeId kAbsent = static_cast<NodeId>(-1);
  std::vector<NodeId> remap(g.n(), kAbsent);
  for (NodeId i = 0; i < sub.original.size(); ++i) remap[sub.original[i]] = i;

  std::vector<Edge> edges;
  for (NodeId i = 0; i < sub.original.size(); ++i) {
    for (NodeId v : g.neighbors(sub.original[i])) {
      const NodeId j = remap[v];
      if (j != kAbsent && i < j) edges.emplace_back(i, j);
    }
  }
  sub.graph = Graph::from_edges(sub.original.size(), edges);
  return sub;
}

}  // namespace kromfac
