#include "kromfac/completion.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace kromfac {

std::vector<NodeId> RecoveredGraph::recovered_ids() const {
  std::vector<NodeId> ids(missing);
  std::iota(ids.begin(), ids.end(), static_cast<NodeId>(base.n()));
  return ids;
}

Graph RecoveredGraph::full() const {
  const auto ids = recovered_ids();
  return as_graph(*this, missing, ids);
}

RecoveredGraph realize_missing(const Graph& observed, const KroneckerModel& model,
                               const NodeMapping& mapping, std::size_t m, std::uint64_t seed,
                               BlockSampler sampler) {
  const std::size_t n = observed.n();
  if (mapping.sigma.size() != n + m || mapping.observed_count != n) {
    throw std::invalid_argument("mapping does not cover the observed and missing nodes");
  }
  if (!mapping.valid(model.size())) {
    throw std::invalid_argument("mapping is not an injective placement into Theta^k");
  }
  RecoveredGraph rg;
  rg.base = observed;
  rg.missing = m;
  Rng rng(seed);
  auto sample = sample_missing_block(model, mapping.sigma, n, rng, sampler);
  rg.trials = sample.trials;
  for (const auto& e : sample.edges) (e.first < n ? rg.z1 : rg.z2).push_back(e);
  return rg;
}

Graph as_graph(const RecoveredGraph& rg, std::size_t i, std::span<const NodeId> order) {
  const std::size_t n = rg.observed();
  if (i > order.size()) {
    throw std::invalid_argument("cannot connect " + std::to_string(i) + " nodes from an order of " +
                                std::to_string(order.size()));
  }
  constexpr NodeId kAbsent = static_cast<NodeId>(-1);
  std::vector<NodeId> slot(rg.missing, kAbsent);
  for (std::size_t t = 0; t < i; ++t) {
    const NodeId r = order[t];
    if (r < n || r >= rg.total()) {
      throw std::invalid_argument("order entry " + std::to_string(r) + " is not a recovered node");
    }
    if (slot[r - n] != kAbsent) throw std::invalid_argument("order lists a node twice");
    slot[r - n] = static_cast<NodeId>(n + t);
  }
  std::vector<Edge> edges = rg.base.edges();
  for (const auto& [u, r] : rg.z1) {
    if (slot[r - n] != kAbsent) edges.emplace_back(u, slot[r - n]);
  }
  for (const auto& [r, s] : rg.z2) {
    if (slot[r - n] != kAbsent && slot[s - n] != kAbsent) edges.emplace_back(slot[r - n], slot[s - n]);
  }
  return Graph::from_edges(n + i, edges);
}

void write_recovered(std::ostream& out, const RecoveredGraph& rg) {
  out << "# nodes " << rg.observed() << " missing " << rg.missing << '\n';
  out << "#BASE\n";
  write_edge_list(out, rg.base);
  out << "#Z1\n";
  for (const auto& [u, v] : rg.z1) out << u << ' ' << v << '\n';
  out << "#Z2\n";
  for (const auto& [u, v] : rg.z2) out << u << ' ' << v << '\n';
}

RecoveredGraph read_recovered(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t n = 0, m = 0;
  bool have_header = false;
  enum class Section { none, base, z1, z2 } section = Section::none;
  std::vector<Edge> base, z1, z2;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line == "#BASE") { section = Section::base; continue; }
    if (line == "#Z1") { section = Section::z1; continue; }
    if (line == "#Z2") { section = Section::z2; continue; }
    std::istringstream tokens(line);
    if (line[0] == '#') {
      std::string hash, nodes_kw, missing_kw;
      if (tokens >> hash >> nodes_kw >> n >> missing_kw >> m && nodes_kw == "nodes" &&
          missing_kw == "missing") {
        have_header = true;
      }
      continue;
    }
    NodeId u, v;
    std::string extra;
    if (!(tokens >> u >> v) || (tokens >> extra)) throw ParseError(line_no, "expected two node ids");
    switch (section) {
      case Section::base: base.emplace_back(u, v); break;
      case Section::z1: z1.emplace_back(u, v); break;
      case Section::z2: z2.emplace_back(u, v); break;
      case Section::none: throw ParseError(line_no, "edge outside of a section");
    }
  }
  if (!have_header) throw ParseError(line_no, "missing '# nodes N missing M' header");
  RecoveredGraph rg;
  rg.base = Graph::from_edges(n, base);
  rg.missing = m;
  auto normalize = [&](std::vector<Edge> edges, bool z1_block) {
    for (auto& [u, v] : edges) {
      if (u > v) std::swap(u, v);
      const bool ok = z1_block ? (u < n && v >= n && v < n + m) : (u >= n && v < n + m && u != v);
      if (!ok) throw ParseError(line_no, "edge (" + std::to_string(u) + ", " + std::to_string(v) +
                                             ") does not belong to its block");
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
  };
  rg.z1 = normalize(std::move(z1), true);
  rg.z2 = normalize(std::move(z2), false);
  rg.trials = m * n + m * (m - (m > 0)) / 2;
  return rg;
}

}  // namespace kromfac
