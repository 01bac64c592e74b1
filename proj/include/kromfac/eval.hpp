#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "kromfac/community.hpp"
#include "kromfac/graph.hpp"
#include "kromfac/pipeline.hpp"

namespace kromfac {

enum class SampleStrategy { rn, ff };

struct SampleSpec {
  SampleStrategy strategy = SampleStrategy::rn;
  double fraction = 0.7;   ///< retained share of nodes, in (0, 1]
  double p_forward = 0.7;  ///< forest fire burning probability, in (0, 1)
  std::uint64_t seed = 0;
};

struct Sample {
  Graph graph;
  /// Original ids of the kept nodes, ascending; node k of `graph` is kept[k].
  std::vector<NodeId> kept;
};

/// ceil(fraction * n), guarded against round-off just above an integer.
std::size_t sample_size(std::size_t n, double fraction);

/// Uniform node sample without replacement. Throws std::invalid_argument on an
/// out-of-range fraction.
Sample rn_sample(const Graph& g, const SampleSpec& spec);

/// Forest fire: burn from uniformly chosen seeds; every burning node ignites a
/// Geometric number (mean p / (1 - p)) of its unburned neighbors, chosen
/// uniformly. Stops as soon as the target size is reached.
Sample ff_sample(const Graph& g, const SampleSpec& spec);

/// Dispatches on spec.strategy.
Sample sample_graph(const Graph& g, const SampleSpec& spec);

/// Overlapping normalized mutual information between two covers of the same
/// universe, in [0, 1]. Throws std::invalid_argument on differing universes.
double nmi(const Cover& x, const Cover& y);

struct Planted {
  Graph graph;
  Cover truth;
};

/// Draws every pair independently with agm_edge_prob; the truth cover is
/// hard_decision(f, threshold).
Planted agm_generate(const AffiliationMatrix& f, std::uint64_t seed, double threshold = 0.5);

/// Each node joins one uniformly chosen community with the given strength and,
/// with probability `overlap`, a second distinct one. Needs c >= 1.
AffiliationMatrix planted_affiliation(std::size_t n, std::size_t c, double overlap, double strength,
                                      std::uint64_t seed);

/// FNV-1a over the node count and the sorted edge list, as 16 hex digits.
std::string graph_fingerprint(const Graph& g);

struct DatasetInfo {
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::string hash;

  friend bool operator==(const DatasetInfo&, const DatasetInfo&) = default;
};

struct ExperimentReport {
  /// NMI over the observed nodes, keyed "kromfac", "baseline1", "baseline2".
  std::map<std::string, double> nmi;
  SearchTrace trace;
  /// NMI of the cover at every searched i, aligned with trace.records.
  std::vector<double> curve_nmi;
  DatasetInfo dataset;
  std::size_t observed = 0;
  std::size_t missing = 0;
  KromfacConfig config;
  SampleSpec sample;
  std::vector<std::string> notes;
  /// Wall seconds per stage; serialized under "metadata" with the timestamp.
  std::map<std::string, double> timing;
  std::string timestamp;
};

struct ExperimentRun {
  ExperimentReport report;
  Cover kromfac;
  /// Ranked recovered nodes behind the KroMFac cover's ids >= N.
  std::vector<NodeId> order;
  Cover baseline1;
  Cover baseline2;
  /// Original ids of the observed nodes.
  std::vector<NodeId> kept;
};

/// Samples the observed graph, sets M to the deleted-node count, runs KroMFac
/// and both baselines, and scores each against the truth restricted to the
/// kept nodes. cfg.m is ignored. Truth communities left empty are dropped.
ExperimentRun run_experiment(const Graph& dataset, const Cover& truth, const SampleSpec& spec,
                             const KromfacConfig& cfg);

}  // namespace kromfac
