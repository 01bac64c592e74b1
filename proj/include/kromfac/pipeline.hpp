#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "kromfac/community.hpp"
#include "kromfac/completion.hpp"
#include "kromfac/graph.hpp"
#include "kromfac/kron_model.hpp"
#include "kromfac/ranking.hpp"

namespace kromfac {

struct KromfacConfig {
  std::size_t m = 0;  ///< missing-node count M
  std::size_t c = 1;  ///< community count C
  std::size_t n0 = 2;
  /// lambda = lambda_coef * N unless lambda_override is set.
  double lambda_coef = 10.0;
  std::optional<double> lambda_override;
  /// Unset means max(0.5, default_epsilon).
  std::optional<double> epsilon;
  /// Unset means default_delta of the graph the cover was fitted on.
  std::optional<double> delta;
  EmConfig em;
  DetectConfig detect;
  bool include_i0 = true;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  /// Row-major n0 x n0 initiator; random when unset.
  std::optional<std::vector<double>> theta_init;
};

struct TraceRecord {
  std::size_t i = 0;
  double loss = 0.0;
  double reg_loss = 0.0;
  bool converged = false;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct SearchTrace {
  double lambda = 0.0;
  std::size_t h = 0;
  std::vector<TraceRecord> records;
  std::size_t i_hat = 0;
  std::size_t rows = 0;  ///< shape of the chosen F
  std::size_t cols = 0;
  /// No influential node was found, so only i = 0 was searched.
  bool degenerate = false;

  friend bool operator==(const SearchTrace&, const SearchTrace&) = default;
};

struct KromfacResult {
  Cover cover;
  SearchTrace trace;
  std::optional<KronFit> fit;  ///< unset when M = 0
  RecoveredGraph recovered;
  Ranking ranking;
  /// Hard decision at every searched i, aligned with trace.records.
  std::vector<Cover> covers;
  double delta = 0.0;
};

/// d - lambda * log(i + 1).
double regularized_loss(double d, std::size_t i, double lambda);

/// Resolved lambda for an observed graph with n nodes.
double resolve_lambda(const KromfacConfig& cfg, std::size_t n);

/// Seed of the detection run at candidate i.
std::uint64_t detection_seed(const KromfacConfig& cfg, std::size_t i);

/// Threshold used for a cover fitted on g: the configured delta, else
/// default_delta(g) (1e-6 for graphs with fewer than two nodes).
double resolve_delta(const std::optional<double>& delta, const Graph& g);

/// KronEM fit followed by one realization of the missing blocks.
/// Throws std::invalid_argument when cfg.m == 0.
std::pair<KronFit, RecoveredGraph> recover_missing(const Graph& observed, const KromfacConfig& cfg);

/// Full search over i in {0 (if include_i0), 1, ..., H}.
/// Throws std::invalid_argument on an invalid config, an empty graph, or
/// when H = 0 and include_i0 is false.
KromfacResult run_kromfac(const Graph& observed, const KromfacConfig& cfg);

/// Detection on the observed graph alone.
Cover baseline1(const Graph& observed, std::size_t c, std::optional<double> delta, const DetectConfig& detect);
/// Same as above with the settings KroMFac uses for i = 0.
Cover baseline1(const Graph& observed, const KromfacConfig& cfg);

/// Detection on the fully recovered graph (i = M, no selection).
Cover baseline2(const Graph& observed, const KromfacConfig& cfg);
/// Reuses an existing realization.
Cover baseline2(const RecoveredGraph& recovered, const KromfacConfig& cfg);

}  // namespace kromfac
