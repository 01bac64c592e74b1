#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "kromfac/graph.hpp"
#include "kromfac/rng.hpp"

namespace kromfac {

/// Parameter entries are kept inside [kThetaFloor, 1 - kThetaFloor] while fitting.
inline constexpr double kThetaFloor = 1e-4;

/// Stochastic Kronecker graph model: an n0 x n0 initiator matrix raised to the
/// k-th Kronecker power. Theta^k is never materialized.
struct KroneckerModel {
  std::size_t n0 = 2;
  unsigned k = 1;
  std::vector<double> theta;  // row-major, n0 * n0

  /// Validates the shape and that every entry lies in [0, 1].
  KroneckerModel(std::size_t n0, unsigned k, std::vector<double> theta);
  KroneckerModel() = default;

  double at(std::size_t i, std::size_t j) const { return theta[i * n0 + j]; }
  /// Side length n0^k of the probability matrix.
  std::uint64_t size() const;
  bool symmetric(double tol = 1e-12) const;

  friend bool operator==(const KroneckerModel&, const KroneckerModel&) = default;
};

/// Smallest k >= 1 with n0^k >= nodes.
unsigned kron_power_for(std::size_t n0, std::size_t nodes);

/// [Theta^k]_{a,b}: product over base-n0 digits of a and b.
/// Throws std::invalid_argument when a or b is not below n0^k.
double kron_entry(const KroneckerModel& model, std::uint64_t a, std::uint64_t b);

/// Placement of graph positions into the rows of Theta^k. Positions
/// [0, observed_count) are observed nodes, the rest are missing nodes.
struct NodeMapping {
  std::vector<std::uint64_t> sigma;
  std::size_t observed_count = 0;

  static NodeMapping identity(std::size_t nodes, std::size_t observed);
  /// True when sigma is injective and every entry is below `index_space`.
  bool valid(std::uint64_t index_space) const;

  friend bool operator==(const NodeMapping&, const NodeMapping&) = default;
};

/// How the non-edge part of the Kronecker log-likelihood is summed.
/// `automatic` is exact while n0^k <= 4096 and the second-order expansion of
/// log(1 - x) above that.
enum class ZeroSumMode { automatic, exact, taylor };

/// log P(A, sigma | Theta) over unordered pairs u < v of the graph's nodes,
/// with pair probability [Theta^k]_{sigma(u), sigma(v)}. Theta must be symmetric.
double kron_log_likelihood(const Graph& full, const NodeMapping& mapping,
                           const KroneckerModel& model, ZeroSumMode mode = ZeroSumMode::automatic);

/// Gradient of kron_log_likelihood over symmetric Theta, returned as a
/// symmetric n0 x n0 matrix G with dL = sum_ij G_ij dTheta_ij for any
/// symmetric perturbation dTheta.
std::vector<double> kron_log_likelihood_gradient(const Graph& full, const NodeMapping& mapping,
                                                 const KroneckerModel& model,
                                                 ZeroSumMode mode = ZeroSumMode::automatic);

enum class BlockSampler { automatic, exhaustive, grouped };

struct MissingBlockSample {
  /// Sampled edges (u, v), u < v, with at least one endpoint >= observed.
  std::vector<Edge> edges;
  /// Bernoulli trials actually drawn.
  std::uint64_t trials = 0;
};

/// Draws every unordered pair that touches a missing position as an
/// independent Bernoulli([Theta^k]_{sigma(u), sigma(v)}).
///
/// `exhaustive` visits pairs row-major (u < v) and draws one trial each.
/// `grouped` walks each missing row by classes of equal probability (entries
/// sharing the same digit-pair counts) with geometric skips; its output has
/// the same distribution at a cost proportional to the sampled edges. It
/// requires a symmetric Theta. `automatic` picks exhaustive for at most 2^16
/// pairs or a non-symmetric Theta.
MissingBlockSample sample_missing_block(const KroneckerModel& model,
                                        std::span<const std::uint64_t> sigma,
                                        std::size_t observed, Rng& rng,
                                        BlockSampler sampler = BlockSampler::automatic);

struct EmConfig {
  unsigned em_iters = 30;
  /// Proposals per E-step; 10 * (N + M) when unset.
  std::optional<std::size_t> mcmc_samples;
  unsigned grad_steps = 50;
  double learning_rate = 1e-5;
  std::uint64_t seed = 0;
  ZeroSumMode zero_sum = ZeroSumMode::automatic;
  BlockSampler sampler = BlockSampler::automatic;
};

struct EmIteration {
  /// Likelihood of the E-step sample before the M-step, then after each
  /// accepted gradient step.
  std::vector<double> log_likelihood;
  double acceptance_rate = 0.0;
};

struct KronFit {
  KroneckerModel model;
  NodeMapping mapping;
  std::vector<EmIteration> trace;
};

/// Entries uniform on [0.25, 0.75], symmetrized.
std::vector<double> random_theta_init(std::size_t n0, std::uint64_t seed);

/// EM fit of Theta to an observed graph with `m_missing` unobserved nodes.
/// E-step: the missing blocks are redrawn from the current model, then the
/// placement sigma is updated by Metropolis-Hastings over random
/// transpositions. M-step: projected gradient ascent with backtracking.
/// Throws std::invalid_argument on a malformed initiator or config.
KronFit kronem_fit(const Graph& observed, std::size_t m_missing, std::size_t n0,
                   std::span<const double> theta_init, const EmConfig& cfg);

}  // namespace kromfac
