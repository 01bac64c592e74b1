#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kromfac/graph.hpp"

namespace kromfac {

/// Inner products below this are floored inside log(1 - exp(-x)).
inline constexpr double kInnerProductFloor = 1e-10;

/// Nonnegative node x community membership strengths, row-major.
class AffiliationMatrix {
 public:
  AffiliationMatrix() = default;
  AffiliationMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  /// Throws std::invalid_argument on a size mismatch or a negative entry.
  AffiliationMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double at(std::size_t u, std::size_t c) const { return values_[u * cols_ + c]; }
  double& at(std::size_t u, std::size_t c) { return values_[u * cols_ + c]; }
  std::span<const double> row(std::size_t u) const { return {values_.data() + u * cols_, cols_}; }
  std::span<double> row(std::size_t u) { return {values_.data() + u * cols_, cols_}; }
  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const AffiliationMatrix&, const AffiliationMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Possibly overlapping communities over node ids [0, universe).
struct Cover {
  std::vector<std::vector<NodeId>> communities;
  std::size_t universe = 0;

  friend bool operator==(const Cover&, const Cover&) = default;
};

struct DetectConfig {
  /// Stop once a full pass improves the loss by less than this. Unset means
  /// 1e-4 * (1 + |loss|), re-evaluated every pass.
  std::optional<double> eta_detect;
  unsigned max_iters = 500;
  /// First trial step of the row line search, in units of the gradient's
  /// largest component.
  double step_init = 1.0;
  std::uint64_t seed = 0;
};

struct Detection {
  double loss = 0.0;
  AffiliationMatrix f;
  bool converged = false;
  unsigned passes = 0;
  /// Loss after initialization, then after every pass.
  std::vector<double> loss_trace;
};

/// 1 - exp(-<fu, fv>). Throws std::invalid_argument on negative entries or
/// mismatched lengths.
double agm_edge_prob(std::span<const double> fu, std::span<const double> fv);

/// Sum over edges of log(1 - exp(-<F_u, F_v>)) minus the sum over non-edge
/// pairs of <F_u, F_v>, in O(|E| C + n C).
double agm_log_likelihood(const Graph& g, const AffiliationMatrix& f);

/// Negative AGM log-likelihood.
double loss(const Graph& g, const AffiliationMatrix& f);

/// Gradient of agm_log_likelihood with respect to row u of F.
std::vector<double> agm_row_gradient(const Graph& g, const AffiliationMatrix& f, NodeId u);

/// Block coordinate gradient ascent over the rows of F (ascending node order)
/// with a backtracking line search and projection onto F >= 0.
/// Throws std::invalid_argument when c == 0 or the graph is empty.
Detection commun_det(const Graph& g, std::size_t c, const DetectConfig& cfg);

/// Node u joins community c iff f(u, c) >= delta.
Cover hard_decision(const AffiliationMatrix& f, double delta);

/// sqrt(-log(1 - p)) for the edge density p, floored at 1e-6.
/// Throws std::invalid_argument when g has fewer than two nodes.
double default_delta(const Graph& g);

/// Drops ids >= universe and sets the new universe.
Cover restrict_cover(const Cover& cover, std::size_t universe);

/// One community per line, whitespace-separated labels.
void write_cover(std::ostream& out, const Cover& cover,
                 const std::function<std::string(NodeId)>& label = {});
/// Reads labels through `ids`, interning unseen ones, and sets the universe
/// to ids.size() after reading.
Cover read_cover(std::istream& in, NodeIdMap& ids);

/// Dense text dump, one row per node.
void write_affiliation(std::ostream& out, const AffiliationMatrix& f);

}  // namespace kromfac
