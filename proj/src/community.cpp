#include "kromfac/community.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "kromfac/rng.hpp"

namespace kromfac {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) s += a[c] * b[c];
  return s;
}

/// log(1 - exp(-x)) with the inner-product floor.
double log_edge_term(double x) { return std::log(-std::expm1(-std::max(x, kInnerProductFloor))); }

/// Row-local view of the objective: everything in the likelihood that
/// involves row u, with the rest of F held fixed.
class RowObjective {
 public:
  RowObjective(const Graph& g, const AffiliationMatrix& f, std::span<const double> column_sums,
               NodeId u)
      : g_(g), f_(f), u_(u), rest_(column_sums.begin(), column_sums.end()) {
    const auto fu = f.row(u);
    for (std::size_t c = 0; c < rest_.size(); ++c) rest_[c] -= fu[c];
    for (NodeId v : g.neighbors(u)) {
      const auto fv = f.row(v);
      for (std::size_t c = 0; c < rest_.size(); ++c) rest_[c] -= fv[c];
    }
  }

  double value(std::span<const double> x) const {
    double s = -dot(x, rest_);
    for (NodeId v : g_.neighbors(u_)) s += log_edge_term(dot(x, f_.row(v)));
    return s;
  }

  std::vector<double> gradient(std::span<const double> x) const {
    std::vector<double> grad(rest_.size());
    for (std::size_t c = 0; c < grad.size(); ++c) grad[c] = -rest_[c];
    for (NodeId v : g_.neighbors(u_)) {
      const auto fv = f_.row(v);
      // d/dx log(1 - e^{-x}) = 1 / (e^x - 1)
      const double w = 1.0 / std::expm1(std::max(dot(x, fv), kInnerProductFloor));
      for (std::size_t c = 0; c < grad.size(); ++c) grad[c] += w * fv[c];
    }
    return grad;
  }

 private:
  const Graph& g_;
  const AffiliationMatrix& f_;
  NodeId u_;
  std::vector<double> rest_;  // sum of F over non-neighbors other than u
};

std::vector<double> column_sums(const AffiliationMatrix& f) {
  std::vector<double> sums(f.cols(), 0.0);
  for (std::size_t u = 0; u < f.rows(); ++u) {
    const auto fu = f.row(u);
    for (std::size_t c = 0; c < sums.size(); ++c) sums[c] += fu[c];
  }
  return sums;
}

void check_shapes(const Graph& g, const AffiliationMatrix& f) {
  if (f.rows() != g.n()) throw std::invalid_argument("affiliation rows do not match graph size");
}

}  // namespace

AffiliationMatrix::AffiliationMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) throw std::invalid_argument("affiliation matrix size mismatch");
  for (double v : values_) {
    if (!(v >= 0.0)) throw std::invalid_argument("affiliation entries must be nonnegative");
  }
}

double agm_edge_prob(std::span<const double> fu, std::span<const double> fv) {
  if (fu.size() != fv.size()) throw std::invalid_argument("membership rows differ in length");
  for (std::size_t c = 0; c < fu.size(); ++c) {
    if (fu[c] < 0.0 || fv[c] < 0.0) throw std::invalid_argument("negative membership strength");
  }
  return -std::expm1(-dot(fu, fv));
}

double agm_log_likelihood(const Graph& g, const AffiliationMatrix& f) {
  check_shapes(g, f);
  const auto sums = column_sums(f);
  double squared_rows = 0.0;
  for (std::size_t u = 0; u < f.rows(); ++u) squared_rows += dot(f.row(u), f.row(u));
  double edge_terms = 0.0, edge_products = 0.0;
  for (NodeId u = 0; u < g.n(); ++u) {
    for (NodeId v : g.neighbors(u)) {
      if (v <= u) continue;
      const double x = dot(f.row(u), f.row(v));
      edge_terms += log_edge_term(x);
      edge_products += x;
    }
  }
  // sum over unordered non-edges = all pairs - edges
  const double all_pairs = 0.5 * (dot(sums, sums) - squared_rows);
  return edge_terms - (all_pairs - edge_products);
}

double loss(const Graph& g, const AffiliationMatrix& f) { return -agm_log_likelihood(g, f); }

std::vector<double> agm_row_gradient(const Graph& g, const AffiliationMatrix& f, NodeId u) {
  check_shapes(g, f);
  if (u >= g.n()) throw std::invalid_argument("node out of range");
  const auto sums = column_sums(f);
  return RowObjective(g, f, sums, u).gradient(f.row(u));
}

Detection commun_det(const Graph& g, std::size_t c, const DetectConfig& cfg) {
  if (c == 0) throw std::invalid_argument("community count must be at least 1");
  if (g.n() == 0) throw std::invalid_argument("cannot detect communities in an empty graph");
  if (cfg.max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
  if (cfg.eta_detect && !(*cfg.eta_detect > 0.0)) throw std::invalid_argument("eta_detect must be positive");

  Detection det;
  det.f = AffiliationMatrix(g.n(), c);
  Rng rng(cfg.seed);
  const double init_bound = std::sqrt(g.n() >= 2 ? default_delta(g) : 1e-6) / static_cast<double>(c);
  for (std::size_t u = 0; u < g.n(); ++u)
    for (std::size_t k = 0; k < c; ++k) det.f.at(u, k) = rng.uniform(0.0, init_bound);

  auto sums = column_sums(det.f);
  double current = loss(g, det.f);
  det.loss_trace.push_back(current);
  std::vector<double> trial(c);

  for (unsigned pass = 0; pass < cfg.max_iters; ++pass) {
    for (NodeId u = 0; u < g.n(); ++u) {
      const auto row = det.f.row(u);
      if (g.degree(u) == 0) {
        // The row objective is -<x, rest> with rest >= 0, maximized at x = 0.
        for (std::size_t k = 0; k < c; ++k) {
          sums[k] -= row[k];
          row[k] = 0.0;
        }
        continue;
      }
      const RowObjective objective(g, det.f, sums, u);
      const double before = objective.value(row);
      const auto grad = objective.gradient(row);
      double largest = 0.0;
      for (double x : grad) largest = std::max(largest, std::abs(x));
      if (largest == 0.0) continue;
      double step = cfg.step_init / std::max(1.0, largest);
      for (int halving = 0; halving <= 10; ++halving, step *= 0.5) {
        for (std::size_t k = 0; k < c; ++k) trial[k] = std::max(0.0, row[k] + step * grad[k]);
        if (objective.value(trial) >= before) {
          for (std::size_t k = 0; k < c; ++k) {
            sums[k] += trial[k] - row[k];
            row[k] = trial[k];
          }
          break;
        }
      }
    }
    // Column sums drift under incremental updates; refresh once per pass.
    sums = column_sums(det.f);
    const double next = loss(g, det.f);
    det.loss_trace.push_back(next);
    ++det.passes;
    const double improvement = current - next;
    const double eta = cfg.eta_detect.value_or(1e-4 * (1.0 + std::abs(next)));
    current = next;
    if (improvement < eta) {
      det.converged = true;
      break;
    }
  }
  det.loss = current;
  return det;
}

Cover hard_decision(const AffiliationMatrix& f, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
  Cover cover;
  cover.universe = f.rows();
  cover.communities.resize(f.cols());
  for (std::size_t u = 0; u < f.rows(); ++u)
    for (std::size_t c = 0; c < f.cols(); ++c)
      if (f.at(u, c) >= delta) cover.communities[c].push_back(static_cast<NodeId>(u));
  return cover;
}

double default_delta(const Graph& g) {
  constexpr double kFloor = 1e-6;
  if (g.n() < 2) throw std::invalid_argument("default_delta needs at least two nodes");
  if (g.edge_count() == 0) return kFloor;
  const double n = static_cast<double>(g.n());
  const double density = std::min(2.0 * static_cast<double>(g.edge_count()) / (n * (n - 1.0)), 1.0 - 1e-9);
  return std::max(std::sqrt(-std::log1p(-density)), kFloor);
}

Cover restrict_cover(const Cover& cover, std::size_t universe) {
  Cover out;
  out.universe = universe;
  for (const auto& comm : cover.communities) {
    auto& kept = out.communities.emplace_back();
    for (NodeId u : comm)
      if (u < universe) kept.push_back(u);
  }
  return out;
}

void write_cover(std::ostream& out, const Cover& cover,
                 const std::function<std::string(NodeId)>& label) {
  for (const auto& comm : cover.communities) {
    for (std::size_t i = 0; i < comm.size(); ++i) {
      if (i) out << ' ';
      if (label) {
        out << label(comm[i]);
      } else {
        out << comm[i];
      }
    }
    out << '\n';
  }
}

Cover read_cover(std::istream& in, NodeIdMap& ids) {
  Cover cover;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first != std::string::npos && line[first] == '#') continue;
    std::istringstream tokens(line);
    auto& comm = cover.communities.emplace_back();
    std::string label;
    while (tokens >> label) comm.push_back(ids.intern(label));
    std::sort(comm.begin(), comm.end());
    comm.erase(std::unique(comm.begin(), comm.end()), comm.end());
  }
  // A trailing newline produces no extra community; blank lines in the middle
  // are kept as empty communities.
  while (!cover.communities.empty() && cover.communities.back().empty()) cover.communities.pop_back();
  cover.universe = ids.size();
  return cover;
}

void write_affiliation(std::ostream& out, const AffiliationMatrix& f) {
  for (std::size_t u = 0; u < f.rows(); ++u) {
    for (std::size_t c = 0; c < f.cols(); ++c) {
      if (c) out << ' ';
      out << f.at(u, c);
    }
    out << '\n';
  }
}

}  // namespace kromfac
