#include "kromfac/kron_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace kromfac {

namespace {

constexpr std::uint64_t kExactZeroSumLimit = 4096;
constexpr std::uint64_t kExhaustivePairLimit = std::uint64_t{1} << 16;

std::uint64_t checked_pow(std::size_t base, unsigned exp) {
  std::uint64_t r = 1;
  for (unsigned e = 0; e < exp; ++e) {
    if (r > std::numeric_limits<std::uint64_t>::max() / 4 / base) {
      throw std::invalid_argument("Kronecker index space exceeds 64 bits");
    }
    r *= base;
  }
  return r;
}

std::uint64_t multinomial(std::span<const unsigned> counts) {
  unsigned __int128 r = 1;
  unsigned total = 0;
  for (unsigned c : counts) {
    for (unsigned i = 1; i <= c; ++i) {
      ++total;
      r = r * total / i;
    }
  }
  return static_cast<std::uint64_t>(r);
}

/// A digit-pair composition: how many of the k digit positions carry each
/// (row digit, column digit) cell. Every entry of Theta^k is the product of
/// theta over its composition, so pairs are grouped by composition and the
/// likelihood only touches each group once.
class CompositionCodec {
 public:
  CompositionCodec(std::size_t n0, unsigned k) : n0_(n0), k_(k), weight_(n0 * n0) {
    const long double radix = static_cast<long double>(k) + 1.0L;
    if (std::pow(radix, static_cast<long double>(n0 * n0)) >= 0x1.0p63L) {
      throw std::invalid_argument("Kronecker power too large for n0 = " + std::to_string(n0));
    }
    std::uint64_t w = 1;
    for (auto& x : weight_) {
      x = w;
      w *= k + 1;
    }
  }

  std::size_t cells() const { return weight_.size(); }
  std::uint64_t weight(std::size_t i, std::size_t j) const { return weight_[i * n0_ + j]; }

  std::uint64_t key(std::uint64_t a, std::uint64_t b) const {
    std::uint64_t key = 0;
    for (unsigned d = 0; d < k_; ++d) {
      key += weight_[(a % n0_) * n0_ + b % n0_];
      a /= n0_;
      b /= n0_;
    }
    return key;
  }

  void decode(std::uint64_t key, std::span<std::uint16_t> out) const {
    for (std::size_t c = 0; c < weight_.size(); ++c) {
      out[c] = static_cast<std::uint16_t>(key % (k_ + 1));
      key /= k_ + 1;
    }
  }

 private:
  std::size_t n0_;
  unsigned k_;
  std::vector<std::uint64_t> weight_;
};

struct ClassTable {
  std::size_t cells = 0;
  std::vector<double> weight;
  std::vector<std::uint16_t> counts;  // classes x cells

  static ClassTable from_map(const CompositionCodec& codec,
                             const std::unordered_map<std::uint64_t, double>& m) {
    std::vector<std::pair<std::uint64_t, double>> sorted(m.begin(), m.end());
    std::sort(sorted.begin(), sorted.end());
    ClassTable t;
    t.cells = codec.cells();
    for (const auto& [key, w] : sorted) {
      if (w == 0.0) continue;
      t.weight.push_back(w);
      t.counts.resize(t.counts.size() + t.cells);
      codec.decode(key, std::span(t.counts).last(t.cells));
    }
    return t;
  }

  std::size_t size() const { return weight.size(); }
  std::span<const std::uint16_t> row(std::size_t i) const {
    return std::span(counts).subspan(i * cells, cells);
  }
};

/// Counts of unordered index pairs a != b inside [0, limit), grouped by
/// composition, as weights w with sum_{a<b} g(x_ab) = sum_class w g(x_class)
/// for symmetric theta. Digit DP with tightness flags against `limit`.
ClassTable prefix_pair_classes(const CompositionCodec& codec, std::size_t n0, unsigned k,
                               std::uint64_t limit) {
  const bool bounded = limit < checked_pow(n0, k);
  std::vector<unsigned> limit_digits(k);
  for (unsigned d = 0; d < k; ++d) {
    limit_digits[d] = static_cast<unsigned>((limit / checked_pow(n0, d)) % n0);
  }

  using Counter = std::unordered_map<std::uint64_t, double>;
  std::array<Counter, 4> ordered;
  std::array<Counter, 2> diag;
  ordered[bounded ? 3 : 0][0] = 1.0;
  diag[bounded ? 1 : 0][0] = 1.0;

  for (unsigned step = 0; step < k; ++step) {
    const unsigned d = k - 1 - step;
    const unsigned bound = limit_digits[d];
    std::array<Counter, 4> next;
    for (int s = 0; s < 4; ++s) {
      const bool ta = s & 2, tb = s & 1;
      for (const auto& [key, cnt] : ordered[s]) {
        for (unsigned i = 0; i < n0; ++i) {
          if (ta && i > bound) break;
          for (unsigned j = 0; j < n0; ++j) {
            if (tb && j > bound) break;
            const int ns = ((ta && i == bound) ? 2 : 0) | ((tb && j == bound) ? 1 : 0);
            next[ns][key + codec.weight(i, j)] += cnt;
          }
        }
      }
    }
    ordered = std::move(next);

    std::array<Counter, 2> next_diag;
    for (int s = 0; s < 2; ++s) {
      for (const auto& [key, cnt] : diag[s]) {
        for (unsigned i = 0; i < n0; ++i) {
          if (s && i > bound) break;
          next_diag[(s && i == bound) ? 1 : 0][key + codec.weight(i, i)] += cnt;
        }
      }
    }
    diag = std::move(next_diag);
  }

  Counter pairs = std::move(ordered[0]);
  for (const auto& [key, cnt] : diag[0]) pairs[key] -= cnt;
  for (auto& [key, cnt] : pairs) cnt *= 0.5;
  return ClassTable::from_map(codec, pairs);
}

/// Edge and pair groupings of the Kronecker log-likelihood for one graph and
/// placement; evaluation is then independent of the graph size.
struct LikelihoodTerms {
  std::size_t n0 = 0;
  ClassTable edges;
  ClassTable pairs;
  bool taylor = false;

  double value(std::span<const double> theta) const {
    std::vector<double> log_theta(theta.size());
    std::transform(theta.begin(), theta.end(), log_theta.begin(),
                   [](double t) { return std::log(t); });
    double total = 0.0;
    for (std::size_t c = 0; c < edges.size(); ++c) {
      const double lx = log_entry(edges.row(c), log_theta);
      total += edges.weight[c] * (lx - std::log1p(-std::exp(lx)));
    }
    for (std::size_t c = 0; c < pairs.size(); ++c) {
      const double x = std::exp(log_entry(pairs.row(c), log_theta));
      total += pairs.weight[c] * (taylor ? -x - 0.5 * x * x : std::log1p(-x));
    }
    return total;
  }

  std::vector<double> gradient(std::span<const double> theta) const {
    std::vector<double> log_theta(theta.size());
    std::transform(theta.begin(), theta.end(), log_theta.begin(),
                   [](double t) { return std::log(t); });
    std::vector<double> grad(theta.size(), 0.0);
    // d x / d theta_c = m_c x / theta_c
    auto accumulate = [&](std::span<const std::uint16_t> m, double coef_times_x) {
      for (std::size_t c = 0; c < m.size(); ++c) {
        if (m[c]) grad[c] += coef_times_x * m[c] / theta[c];
      }
    };
    for (std::size_t c = 0; c < edges.size(); ++c) {
      const double x = std::exp(log_entry(edges.row(c), log_theta));
      // d/dx [log x - log(1 - x)] = 1 / (x (1 - x))
      accumulate(edges.row(c), edges.weight[c] / (1.0 - x));
    }
    for (std::size_t c = 0; c < pairs.size(); ++c) {
      const double x = std::exp(log_entry(pairs.row(c), log_theta));
      const double dg = taylor ? -(1.0 + x) : -1.0 / (1.0 - x);
      accumulate(pairs.row(c), pairs.weight[c] * dg * x);
    }
    // Symmetric part: the directional derivative along symmetric perturbations.
    std::vector<double> sym(grad.size());
    for (std::size_t i = 0; i < n0; ++i) {
      for (std::size_t j = 0; j < n0; ++j) {
        sym[i * n0 + j] = 0.5 * (grad[i * n0 + j] + grad[j * n0 + i]);
      }
    }
    return sym;
  }

  static double log_entry(std::span<const std::uint16_t> m, std::span<const double> log_theta) {
    double s = 0.0;
    for (std::size_t c = 0; c < m.size(); ++c) {
      if (m[c]) s += m[c] * log_theta[c];
    }
    return s;
  }
};

bool is_prefix_image(std::span<const std::uint64_t> sigma) {
  std::vector<bool> seen(sigma.size(), false);
  for (auto s : sigma) {
    if (s >= sigma.size() || seen[s]) return false;
    seen[s] = true;
  }
  return true;
}

ClassTable edge_classes(const CompositionCodec& codec, const Graph& g,
                        std::span<const std::uint64_t> sigma) {
  std::unordered_map<std::uint64_t, double> m;
  for (NodeId u = 0; u < g.n(); ++u) {
    for (NodeId v : g.neighbors(u)) {
      if (u < v) m[codec.key(sigma[u], sigma[v])] += 1.0;
    }
  }
  return ClassTable::from_map(codec, m);
}

ClassTable all_pair_classes(const CompositionCodec& codec, std::span<const std::uint64_t> sigma) {
  std::unordered_map<std::uint64_t, double> m;
  for (std::size_t u = 0; u < sigma.size(); ++u) {
    for (std::size_t v = u + 1; v < sigma.size(); ++v) m[codec.key(sigma[u], sigma[v])] += 1.0;
  }
  return ClassTable::from_map(codec, m);
}

bool use_taylor(ZeroSumMode mode, std::uint64_t index_space) {
  switch (mode) {
    case ZeroSumMode::exact:
      return false;
    case ZeroSumMode::taylor:
      return true;
    case ZeroSumMode::automatic:
      break;
  }
  return index_space > kExactZeroSumLimit;
}

void check_likelihood_args(const Graph& full, const NodeMapping& mapping,
                           const KroneckerModel& model) {
  if (mapping.sigma.size() != full.n()) {
    throw std::invalid_argument("mapping length does not match graph size");
  }
  if (!mapping.valid(model.size())) {
    throw std::invalid_argument("mapping is not an injective placement into Theta^k");
  }
  if (!model.symmetric()) {
    throw std::invalid_argument("Kronecker likelihood requires a symmetric theta");
  }
}

LikelihoodTerms make_terms(const Graph& full, const NodeMapping& mapping,
                           const KroneckerModel& model, ZeroSumMode mode) {
  check_likelihood_args(full, mapping, model);
  const CompositionCodec codec(model.n0, model.k);
  LikelihoodTerms t;
  t.n0 = model.n0;
  t.taylor = use_taylor(mode, model.size());
  t.edges = edge_classes(codec, full, mapping.sigma);
  t.pairs = is_prefix_image(mapping.sigma)
                ? prefix_pair_classes(codec, model.n0, model.k, mapping.sigma.size())
                : all_pair_classes(codec, mapping.sigma);
  return t;
}

/// Per-row log-odds lookups used by the placement sampler.
class EntryEvaluator {
 public:
  explicit EntryEvaluator(const KroneckerModel& model)
      : n0_(model.n0), k_(model.k), log_theta_(model.theta.size()) {
    for (std::size_t c = 0; c < log_theta_.size(); ++c) log_theta_[c] = std::log(model.theta[c]);
  }

  double log_entry(std::uint64_t a, std::uint64_t b) const {
    double s = 0.0;
    for (unsigned d = 0; d < k_; ++d) {
      s += log_theta_[(a % n0_) * n0_ + b % n0_];
      a /= n0_;
      b /= n0_;
    }
    return s;
  }

  /// log x - log(1 - x)
  double log_odds(std::uint64_t a, std::uint64_t b) const {
    const double lx = log_entry(a, b);
    return lx - std::log1p(-std::exp(lx));
  }

 private:
  std::size_t n0_;
  unsigned k_;
  std::vector<double> log_theta_;
};

void sample_exhaustive(const KroneckerModel& model, std::span<const std::uint64_t> sigma,
                       std::size_t observed, Rng& rng, MissingBlockSample& out) {
  const EntryEvaluator eval(model);
  const std::size_t total = sigma.size();
  for (std::size_t u = 0; u < total; ++u) {
    for (std::size_t v = std::max(u + 1, observed); v < total; ++v) {
      ++out.trials;
      if (rng.uniform() < std::exp(eval.log_entry(sigma[u], sigma[v]))) {
        out.edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
      }
    }
  }
}

/// One missing row: entries of row `a` that share a composition have equal
/// probability, so each class is traversed with geometric skips and only the
/// successes are unranked into column indices.
class GroupedRowSampler {
 public:
  GroupedRowSampler(const KroneckerModel& model, std::span<const std::uint64_t> sigma)
      : model_(model), log_theta_(model.theta.size()), powers_(model.k) {
    for (std::size_t c = 0; c < log_theta_.size(); ++c) log_theta_[c] = std::log(model.theta[c]);
    for (unsigned d = 0; d < model.k; ++d) powers_[d] = checked_pow(model.n0, d);
    inverse_.reserve(sigma.size());
    for (std::size_t u = 0; u < sigma.size(); ++u) {
      inverse_.emplace_back(sigma[u], static_cast<NodeId>(u));
    }
    std::sort(inverse_.begin(), inverse_.end());
  }

  /// Samples pairs (v, u) with v < u for the node at position u.
  void sample(NodeId u, std::uint64_t a, Rng& rng, std::vector<Edge>& out) {
    const std::size_t n0 = model_.n0;
    groups_.assign(n0, {});
    for (unsigned d = 0; d < model_.k; ++d) groups_[(a / powers_[d]) % n0].positions.push_back(d);
    for (std::size_t r = 0; r < n0; ++r) enumerate_compositions(r);

    // Odometer over the per-group composition choices.
    std::vector<std::size_t> pick(n0, 0);
    while (true) {
      double log_p = 0.0;
      std::uint64_t size = 1;
      for (std::size_t r = 0; r < n0; ++r) {
        log_p += groups_[r].log_p[pick[r]];
        size *= groups_[r].size[pick[r]];
      }
      const double p = std::exp(log_p);
      double pos = -1.0;
      while (true) {
        pos += 1.0 + rng.geometric_failures(p);
        if (!(pos < static_cast<double>(size))) break;
        const std::uint64_t b = unrank(pick, static_cast<std::uint64_t>(pos));
        auto it = std::lower_bound(inverse_.begin(), inverse_.end(), std::make_pair(b, NodeId{0}));
        if (it != inverse_.end() && it->first == b && it->second < u) out.emplace_back(it->second, u);
      }
      std::size_t r = 0;
      while (r < n0 && ++pick[r] == groups_[r].comps.size()) pick[r++] = 0;
      if (r == n0) break;
    }
  }

 private:
  struct Group {
    std::vector<unsigned> positions;
    std::vector<std::vector<unsigned>> comps;
    std::vector<double> log_p;
    std::vector<std::uint64_t> size;
  };

  void enumerate_compositions(std::size_t r) {
    Group& g = groups_[r];
    const std::size_t n0 = model_.n0;
    std::vector<unsigned> m(n0, 0);
    const unsigned total = static_cast<unsigned>(g.positions.size());
    // Iterate compositions of `total` into n0 parts.
    std::function<void(std::size_t, unsigned)> rec = [&](std::size_t j, unsigned left) {
      if (j + 1 == n0) {
        m[j] = left;
        double lp = 0.0;
        for (std::size_t c = 0; c < n0; ++c) lp += m[c] * log_theta_[r * n0 + c];
        g.comps.push_back(m);
        g.log_p.push_back(lp);
        g.size.push_back(multinomial(m));
        return;
      }
      for (unsigned x = 0; x <= left; ++x) {
        m[j] = x;
        rec(j + 1, left - x);
      }
    };
    rec(0, total);
  }

  std::uint64_t unrank(std::span<const std::size_t> pick, std::uint64_t rank) const {
    std::uint64_t b = 0;
    for (std::size_t r = 0; r < groups_.size(); ++r) {
      const Group& g = groups_[r];
      const std::uint64_t size = g.size[pick[r]];
      std::uint64_t local = rank % size;
      rank /= size;
      std::vector<unsigned> rem = g.comps[pick[r]];
      for (unsigned pos : g.positions) {
        for (std::size_t j = 0; j < rem.size(); ++j) {
          if (rem[j] == 0) continue;
          --rem[j];
          const std::uint64_t c = multinomial(rem);
          if (local < c) {
            b += j * powers_[pos];
            break;
          }
          local -= c;
          ++rem[j];
        }
      }
    }
    return b;
  }

  const KroneckerModel& model_;
  std::vector<double> log_theta_;
  std::vector<std::uint64_t> powers_;
  std::vector<std::pair<std::uint64_t, NodeId>> inverse_;
  std::vector<Group> groups_;
};

/// Initial placement: observed nodes by descending degree onto indices by
/// descending expected degree, with missing nodes spread evenly in between.
std::vector<std::uint64_t> degree_placement(const Graph& observed, std::size_t total,
                                            const KroneckerModel& model) {
  std::vector<double> expected(total);
  for (std::uint64_t a = 0; a < total; ++a) {
    double prod = 1.0;
    std::uint64_t x = a;
    for (unsigned d = 0; d < model.k; ++d) {
      const std::size_t i = x % model.n0;
      x /= model.n0;
      double row = 0.0;
      for (std::size_t j = 0; j < model.n0; ++j) row += model.at(i, j);
      prod *= row;
    }
    expected[a] = prod;
  }
  std::vector<std::uint64_t> slots(total);
  std::iota(slots.begin(), slots.end(), 0);
  std::stable_sort(slots.begin(), slots.end(),
                   [&](auto a, auto b) { return expected[a] > expected[b]; });

  std::vector<NodeId> by_degree(observed.n());
  std::iota(by_degree.begin(), by_degree.end(), 0);
  std::stable_sort(by_degree.begin(), by_degree.end(),
                   [&](NodeId a, NodeId b) { return observed.degree(a) > observed.degree(b); });

  const std::size_t missing = total - observed.n();
  std::vector<std::uint64_t> sigma(total);
  std::size_t next_obs = 0, next_missing = observed.n();
  for (std::size_t t = 0; t < total; ++t) {
    const bool take_missing = (t + 1) * missing / total > t * missing / total;
    if (take_missing) {
      sigma[next_missing++] = slots[t];
    } else {
      sigma[by_degree[next_obs++]] = slots[t];
    }
  }
  return sigma;
}

std::vector<double> project(std::vector<double> theta, std::size_t n0) {
  for (std::size_t i = 0; i < n0; ++i) {
    for (std::size_t j = i; j < n0; ++j) {
      const double avg = 0.5 * (theta[i * n0 + j] + theta[j * n0 + i]);
      const double v = std::clamp(avg, kThetaFloor, 1.0 - kThetaFloor);
      theta[i * n0 + j] = v;
      theta[j * n0 + i] = v;
    }
  }
  return theta;
}

}  // namespace

KroneckerModel::KroneckerModel(std::size_t n0_, unsigned k_, std::vector<double> theta_)
    : n0(n0_), k(k_), theta(std::move(theta_)) {
  if (n0 < 1 || k < 1) throw std::invalid_argument("Kronecker model needs n0 >= 1 and k >= 1");
  if (theta.size() != n0 * n0) throw std::invalid_argument("theta must hold n0 * n0 entries");
  for (double t : theta) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("theta entries must lie in [0, 1]");
  }
  checked_pow(n0, k);
}

std::uint64_t KroneckerModel::size() const { return checked_pow(n0, k); }

bool KroneckerModel::symmetric(double tol) const {
  for (std::size_t i = 0; i < n0; ++i) {
    for (std::size_t j = i + 1; j < n0; ++j) {
      if (std::abs(at(i, j) - at(j, i)) > tol) return false;
    }
  }
  return true;
}

unsigned kron_power_for(std::size_t n0, std::size_t nodes) {
  if (n0 < 2) throw std::invalid_argument("n0 must be at least 2");
  unsigned k = 1;
  std::uint64_t side = n0;
  while (side < nodes) {
    side *= n0;
    ++k;
  }
  return k;
}

double kron_entry(const KroneckerModel& model, std::uint64_t a, std::uint64_t b) {
  const std::uint64_t side = model.size();
  if (a >= side || b >= side) {
    throw std::invalid_argument("Kronecker index out of range: (" + std::to_string(a) + ", " +
                                std::to_string(b) + ") for side " + std::to_string(side));
  }
  double p = 1.0;
  for (unsigned d = 0; d < model.k; ++d) {
    p *= model.at(a % model.n0, b % model.n0);
    a /= model.n0;
    b /= model.n0;
  }
  return p;
}

NodeMapping NodeMapping::identity(std::size_t nodes, std::size_t observed) {
  NodeMapping m;
  m.sigma.resize(nodes);
  std::iota(m.sigma.begin(), m.sigma.end(), 0);
  m.observed_count = observed;
  return m;
}

bool NodeMapping::valid(std::uint64_t index_space) const {
  if (observed_count > sigma.size()) return false;
  std::vector<std::uint64_t> sorted = sigma;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) return false;
  return sorted.empty() || sorted.back() < index_space;
}

double kron_log_likelihood(const Graph& full, const NodeMapping& mapping,
                           const KroneckerModel& model, ZeroSumMode mode) {
  return make_terms(full, mapping, model, mode).value(model.theta);
}

std::vector<double> kron_log_likelihood_gradient(const Graph& full, const NodeMapping& mapping,
                                                 const KroneckerModel& model, ZeroSumMode mode) {
  return make_terms(full, mapping, model, mode).gradient(model.theta);
}

MissingBlockSample sample_missing_block(const KroneckerModel& model,
                                        std::span<const std::uint64_t> sigma,
                                        std::size_t observed, Rng& rng, BlockSampler sampler) {
  if (observed > sigma.size()) throw std::invalid_argument("observed count exceeds mapping");
  const std::uint64_t missing = sigma.size() - observed;
  MissingBlockSample out;
  const std::uint64_t pairs = missing * observed + missing * (missing - (missing > 0)) / 2;
  if (sampler == BlockSampler::automatic) {
    sampler = (pairs <= kExhaustivePairLimit || !model.symmetric()) ? BlockSampler::exhaustive
                                                                    : BlockSampler::grouped;
  }
  if (sampler == BlockSampler::exhaustive) {
    sample_exhaustive(model, sigma, observed, rng, out);
    return out;
  }
  if (!model.symmetric()) throw std::invalid_argument("grouped sampler requires a symmetric theta");
  GroupedRowSampler row_sampler(model, sigma);
  for (std::size_t u = observed; u < sigma.size(); ++u) {
    row_sampler.sample(static_cast<NodeId>(u), sigma[u], rng, out.edges);
  }
  out.trials = pairs;
  std::sort(out.edges.begin(), out.edges.end());
  return out;
}

std::vector<double> random_theta_init(std::size_t n0, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> theta(n0 * n0);
  for (std::size_t i = 0; i < n0; ++i) {
    for (std::size_t j = i; j < n0; ++j) {
      const double v = rng.uniform(0.25, 0.75);
      theta[i * n0 + j] = v;
      theta[j * n0 + i] = v;
    }
  }
  return theta;
}

KronFit kronem_fit(const Graph& observed, std::size_t m_missing, std::size_t n0,
                   std::span<const double> theta_init, const EmConfig& cfg) {
  if (theta_init.size() != n0 * n0) throw std::invalid_argument("theta_init must be n0 x n0");
  for (double t : theta_init) {
    if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("theta_init entries must lie in (0, 1)");
  }
  if (cfg.em_iters < 1) throw std::invalid_argument("em_iters must be at least 1");
  if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (cfg.mcmc_samples && *cfg.mcmc_samples < 1) {
    throw std::invalid_argument("mcmc_samples must be at least 1");
  }

  const std::size_t total = observed.n() + m_missing;
  const std::size_t n_obs = observed.n();
  const unsigned k = kron_power_for(n0, std::max<std::size_t>(total, 1));
  KronFit fit;
  fit.model = KroneckerModel(n0, k, project({theta_init.begin(), theta_init.end()}, n0));
  fit.mapping.observed_count = n_obs;
  fit.mapping.sigma = degree_placement(observed, total, fit.model);
  if (total < 2) return fit;

  Rng rng(cfg.seed);
  const CompositionCodec codec(n0, k);
  LikelihoodTerms terms;
  terms.n0 = n0;
  terms.taylor = use_taylor(cfg.zero_sum, fit.model.size());
  terms.pairs = prefix_pair_classes(codec, n0, k, total);

  const auto observed_edges = observed.edges();
  const std::size_t proposals = cfg.mcmc_samples.value_or(10 * total);
  double step = cfg.learning_rate;

  for (unsigned iter = 0; iter < cfg.em_iters; ++iter) {
    EmIteration record;
    auto& sigma = fit.mapping.sigma;

    // E-step, part 1: redraw the missing blocks given the current model.
    std::vector<std::vector<NodeId>> adj(total);
    for (const auto& [u, v] : observed_edges) {
      adj[u].push_back(v);
      adj[v].push_back(u);
    }
    std::vector<Edge> missing_edges;
    if (m_missing > 0) {
      missing_edges = sample_missing_block(fit.model, sigma, n_obs, rng, cfg.sampler).edges;
      for (const auto& [u, v] : missing_edges) {
        adj[u].push_back(v);
        adj[v].push_back(u);
      }
    }

    // E-step, part 2: Metropolis-Hastings over transpositions of sigma.
    // The non-edge sum over the fixed index prefix does not depend on sigma,
    // so a swap only changes the log-odds of edges incident to the pair.
    const EntryEvaluator eval(fit.model);
    std::size_t accepted = 0;
    for (std::size_t s = 0; s < proposals; ++s) {
      const auto u = static_cast<NodeId>(rng.below(total));
      auto v = static_cast<NodeId>(rng.below(total - 1));
      if (v >= u) ++v;
      const std::uint64_t a = sigma[u], b = sigma[v];
      double delta = 0.0;
      for (NodeId w : adj[u]) {
        if (w != v) delta += eval.log_odds(b, sigma[w]) - eval.log_odds(a, sigma[w]);
      }
      for (NodeId w : adj[v]) {
        if (w != u) delta += eval.log_odds(a, sigma[w]) - eval.log_odds(b, sigma[w]);
      }
      if (delta >= 0.0 || std::log(rng.uniform_open0()) < delta) {
        std::swap(sigma[u], sigma[v]);
        ++accepted;
      }
    }
    record.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(proposals);

    // M-step: projected gradient ascent with backtracking on the sample.
    std::vector<Edge> full_edges = observed_edges;
    full_edges.insert(full_edges.end(), missing_edges.begin(), missing_edges.end());
    const Graph full = Graph::from_edges(total, full_edges);
    terms.edges = edge_classes(codec, full, sigma);

    std::vector<double> theta = fit.model.theta;
    double current = terms.value(theta);
    record.log_likelihood.push_back(current);
    for (unsigned g = 0; g < cfg.grad_steps; ++g) {
      const auto grad = terms.gradient(theta);
      bool moved = false;
      for (int attempt = 0; attempt < 40; ++attempt) {
        std::vector<double> trial(theta.size());
        for (std::size_t c = 0; c < theta.size(); ++c) trial[c] = theta[c] + step * grad[c];
        trial = project(std::move(trial), n0);
        const double value = terms.value(trial);
        if (value >= current) {
          moved = trial != theta;
          theta = std::move(trial);
          current = value;
          step *= 2.0;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
      record.log_likelihood.push_back(current);
    }
    fit.model.theta = theta;
    fit.trace.push_back(std::move(record));
  }
  return fit;
}

}  // namespace kromfac
