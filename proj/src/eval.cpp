#include "kromfac/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <deque>
#include <numeric>
#include <stdexcept>

#include "kromfac/rng.hpp"

namespace kromfac {

namespace {

void check_spec(const SampleSpec& spec) {
  if (!(spec.fraction > 0.0 && spec.fraction <= 1.0)) throw std::invalid_argument("fraction must be in (0, 1]");
  if (spec.strategy == SampleStrategy::ff && !(spec.p_forward > 0.0 && spec.p_forward < 1.0))
    throw std::invalid_argument("p_forward must be in (0, 1)");
}

Sample finish(const Graph& g, std::vector<NodeId> kept) {
  auto sub = induced_subgraph(g, kept);
  return {std::move(sub.graph), std::move(sub.original)};
}

double plogp(double p) { return p > 0.0 ? -p * std::log(p) : 0.0; }

double binary_entropy(double size, double n) { return plogp(size / n) + plogp(1.0 - size / n); }

std::vector<std::vector<NodeId>> canonical(const Cover& c) {
  auto comms = c.communities;
  for (auto& comm : comms) {
    std::sort(comm.begin(), comm.end());
    comm.erase(std::unique(comm.begin(), comm.end()), comm.end());
  }
  std::sort(comms.begin(), comms.end());
  return comms;
}

/// Normalized conditional entropy H(X|Y) of the cover x given y, averaged
/// over the communities of x with nonzero entropy.
double normalized_conditional(const std::vector<std::vector<NodeId>>& x,
                              const std::vector<std::vector<NodeId>>& y, std::size_t universe,
                              bool covers_equal) {
  const double n = static_cast<double>(universe);
  std::vector<std::vector<std::uint32_t>> member_of(universe);
  for (std::uint32_t l = 0; l < y.size(); ++l)
    for (NodeId u : y[l]) member_of[u].push_back(l);

  std::vector<double> terms;
  std::vector<std::size_t> overlap(y.size());
  for (const auto& xk : x) {
    const double hx = binary_entropy(static_cast<double>(xk.size()), n);
    if (hx <= 0.0) continue;
    std::fill(overlap.begin(), overlap.end(), 0);
    for (NodeId u : xk)
      for (auto l : member_of[u]) ++overlap[l];
    double best = hx;
    for (std::size_t l = 0; l < y.size(); ++l) {
      const double a = static_cast<double>(overlap[l]);
      const double p11 = a / n;
      const double p10 = (static_cast<double>(xk.size()) - a) / n;
      const double p01 = (static_cast<double>(y[l].size()) - a) / n;
      const double p00 = 1.0 - p11 - p10 - p01;
      const double agree = plogp(p11) + plogp(p00);
      const double disagree = plogp(p10) + plogp(p01);
      if (!(agree > disagree)) continue;
      const double conditional = agree + disagree - binary_entropy(static_cast<double>(y[l].size()), n);
      best = std::min(best, conditional);
    }
    terms.push_back(std::clamp(best / hx, 0.0, 1.0));
  }
  if (terms.empty()) return covers_equal ? 0.0 : 1.0;
  std::sort(terms.begin(), terms.end());
  double sum = 0.0;
  for (double t : terms) sum += t;
  return sum / static_cast<double>(terms.size());
}

Cover remap_truth(const Cover& truth, const std::vector<NodeId>& kept, std::vector<std::string>& notes) {
  std::vector<NodeId> new_id(truth.universe, static_cast<NodeId>(-1));
  for (std::size_t k = 0; k < kept.size(); ++k) {
    if (kept[k] < new_id.size()) new_id[kept[k]] = static_cast<NodeId>(k);
  }
  Cover out;
  out.universe = kept.size();
  std::size_t dropped = 0;
  for (const auto& comm : truth.communities) {
    std::vector<NodeId> members;
    for (NodeId u : comm)
      if (u < new_id.size() && new_id[u] != static_cast<NodeId>(-1)) members.push_back(new_id[u]);
    if (members.empty()) {
      ++dropped;
      continue;
    }
    std::sort(members.begin(), members.end());
    out.communities.push_back(std::move(members));
  }
  if (dropped) notes.push_back("dropped " + std::to_string(dropped) + " truth communities with no kept node");
  return out;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::size_t sample_size(std::size_t n, double fraction) {
  const double raw = fraction * static_cast<double>(n);
  const auto size = static_cast<std::size_t>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
  return std::min(size, n);
}

Sample rn_sample(const Graph& g, const SampleSpec& spec) {
  check_spec(spec);
  const std::size_t target = sample_size(g.n(), spec.fraction);
  std::vector<NodeId> nodes(g.n());
  std::iota(nodes.begin(), nodes.end(), NodeId{0});
  Rng rng(spec.seed);
  for (std::size_t k = 0; k < target; ++k) {
    const std::size_t j = k + rng.below(nodes.size() - k);
    std::swap(nodes[k], nodes[j]);
  }
  nodes.resize(target);
  return finish(g, std::move(nodes));
}

Sample ff_sample(const Graph& g, const SampleSpec& spec) {
  check_spec(spec);
  const std::size_t target = sample_size(g.n(), spec.fraction);
  Rng rng(spec.seed);
  // Unburned nodes live in pool[0, remaining); position[] tracks each slot.
  std::vector<NodeId> pool(g.n());
  std::iota(pool.begin(), pool.end(), NodeId{0});
  std::vector<std::size_t> position(g.n());
  std::iota(position.begin(), position.end(), std::size_t{0});
  std::size_t remaining = g.n();
  std::vector<NodeId> burned;
  burned.reserve(target);

  auto burn = [&](NodeId u) {
    const std::size_t at = position[u];
    const NodeId last = pool[remaining - 1];
    pool[at] = last;
    position[last] = at;
    pool[remaining - 1] = u;
    position[u] = remaining - 1;
    --remaining;
    burned.push_back(u);
  };
  auto is_burned = [&](NodeId u) { return position[u] >= remaining; };

  std::deque<NodeId> frontier;
  std::vector<NodeId> candidates;
  while (burned.size() < target) {
    const NodeId seed = pool[rng.below(remaining)];
    burn(seed);
    frontier.assign(1, seed);
    while (!frontier.empty() && burned.size() < target) {
      const NodeId w = frontier.front();
      frontier.pop_front();
      candidates.clear();
      for (NodeId v : g.neighbors(w))
        if (!is_burned(v)) candidates.push_back(v);
      const double draw = rng.geometric_failures(1.0 - spec.p_forward);
      const auto count = static_cast<std::size_t>(std::min(draw, static_cast<double>(candidates.size())));
      for (std::size_t k = 0; k < count && burned.size() < target; ++k) {
        const std::size_t j = k + rng.below(candidates.size() - k);
        std::swap(candidates[k], candidates[j]);
        burn(candidates[k]);
        frontier.push_back(candidates[k]);
      }
    }
  }
  return finish(g, std::move(burned));
}

Sample sample_graph(const Graph& g, const SampleSpec& spec) {
  return spec.strategy == SampleStrategy::rn ? rn_sample(g, spec) : ff_sample(g, spec);
}

double nmi(const Cover& x, const Cover& y) {
  if (x.universe != y.universe) throw std::invalid_argument("covers are defined over different universes");
  for (const Cover* c : {&x, &y})
    for (const auto& comm : c->communities)
      for (NodeId u : comm)
        if (u >= c->universe) throw std::invalid_argument("cover member outside its universe");
  const auto cx = canonical(x), cy = canonical(y);
  const bool equal = cx == cy;
  if (x.universe == 0) return equal ? 1.0 : 0.0;
  const double rx = normalized_conditional(cx, cy, x.universe, equal);
  const double ry = normalized_conditional(cy, cx, x.universe, equal);
  return std::clamp(1.0 - 0.5 * (rx + ry), 0.0, 1.0);
}

Planted agm_generate(const AffiliationMatrix& f, std::uint64_t seed, double threshold) {
  Rng rng(seed);
  std::vector<Edge> edges;
  for (NodeId u = 0; u < f.rows(); ++u) {
    for (NodeId v = u + 1; v < f.rows(); ++v) {
      const double p = agm_edge_prob(f.row(u), f.row(v));
      if (p > 0.0 && rng.bernoulli(p)) edges.emplace_back(u, v);
    }
  }
  return {Graph::from_edges(f.rows(), edges), hard_decision(f, threshold)};
}

AffiliationMatrix planted_affiliation(std::size_t n, std::size_t c, double overlap, double strength,
                                      std::uint64_t seed) {
  if (c == 0) throw std::invalid_argument("community count must be at least 1");
  if (!(strength >= 0.0)) throw std::invalid_argument("strength must be nonnegative");
  Rng rng(seed);
  AffiliationMatrix f(n, c);
  for (std::size_t u = 0; u < n; ++u) {
    const std::size_t first = rng.below(c);
    f.at(u, first) = strength;
    if (c > 1 && rng.bernoulli(overlap)) {
      const std::size_t second = (first + 1 + rng.below(c - 1)) % c;
      f.at(u, second) = strength;
    }
  }
  return f;
}

std::string graph_fingerprint(const Graph& g) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](std::uint64_t word) {
    for (int b = 0; b < 8; ++b) {
      h ^= (word >> (8 * b)) & 0xffu;
      h *= 0x100000001b3ULL;
    }
  };
  mix(g.n());
  for (const auto& [u, v] : g.edges()) mix((static_cast<std::uint64_t>(u) << 32) | v);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentRun run_experiment(const Graph& dataset, const Cover& truth, const SampleSpec& spec,
                             const KromfacConfig& cfg) {
  using clock = std::chrono::steady_clock;
  auto seconds_since = [](clock::time_point t) {
    return std::chrono::duration<double>(clock::now() - t).count();
  };
  if (truth.universe != dataset.n()) throw std::invalid_argument("truth cover does not match the dataset");

  ExperimentRun run;
  ExperimentReport& rep = run.report;
  rep.timestamp = utc_timestamp();
  rep.dataset = {dataset.n(), dataset.edge_count(), graph_fingerprint(dataset)};
  rep.sample = spec;

  auto t = clock::now();
  Sample sample = sample_graph(dataset, spec);
  rep.timing["sample"] = seconds_since(t);
  run.kept = sample.kept;
  const Graph& observed = sample.graph;
  const std::size_t n = observed.n();
  rep.observed = n;
  rep.missing = dataset.n() - n;
  const Cover observed_truth = remap_truth(truth, sample.kept, rep.notes);

  KromfacConfig kcfg = cfg;
  kcfg.m = rep.missing;
  rep.config = kcfg;

  t = clock::now();
  KromfacResult result = run_kromfac(observed, kcfg);
  rep.timing["kromfac"] = seconds_since(t);
  rep.trace = result.trace;
  run.kromfac = result.cover;
  run.order = result.ranking.order;

  t = clock::now();
  run.baseline1 = baseline1(observed, kcfg);
  rep.timing["baseline1"] = seconds_since(t);

  t = clock::now();
  run.baseline2 = baseline2(result.recovered, kcfg);
  rep.timing["baseline2"] = seconds_since(t);

  rep.nmi["kromfac"] = nmi(restrict_cover(run.kromfac, n), observed_truth);
  rep.nmi["baseline1"] = nmi(restrict_cover(run.baseline1, n), observed_truth);
  rep.nmi["baseline2"] = nmi(restrict_cover(run.baseline2, n), observed_truth);
  for (const auto& cover : result.covers) rep.curve_nmi.push_back(nmi(restrict_cover(cover, n), observed_truth));
  return run;
}

}  // namespace kromfac
