#include "kromfac/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <stdexcept>
#include <thread>

#include "kromfac/rng.hpp"

namespace kromfac {

namespace {

void validate(const KromfacConfig& cfg) {
  if (cfg.c < 1) throw std::invalid_argument("community count must be at least 1");
  if (cfg.n0 < 2) throw std::invalid_argument("n0 must be at least 2");
  if (!(cfg.lambda_coef > 0.0)) throw std::invalid_argument("lambda_coef must be positive");
  if (cfg.lambda_override && !(*cfg.lambda_override >= 0.0))
    throw std::invalid_argument("lambda override must be nonnegative");
  if (cfg.epsilon && !(*cfg.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (cfg.delta && !(*cfg.delta > 0.0)) throw std::invalid_argument("delta must be positive");
}

DetectConfig detect_at(const KromfacConfig& cfg, std::size_t i) {
  DetectConfig d = cfg.detect;
  d.seed = detection_seed(cfg, i);
  return d;
}

struct Candidate {
  TraceRecord record;
  Detection detection;
  Cover cover;
  double delta = 0.0;
};

/// Runs fn(0..count-1) on up to `threads` workers. Each index is handled by
/// exactly one worker, so results only depend on the index.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), count);
  if (workers <= 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k; (k = next.fetch_add(1)) < count;) {
        try {
          fn(k);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

double regularized_loss(double d, std::size_t i, double lambda) {
  return d - lambda * std::log(static_cast<double>(i) + 1.0);
}

double resolve_lambda(const KromfacConfig& cfg, std::size_t n) {
  return cfg.lambda_override.value_or(cfg.lambda_coef * static_cast<double>(n));
}

std::uint64_t detection_seed(const KromfacConfig& cfg, std::size_t i) {
  return derive_seed(cfg.seed, "detect", i);
}

double resolve_delta(const std::optional<double>& delta, const Graph& g) {
  if (delta) return *delta;
  return g.n() < 2 ? 1e-6 : default_delta(g);
}

std::pair<KronFit, RecoveredGraph> recover_missing(const Graph& observed, const KromfacConfig& cfg) {
  validate(cfg);
  if (cfg.m == 0) throw std::invalid_argument("nothing to recover when M = 0");
  const auto theta = cfg.theta_init.value_or(random_theta_init(cfg.n0, derive_seed(cfg.seed, "theta", 0)));
  EmConfig em = cfg.em;
  em.seed = derive_seed(cfg.seed, "em", 0);
  KronFit fit = kronem_fit(observed, cfg.m, cfg.n0, theta, em);
  RecoveredGraph rg =
      realize_missing(observed, fit.model, fit.mapping, cfg.m, derive_seed(cfg.seed, "realize", 0), em.sampler);
  return {std::move(fit), std::move(rg)};
}

KromfacResult run_kromfac(const Graph& observed, const KromfacConfig& cfg) {
  validate(cfg);
  if (observed.n() == 0) throw std::invalid_argument("observed graph is empty");
  KromfacResult result;
  if (cfg.m > 0) {
    auto [fit, rg] = recover_missing(observed, cfg);
    result.fit = std::move(fit);
    result.recovered = std::move(rg);
    const double eps = cfg.epsilon.value_or(std::max(0.5, default_epsilon(result.recovered)));
    result.ranking = select_influential(result.recovered, eps);
  } else {
    result.recovered.base = observed;
    result.ranking.epsilon = cfg.epsilon.value_or(0.5);
  }

  const std::size_t h = result.ranking.h;
  if (h == 0 && !cfg.include_i0) {
    throw std::invalid_argument("no influential node was selected and i = 0 is excluded");
  }
  std::vector<std::size_t> candidates;
  for (std::size_t i = cfg.include_i0 ? 0 : 1; i <= h; ++i) candidates.push_back(i);

  SearchTrace& trace = result.trace;
  trace.lambda = resolve_lambda(cfg, observed.n());
  trace.h = h;
  trace.degenerate = h == 0;

  std::vector<Candidate> runs(candidates.size());
  parallel_for(candidates.size(), cfg.threads, [&](std::size_t k) {
    const std::size_t i = candidates[k];
    const Graph g = as_graph(result.recovered, i, result.ranking.order);
    Candidate& run = runs[k];
    run.detection = commun_det(g, cfg.c, detect_at(cfg, i));
    run.record = {i, run.detection.loss, regularized_loss(run.detection.loss, i, trace.lambda),
                  run.detection.converged};
    run.delta = resolve_delta(cfg.delta, g);
    run.cover = hard_decision(run.detection.f, run.delta);
  });

  std::size_t best = 0;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    trace.records.push_back(runs[k].record);
    if (runs[k].record.reg_loss < runs[best].record.reg_loss) best = k;
  }
  trace.i_hat = runs[best].record.i;
  trace.rows = runs[best].detection.f.rows();
  trace.cols = runs[best].detection.f.cols();
  result.delta = runs[best].delta;
  result.cover = runs[best].cover;
  for (auto& run : runs) result.covers.push_back(std::move(run.cover));
  return result;
}

Cover baseline1(const Graph& observed, std::size_t c, std::optional<double> delta, const DetectConfig& detect) {
  if (observed.n() == 0) throw std::invalid_argument("observed graph is empty");
  const auto det = commun_det(observed, c, detect);
  return hard_decision(det.f, resolve_delta(delta, observed));
}

Cover baseline1(const Graph& observed, const KromfacConfig& cfg) {
  validate(cfg);
  return baseline1(observed, cfg.c, cfg.delta, detect_at(cfg, 0));
}

Cover baseline2(const RecoveredGraph& recovered, const KromfacConfig& cfg) {
  validate(cfg);
  const Graph full = recovered.full();
  if (full.n() == 0) throw std::invalid_argument("recovered graph is empty");
  const auto det = commun_det(full, cfg.c, detect_at(cfg, recovered.missing));
  return hard_decision(det.f, resolve_delta(cfg.delta, full));
}

Cover baseline2(const Graph& observed, const KromfacConfig& cfg) {
  if (cfg.m == 0) {
    RecoveredGraph plain;
    plain.base = observed;
    return baseline2(plain, cfg);
  }
  return baseline2(recover_missing(observed, cfg).second, cfg);
}

}  // namespace kromfac
