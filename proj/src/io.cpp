#include "kromfac/io.hpp"

#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace kromfac {

using nlohmann::json;

namespace {

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("invalid JSON: ") + e.what());
  }
}

/// Runs fn and converts nlohmann's type errors into std::invalid_argument.
template <typename Fn>
auto guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed document: ") + e.what());
  }
}

const char* strategy_name(SampleStrategy s) { return s == SampleStrategy::rn ? "rn" : "ff"; }

SampleStrategy strategy_from(const std::string& name) {
  if (name == "rn") return SampleStrategy::rn;
  if (name == "ff") return SampleStrategy::ff;
  throw std::invalid_argument("unknown sampling strategy '" + name + "'");
}

const char* zero_sum_name(ZeroSumMode m) {
  switch (m) {
    case ZeroSumMode::exact: return "exact";
    case ZeroSumMode::taylor: return "taylor";
    default: return "auto";
  }
}

ZeroSumMode zero_sum_from(const std::string& s) {
  if (s == "exact") return ZeroSumMode::exact;
  if (s == "taylor") return ZeroSumMode::taylor;
  if (s == "auto") return ZeroSumMode::automatic;
  throw std::invalid_argument("unknown zero-sum mode '" + s + "'");
}

const char* sampler_name(BlockSampler b) {
  switch (b) {
    case BlockSampler::exhaustive: return "exhaustive";
    case BlockSampler::grouped: return "grouped";
    default: return "auto";
  }
}

BlockSampler sampler_from(const std::string& s) {
  if (s == "exhaustive") return BlockSampler::exhaustive;
  if (s == "grouped") return BlockSampler::grouped;
  if (s == "auto") return BlockSampler::automatic;
  throw std::invalid_argument("unknown block sampler '" + s + "'");
}

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<T>();
}

json trace_json(const SearchTrace& t) {
  json records = json::array();
  for (const auto& r : t.records)
    records.push_back({{"i", r.i}, {"loss", r.loss}, {"reg_loss", r.reg_loss}, {"converged", r.converged}});
  return {{"lambda", t.lambda}, {"h", t.h},       {"trace", records},
          {"i_hat", t.i_hat},   {"rows", t.rows}, {"cols", t.cols},
          {"degenerate", t.degenerate}};
}

SearchTrace trace_from(const json& j) {
  SearchTrace t;
  t.lambda = j.at("lambda").get<double>();
  t.h = j.at("h").get<std::size_t>();
  t.i_hat = j.at("i_hat").get<std::size_t>();
  t.rows = j.value("rows", std::size_t{0});
  t.cols = j.value("cols", std::size_t{0});
  t.degenerate = j.value("degenerate", false);
  for (const auto& r : j.at("trace")) {
    t.records.push_back({r.at("i").get<std::size_t>(), r.at("loss").get<double>(), r.at("reg_loss").get<double>(),
                         r.value("converged", false)});
  }
  return t;
}

json config_json(const KromfacConfig& c) {
  return {{"m", c.m},
          {"c", c.c},
          {"n0", c.n0},
          {"lambda_coef", c.lambda_coef},
          {"lambda", optional_json(c.lambda_override)},
          {"epsilon", optional_json(c.epsilon)},
          {"delta", optional_json(c.delta)},
          {"include_i0", c.include_i0},
          {"seed", c.seed},
          {"threads", c.threads},
          {"theta_init", optional_json(c.theta_init)},
          {"em",
           {{"em_iters", c.em.em_iters},
            {"mcmc_samples", optional_json(c.em.mcmc_samples)},
            {"grad_steps", c.em.grad_steps},
            {"learning_rate", c.em.learning_rate},
            {"zero_sum", zero_sum_name(c.em.zero_sum)},
            {"sampler", sampler_name(c.em.sampler)}}},
          {"detect",
           {{"eta", optional_json(c.detect.eta_detect)},
            {"max_iters", c.detect.max_iters},
            {"step_init", c.detect.step_init}}}};
}

KromfacConfig config_from(const json& j) {
  KromfacConfig c;
  c.m = j.at("m").get<std::size_t>();
  c.c = j.at("c").get<std::size_t>();
  c.n0 = j.at("n0").get<std::size_t>();
  c.lambda_coef = j.at("lambda_coef").get<double>();
  c.lambda_override = optional_from<double>(j.at("lambda"));
  c.epsilon = optional_from<double>(j.at("epsilon"));
  c.delta = optional_from<double>(j.at("delta"));
  c.include_i0 = j.at("include_i0").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.threads = j.at("threads").get<unsigned>();
  c.theta_init = optional_from<std::vector<double>>(j.at("theta_init"));
  const json& em = j.at("em");
  c.em.em_iters = em.at("em_iters").get<unsigned>();
  c.em.mcmc_samples = optional_from<std::size_t>(em.at("mcmc_samples"));
  c.em.grad_steps = em.at("grad_steps").get<unsigned>();
  c.em.learning_rate = em.at("learning_rate").get<double>();
  c.em.zero_sum = zero_sum_from(em.at("zero_sum").get<std::string>());
  c.em.sampler = sampler_from(em.at("sampler").get<std::string>());
  const json& d = j.at("detect");
  c.detect.eta_detect = optional_from<double>(d.at("eta"));
  c.detect.max_iters = d.at("max_iters").get<unsigned>();
  c.detect.step_init = d.at("step_init").get<double>();
  return c;
}

}  // namespace

std::string model_to_json(const KroneckerModel& model) {
  json rows = json::array();
  for (std::size_t i = 0; i < model.n0; ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < model.n0; ++j) row.push_back(model.at(i, j));
    rows.push_back(row);
  }
  return json{{"n0", model.n0}, {"k", model.k}, {"theta", rows}}.dump(2) + "\n";
}

KroneckerModel model_from_json(const std::string& text) {
  const json j = parse(text);
  return guarded([&] {
    const auto n0 = j.at("n0").get<std::size_t>();
    const auto k = j.at("k").get<unsigned>();
    std::vector<double> flat;
    const auto rows = j.at("theta");
    if (rows.size() != n0) throw std::invalid_argument("theta must have n0 rows");
    for (const auto& row : rows) {
      if (row.size() != n0) throw std::invalid_argument("theta must have n0 columns");
      for (const auto& x : row) flat.push_back(x.get<double>());
    }
    return KroneckerModel(n0, k, flat);
  });
}

std::string mapping_to_json(const NodeMapping& mapping) {
  return json{{"observed", mapping.observed_count}, {"sigma", mapping.sigma}}.dump() + "\n";
}

NodeMapping mapping_from_json(const std::string& text) {
  const json j = parse(text);
  return guarded([&] {
    NodeMapping m;
    m.observed_count = j.at("observed").get<std::size_t>();
    m.sigma = j.at("sigma").get<std::vector<std::uint64_t>>();
    return m;
  });
}

std::string trace_to_json(const SearchTrace& trace) { return trace_json(trace).dump(2) + "\n"; }

SearchTrace trace_from_json(const std::string& text) {
  const json j = parse(text);
  return guarded([&] { return trace_from(j); });
}

std::string ranking_to_json(const Ranking& ranking, std::size_t observed) {
  json centrality = json::object();
  for (std::size_t s = 0; s < ranking.centrality.size(); ++s)
    centrality[std::to_string(observed + s)] = ranking.centrality[s];
  return json{{"epsilon", ranking.epsilon}, {"h", ranking.h}, {"order", ranking.order}, {"centrality", centrality}}
             .dump(2) +
         "\n";
}

std::string report_to_json(const ExperimentReport& r) {
  json j;
  j["nmi"] = r.nmi;
  j["search"] = trace_json(r.trace);
  j["curve_nmi"] = r.curve_nmi;
  j["dataset"] = {{"nodes", r.dataset.nodes}, {"edges", r.dataset.edges}, {"hash", r.dataset.hash}};
  j["observed"] = r.observed;
  j["missing"] = r.missing;
  j["config"] = config_json(r.config);
  j["sample"] = {{"strategy", strategy_name(r.sample.strategy)},
                 {"fraction", r.sample.fraction},
                 {"p_forward", r.sample.p_forward},
                 {"seed", r.sample.seed}};
  j["notes"] = r.notes;
  j["metadata"] = {{"timing", r.timing}, {"timestamp", r.timestamp}};
  return j.dump(2) + "\n";
}

ExperimentReport report_from_json(const std::string& text) {
  const json j = parse(text);
  return guarded([&] {
    ExperimentReport r;
    r.nmi = j.at("nmi").get<std::map<std::string, double>>();
    r.trace = trace_from(j.at("search"));
    r.curve_nmi = j.at("curve_nmi").get<std::vector<double>>();
    const json& d = j.at("dataset");
    r.dataset = {d.at("nodes").get<std::size_t>(), d.at("edges").get<std::size_t>(), d.at("hash").get<std::string>()};
    r.observed = j.at("observed").get<std::size_t>();
    r.missing = j.at("missing").get<std::size_t>();
    r.config = config_from(j.at("config"));
    const json& s = j.at("sample");
    r.sample.strategy = strategy_from(s.at("strategy").get<std::string>());
    r.sample.fraction = s.at("fraction").get<double>();
    r.sample.p_forward = s.at("p_forward").get<double>();
    r.sample.seed = s.at("seed").get<std::uint64_t>();
    r.notes = j.at("notes").get<std::vector<std::string>>();
    const json& meta = j.at("metadata");
    r.timing = meta.at("timing").get<std::map<std::string, double>>();
    r.timestamp = meta.at("timestamp").get<std::string>();
    return r;
  });
}

std::string curve_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "i,loss,reg_loss,nmi\n";
  for (std::size_t k = 0; k < report.trace.records.size(); ++k) {
    const auto& rec = report.trace.records[k];
    out << rec.i << ',' << rec.loss << ',' << rec.reg_loss << ',';
    if (k < report.curve_nmi.size()) out << report.curve_nmi[k];
    out << '\n';
  }
  return out.str();
}

}  // namespace kromfac
