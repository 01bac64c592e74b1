#include "kromfac/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "kromfac/community.hpp"
#include "kromfac/eval.hpp"
#include "kromfac/io.hpp"
#include "kromfac/pipeline.hpp"

namespace kromfac {

namespace {

namespace fs = std::filesystem;

/// Raised for flag values CLI11 cannot check on its own.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string edges, truth, cover, out = ".";
  std::optional<std::uint64_t> seed;
  std::string epsilon = "auto", delta = "auto", eta = "auto", lambda = "auto", mcmc = "auto";
  std::string theta_init;
  std::string strategy = "rn";
  bool no_i0 = false;
  bool verbose = false;
  KromfacConfig cfg;
  SampleSpec spec;
};

std::optional<double> auto_or_number(const std::string& text, const char* flag) {
  if (text == "auto") return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw UsageError(std::string("--") + flag + ": expected a number or 'auto', got '" + text + "'");
  }
}

std::vector<double> number_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string token;
  while (std::getline(in, token, ',')) {
    const auto v = auto_or_number(token, "theta-init");
    if (!v) throw UsageError("--theta-init: expected comma-separated numbers");
    values.push_back(*v);
  }
  return values;
}

void add_graph_input(CLI::App* cmd, Options& o) {
  cmd->add_option("--edges", o.edges, "Edge list of the observed graph")->required()->check(CLI::ExistingFile);
}

void add_output(CLI::App* cmd, Options& o) {
  cmd->add_option("--out", o.out, "Output directory")->capture_default_str();
  cmd->add_option("--seed", o.seed, "Master seed (random and printed when omitted)");
  cmd->add_flag("-v,--verbose", o.verbose, "Progress messages on standard error");
}

void add_detect_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--communities,-c", o.cfg.c, "Community count C")->required()->check(CLI::PositiveNumber);
  cmd->add_option("--delta", o.delta, "Membership threshold, or auto")->capture_default_str();
  cmd->add_option("--eta", o.eta, "Detection convergence threshold, or auto")->capture_default_str();
  cmd->add_option("--max-iters", o.cfg.detect.max_iters, "Detection pass cap")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--step-init", o.cfg.detect.step_init, "Initial line-search step")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

void add_completion_flags(CLI::App* cmd, Options& o, bool missing_required) {
  auto* m = cmd->add_option("--missing,-m", o.cfg.m, "Missing-node count M")->check(CLI::NonNegativeNumber);
  if (missing_required) m->required();
  cmd->add_option("--n0", o.cfg.n0, "Kronecker initiator size")->capture_default_str()->check(CLI::Range(2, 16));
  cmd->add_option("--theta-init", o.theta_init, "Row-major initiator, comma-separated (random when omitted)");
  cmd->add_option("--em-iters", o.cfg.em.em_iters, "EM iterations")->capture_default_str();
  cmd->add_option("--grad-steps", o.cfg.em.grad_steps, "Gradient steps per M-step")->capture_default_str();
  cmd->add_option("--learning-rate", o.cfg.em.learning_rate, "Initial M-step learning rate")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--mcmc-samples", o.mcmc, "Placement proposals per E-step, or auto = 10(N+M)")
      ->capture_default_str();
}

void add_search_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--epsilon", o.epsilon, "Influential-node threshold, or auto = k_max/2")->capture_default_str();
  cmd->add_option("--lambda-coef", o.cfg.lambda_coef, "lambda = coef * N")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--lambda", o.lambda, "Absolute lambda, or auto")->capture_default_str();
  cmd->add_flag("--no-i0", o.no_i0, "Search i from 1 instead of 0");
  cmd->add_option("--threads", o.cfg.threads, "Workers for the search over i")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

void add_sample_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--strategy", o.strategy, "rn or ff")->capture_default_str()->check(CLI::IsMember({"rn", "ff"}));
  cmd->add_option("--fraction", o.spec.fraction, "Retained node share")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--p-forward", o.spec.p_forward, "Forest fire burning probability")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
}

/// Folds the string-valued flags into the config and fixes the seed.
void finalize(Options& o, std::ostream& out) {
  o.cfg.epsilon = auto_or_number(o.epsilon, "epsilon");
  o.cfg.delta = auto_or_number(o.delta, "delta");
  o.cfg.detect.eta_detect = auto_or_number(o.eta, "eta");
  o.cfg.lambda_override = auto_or_number(o.lambda, "lambda");
  if (const auto m = auto_or_number(o.mcmc, "mcmc-samples")) o.cfg.em.mcmc_samples = static_cast<std::size_t>(*m);
  if (!o.theta_init.empty()) o.cfg.theta_init = number_list(o.theta_init);
  o.cfg.include_i0 = !o.no_i0;
  o.spec.strategy = o.strategy == "ff" ? SampleStrategy::ff : SampleStrategy::rn;
  if (!o.seed) {
    o.seed = (static_cast<std::uint64_t>(std::random_device{}()) << 32) | std::random_device{}();
    out << "seed: " << *o.seed << '\n';
  }
  o.cfg.seed = *o.seed;
  o.spec.seed = derive_seed(*o.seed, "sample", 0);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

std::string cover_text(const Cover& cover, const std::function<std::string(NodeId)>& label) {
  std::ostringstream s;
  write_cover(s, cover, label);
  return s.str();
}

std::string missing_label(std::size_t slot) { return "_missing_" + std::to_string(slot); }

/// Label function for covers whose ids >= N name recovered nodes in `order`
/// (or in slot order when order is empty).
std::function<std::string(NodeId)> labeller(const NodeIdMap& ids, std::size_t n, const std::vector<NodeId>& order) {
  return [&ids, n, &order](NodeId u) {
    if (u < n) return ids.label(u);
    const std::size_t t = u - n;
    return missing_label(order.empty() ? t : order.at(t) - n);
  };
}

/// Truth cover re-read through the graph's labels and restricted to its nodes.
Cover load_truth(const std::string& path, const NodeIdMap& graph_ids) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  NodeIdMap ids = graph_ids;
  const std::size_t n = graph_ids.size();
  Cover truth = read_cover(in, ids);
  return restrict_cover(truth, n);
}

std::string nmi_suffix(const Options& o, const NodeIdMap& ids, const Cover& cover) {
  if (o.truth.empty()) return "";
  const Cover truth = load_truth(o.truth, ids);
  std::ostringstream s;
  s.precision(6);
  s << " nmi=" << nmi(restrict_cover(cover, ids.size()), truth);
  return s.str();
}

LoadedGraph load_graph(const Options& o, std::ostream& err) {
  LoadedGraph loaded = load_edge_list_file(o.edges);
  if (o.verbose)
    err << "loaded " << loaded.graph.n() << " nodes, " << loaded.graph.edge_count() << " edges\n";
  return loaded;
}

int cmd_detect(Options& o, std::ostream& out, std::ostream& err) {
  const auto loaded = load_graph(o, err);
  const auto result = run_kromfac(loaded.graph, o.cfg);
  const std::size_t n = loaded.graph.n();
  write_file(fs::path(o.out) / "cover.txt", cover_text(result.cover, labeller(loaded.ids, n, result.ranking.order)));
  write_file(fs::path(o.out) / "trace.json", trace_to_json(result.trace));
  out << "kromfac: i_hat=" << result.trace.i_hat << " h=" << result.trace.h
      << " communities=" << result.cover.communities.size() << nmi_suffix(o, loaded.ids, result.cover) << '\n';
  return 0;
}

int cmd_baseline1(Options& o, std::ostream& out, std::ostream& err) {
  const auto loaded = load_graph(o, err);
  const Cover cover = baseline1(loaded.graph, o.cfg);
  const std::vector<NodeId> none;
  write_file(fs::path(o.out) / "cover.txt", cover_text(cover, labeller(loaded.ids, loaded.graph.n(), none)));
  out << "baseline1: communities=" << cover.communities.size() << nmi_suffix(o, loaded.ids, cover) << '\n';
  return 0;
}

int cmd_baseline2(Options& o, std::ostream& out, std::ostream& err) {
  const auto loaded = load_graph(o, err);
  const Cover cover = baseline2(loaded.graph, o.cfg);
  const std::vector<NodeId> none;
  write_file(fs::path(o.out) / "cover.txt", cover_text(cover, labeller(loaded.ids, loaded.graph.n(), none)));
  out << "baseline2: communities=" << cover.communities.size() << nmi_suffix(o, loaded.ids, cover) << '\n';
  return 0;
}

int cmd_complete(Options& o, std::ostream& out, std::ostream& err) {
  const auto loaded = load_graph(o, err);
  const auto [fit, rg] = recover_missing(loaded.graph, o.cfg);
  const double eps = o.cfg.epsilon.value_or(std::max(0.5, default_epsilon(rg)));
  const Ranking ranking = select_influential(rg, eps);
  const fs::path dir(o.out);
  write_file(dir / "theta.json", model_to_json(fit.model));
  write_file(dir / "mapping.json", mapping_to_json(fit.mapping));
  write_file(dir / "ranking.json", ranking_to_json(ranking, rg.observed()));
  std::ostringstream rec;
  write_recovered(rec, rg);
  write_file(dir / "recovered.txt", rec.str());
  out << "complete: k=" << fit.model.k << " z1=" << rg.z1.size() << " z2=" << rg.z2.size() << " h=" << ranking.h
      << '\n';
  return 0;
}

int cmd_sample(Options& o, std::ostream& out, std::ostream& err) {
  const auto loaded = load_graph(o, err);
  const Sample s = sample_graph(loaded.graph, o.spec);
  std::ostringstream edges, kept;
  for (const auto& [u, v] : s.graph.edges())
    edges << loaded.ids.label(s.kept[u]) << ' ' << loaded.ids.label(s.kept[v]) << '\n';
  for (NodeId u : s.kept) kept << loaded.ids.label(u) << '\n';
  write_file(fs::path(o.out) / "sample.txt", edges.str());
  write_file(fs::path(o.out) / "kept.txt", kept.str());
  out << "sample: kept=" << s.kept.size() << " of " << loaded.graph.n() << " edges=" << s.graph.edge_count() << '\n';
  return 0;
}

int cmd_eval(Options& o, std::ostream& out, std::ostream&) {
  NodeIdMap ids;
  std::ifstream cover_in(o.cover), truth_in(o.truth);
  if (!cover_in || !truth_in) throw std::runtime_error("cannot read the cover files");
  Cover predicted = read_cover(cover_in, ids);
  Cover truth = read_cover(truth_in, ids);
  predicted.universe = truth.universe = ids.size();
  const double score = nmi(predicted, truth);
  std::ostringstream json;
  json.precision(17);
  json << "{\n  \"nmi\": " << score << ",\n  \"universe\": " << ids.size() << "\n}\n";
  write_file(fs::path(o.out) / "nmi.json", json.str());
  out << "eval: nmi=" << score << '\n';
  return 0;
}

int cmd_experiment(Options& o, std::ostream& out, std::ostream& err) {
  const auto loaded = load_graph(o, err);
  std::ifstream in(o.truth);
  if (!in) throw std::runtime_error("cannot read " + o.truth);
  NodeIdMap ids = loaded.ids;
  Cover truth = read_cover(in, ids);
  truth = restrict_cover(truth, loaded.graph.n());
  const auto run = run_experiment(loaded.graph, truth, o.spec, o.cfg);

  NodeIdMap observed_ids;
  for (NodeId u : run.kept) observed_ids.intern(loaded.ids.label(u));
  const std::size_t n = run.kept.size();
  const fs::path dir(o.out);
  write_file(dir / "report.json", report_to_json(run.report));
  write_file(dir / "curve.csv", curve_csv(run.report));
  const std::vector<NodeId> none;
  write_file(dir / "cover_kromfac.txt", cover_text(run.kromfac, labeller(observed_ids, n, run.order)));
  write_file(dir / "cover_baseline1.txt", cover_text(run.baseline1, labeller(observed_ids, n, none)));
  write_file(dir / "cover_baseline2.txt", cover_text(run.baseline2, labeller(observed_ids, n, none)));
  out.precision(6);
  out << "experiment: observed=" << n << " missing=" << run.report.missing << " i_hat=" << run.report.trace.i_hat
      << " nmi kromfac=" << run.report.nmi.at("kromfac") << " baseline1=" << run.report.nmi.at("baseline1")
      << " baseline2=" << run.report.nmi.at("baseline2") << '\n';
  return 0;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Overlapping community detection in partially observed networks", "kromfac"};
  app.require_subcommand(1);
  Options o;
  using Handler = int (*)(Options&, std::ostream&, std::ostream&);
  std::vector<std::pair<CLI::App*, Handler>> commands;

  auto* detect = app.add_subcommand("detect", "Complete, rank, search over i and detect (KroMFac)");
  add_graph_input(detect, o);
  add_completion_flags(detect, o, true);
  add_search_flags(detect, o);
  add_detect_flags(detect, o);
  detect->add_option("--truth", o.truth, "Ground-truth cover for an NMI summary")->check(CLI::ExistingFile);
  add_output(detect, o);
  commands.emplace_back(detect, cmd_detect);

  auto* b1 = app.add_subcommand("baseline1", "Detect on the observed graph only");
  add_graph_input(b1, o);
  add_detect_flags(b1, o);
  b1->add_option("--truth", o.truth, "Ground-truth cover for an NMI summary")->check(CLI::ExistingFile);
  add_output(b1, o);
  commands.emplace_back(b1, cmd_baseline1);

  auto* b2 = app.add_subcommand("baseline2", "Detect on the fully recovered graph");
  add_graph_input(b2, o);
  add_completion_flags(b2, o, true);
  add_detect_flags(b2, o);
  b2->add_option("--truth", o.truth, "Ground-truth cover for an NMI summary")->check(CLI::ExistingFile);
  add_output(b2, o);
  commands.emplace_back(b2, cmd_baseline2);

  auto* complete = app.add_subcommand("complete", "Fit the Kronecker model and realize the missing part");
  add_graph_input(complete, o);
  add_completion_flags(complete, o, true);
  complete->add_option("--epsilon", o.epsilon, "Influential-node threshold, or auto")->capture_default_str();
  add_output(complete, o);
  commands.emplace_back(complete, cmd_complete);

  auto* sample = app.add_subcommand("sample", "Sample an observed graph (RN or FF)");
  add_graph_input(sample, o);
  add_sample_flags(sample, o);
  add_output(sample, o);
  commands.emplace_back(sample, cmd_sample);

  auto* eval = app.add_subcommand("eval", "NMI between two cover files");
  eval->add_option("--cover", o.cover, "Predicted cover")->required()->check(CLI::ExistingFile);
  eval->add_option("--truth", o.truth, "Ground-truth cover")->required()->check(CLI::ExistingFile);
  eval->add_option("--out", o.out, "Output directory")->capture_default_str();
  commands.emplace_back(eval, cmd_eval);

  auto* experiment = app.add_subcommand("experiment", "Sample, run KroMFac and both baselines, score with NMI");
  add_graph_input(experiment, o);
  experiment->add_option("--truth", o.truth, "Ground-truth cover of the full graph")
      ->required()
      ->check(CLI::ExistingFile);
  add_sample_flags(experiment, o);
  add_completion_flags(experiment, o, false);
  add_search_flags(experiment, o);
  add_detect_flags(experiment, o);
  add_output(experiment, o);
  commands.emplace_back(experiment, cmd_experiment);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return 2;
  }

  for (const auto& [cmd, handler] : commands) {
    if (!cmd->parsed()) continue;
    try {
      if (cmd != eval) finalize(o, out);
      fs::create_directories(o.out);
      return handler(o, out, err);
    } catch (const UsageError& e) {
      err << e.what() << "\n\n" << cmd->help();
      return 2;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return 1;
    }
  }
  return 2;
}

int run_command(const std::vector<std::string>& args) { return run_command(args, std::cout, std::cerr); }

}  // namespace kromfac
