#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "kromfac/cli.hpp"
#include "kromfac/community.hpp"
#include "kromfac/eval.hpp"
#include "kromfac/io.hpp"
#include "kromfac/kron_model.hpp"
#include "kromfac/pipeline.hpp"
#include "kromfac/ranking.hpp"

namespace py = pybind11;
using namespace kromfac;

namespace {

py::array_t<double> affiliation_array(const AffiliationMatrix& f) {
  py::array_t<double> out({f.rows(), f.cols()});
  auto view = out.mutable_unchecked<2>();
  for (std::size_t u = 0; u < f.rows(); ++u)
    for (std::size_t c = 0; c < f.cols(); ++c) view(u, c) = f.at(u, c);
  return out;
}

AffiliationMatrix affiliation_from(py::array_t<double, py::array::c_style | py::array::forcecast> a) {
  if (a.ndim() != 2) throw std::invalid_argument("affiliation matrix must be two-dimensional");
  const auto rows = static_cast<std::size_t>(a.shape(0)), cols = static_cast<std::size_t>(a.shape(1));
  return AffiliationMatrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Overlapping community detection in partially observed networks";

  py::class_<Graph>(m, "Graph")
      .def(py::init<>())
      .def_static(
          "from_edges",
          [](std::size_t n, const std::vector<Edge>& edges) { return Graph::from_edges(n, edges); },
          py::arg("n"), py::arg("edges"))
      .def_property_readonly("n", &Graph::n)
      .def_property_readonly("edge_count", &Graph::edge_count)
      .def("degree", &Graph::degree)
      .def("neighbors",
           [](const Graph& g, NodeId u) {
             const auto nb = g.neighbors(u);
             return std::vector<NodeId>(nb.begin(), nb.end());
           })
      .def("has_edge", &Graph::has_edge)
      .def("edges", &Graph::edges)
      .def("__eq__", [](const Graph& a, const Graph& b) { return a == b; })
      .def("__repr__", [](const Graph& g) {
        return "Graph(n=" + std::to_string(g.n()) + ", edges=" + std::to_string(g.edge_count()) + ")";
      });

  m.def(
      "load_edge_list",
      [](const std::string& path) {
        LoadedGraph loaded = load_edge_list_file(path);
        std::vector<std::string> labels;
        for (NodeId u = 0; u < loaded.ids.size(); ++u) labels.push_back(loaded.ids.label(u));
        return py::make_tuple(std::move(loaded.graph), labels);
      },
      py::arg("path"), "Reads an edge list; returns (graph, labels) where labels[id] is the external name.");

  py::class_<Cover>(m, "Cover")
      .def(py::init<>())
      .def(py::init([](std::vector<std::vector<NodeId>> communities, std::size_t universe) {
             return Cover{std::move(communities), universe};
           }),
           py::arg("communities"), py::arg("universe"))
      .def_readwrite("communities", &Cover::communities)
      .def_readwrite("universe", &Cover::universe)
      .def("__eq__", [](const Cover& a, const Cover& b) { return a == b; })
      .def("__repr__", [](const Cover& c) {
        return "Cover(communities=" + std::to_string(c.communities.size()) +
               ", universe=" + std::to_string(c.universe) + ")";
      });

  // Kronecker model
  py::enum_<ZeroSumMode>(m, "ZeroSumMode")
      .value("automatic", ZeroSumMode::automatic)
      .value("exact", ZeroSumMode::exact)
      .value("taylor", ZeroSumMode::taylor);

  py::class_<KroneckerModel>(m, "KroneckerModel")
      .def(py::init<std::size_t, unsigned, std::vector<double>>(), py::arg("n0"), py::arg("k"), py::arg("theta"))
      .def_readonly("n0", &KroneckerModel::n0)
      .def_readonly("k", &KroneckerModel::k)
      .def_readonly("theta", &KroneckerModel::theta)
      .def("size", &KroneckerModel::size)
      .def("entry", [](const KroneckerModel& model, std::uint64_t a, std::uint64_t b) { return kron_entry(model, a, b); });

  py::class_<NodeMapping>(m, "NodeMapping")
      .def(py::init<>())
      .def_static("identity", &NodeMapping::identity, py::arg("nodes"), py::arg("observed"))
      .def_readwrite("sigma", &NodeMapping::sigma)
      .def_readwrite("observed_count", &NodeMapping::observed_count);

  m.def("kron_power_for", &kron_power_for, py::arg("n0"), py::arg("nodes"));
  m.def("kron_log_likelihood", &kron_log_likelihood, py::arg("graph"), py::arg("mapping"), py::arg("model"),
        py::arg("mode") = ZeroSumMode::automatic);
  m.def("kron_log_likelihood_gradient", &kron_log_likelihood_gradient, py::arg("graph"), py::arg("mapping"),
        py::arg("model"), py::arg("mode") = ZeroSumMode::automatic);

  py::class_<EmConfig>(m, "EmConfig")
      .def(py::init<>())
      .def_readwrite("em_iters", &EmConfig::em_iters)
      .def_readwrite("mcmc_samples", &EmConfig::mcmc_samples)
      .def_readwrite("grad_steps", &EmConfig::grad_steps)
      .def_readwrite("learning_rate", &EmConfig::learning_rate)
      .def_readwrite("seed", &EmConfig::seed)
      .def_readwrite("zero_sum", &EmConfig::zero_sum);

  py::class_<KronFit>(m, "KronFit")
      .def_readonly("model", &KronFit::model)
      .def_readonly("mapping", &KronFit::mapping);

  m.def(
      "kronem_fit",
      [](const Graph& g, std::size_t missing, std::size_t n0, const std::vector<double>& theta_init,
         const EmConfig& cfg) { return kronem_fit(g, missing, n0, theta_init, cfg); },
      py::arg("graph"), py::arg("missing"), py::arg("n0"), py::arg("theta_init"), py::arg("config") = EmConfig{},
      py::call_guard<py::gil_scoped_release>());
  m.def("random_theta_init", &random_theta_init, py::arg("n0"), py::arg("seed"));

  py::class_<RecoveredGraph>(m, "RecoveredGraph")
      .def_readonly("base", &RecoveredGraph::base)
      .def_readonly("missing", &RecoveredGraph::missing)
      .def_readonly("z1", &RecoveredGraph::z1)
      .def_readonly("z2", &RecoveredGraph::z2)
      .def("full", &RecoveredGraph::full);

  py::class_<Ranking>(m, "Ranking")
      .def_readonly("h", &Ranking::h)
      .def_readonly("order", &Ranking::order)
      .def_readonly("centrality", &Ranking::centrality)
      .def_readonly("epsilon", &Ranking::epsilon);
  m.def(
      "select_influential",
      [](const RecoveredGraph& rg, double epsilon) { return select_influential(rg, epsilon); },
      py::arg("recovered"), py::arg("epsilon"));

  // Affiliation model and detection
  m.def(
      "agm_log_likelihood",
      [](const Graph& g, py::array_t<double, py::array::c_style | py::array::forcecast> f) {
        return agm_log_likelihood(g, affiliation_from(f));
      },
      py::arg("graph"), py::arg("f"));

  py::class_<DetectConfig>(m, "DetectConfig")
      .def(py::init<>())
      .def_readwrite("eta_detect", &DetectConfig::eta_detect)
      .def_readwrite("max_iters", &DetectConfig::max_iters)
      .def_readwrite("step_init", &DetectConfig::step_init)
      .def_readwrite("seed", &DetectConfig::seed);

  py::class_<Detection>(m, "Detection")
      .def_readonly("loss", &Detection::loss)
      .def_readonly("converged", &Detection::converged)
      .def_readonly("passes", &Detection::passes)
      .def_readonly("loss_trace", &Detection::loss_trace)
      .def_property_readonly("f", [](const Detection& d) { return affiliation_array(d.f); });

  m.def("commun_det", &commun_det, py::arg("graph"), py::arg("c"), py::arg("config") = DetectConfig{},
        py::call_guard<py::gil_scoped_release>());
  m.def(
      "hard_decision",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> f, double delta) {
        return hard_decision(affiliation_from(f), delta);
      },
      py::arg("f"), py::arg("delta"));
  m.def("default_delta", &default_delta, py::arg("graph"));

  // Pipeline
  py::class_<KromfacConfig>(m, "KromfacConfig")
      .def(py::init<>())
      .def_readwrite("m", &KromfacConfig::m)
      .def_readwrite("c", &KromfacConfig::c)
      .def_readwrite("n0", &KromfacConfig::n0)
      .def_readwrite("lambda_coef", &KromfacConfig::lambda_coef)
      .def_readwrite("lambda_override", &KromfacConfig::lambda_override)
      .def_readwrite("epsilon", &KromfacConfig::epsilon)
      .def_readwrite("delta", &KromfacConfig::delta)
      .def_readwrite("em", &KromfacConfig::em)
      .def_readwrite("detect", &KromfacConfig::detect)
      .def_readwrite("include_i0", &KromfacConfig::include_i0)
      .def_readwrite("seed", &KromfacConfig::seed)
      .def_readwrite("threads", &KromfacConfig::threads)
      .def_readwrite("theta_init", &KromfacConfig::theta_init);

  py::class_<TraceRecord>(m, "TraceRecord")
      .def_readonly("i", &TraceRecord::i)
      .def_readonly("loss", &TraceRecord::loss)
      .def_readonly("reg_loss", &TraceRecord::reg_loss)
      .def_readonly("converged", &TraceRecord::converged);

  py::class_<SearchTrace>(m, "SearchTrace")
      .def_readonly("lambda_", &SearchTrace::lambda)
      .def_readonly("h", &SearchTrace::h)
      .def_readonly("records", &SearchTrace::records)
      .def_readonly("i_hat", &SearchTrace::i_hat)
      .def_readonly("degenerate", &SearchTrace::degenerate)
      .def("to_json", [](const SearchTrace& t) { return trace_to_json(t); });

  py::class_<KromfacResult>(m, "KromfacResult")
      .def_readonly("cover", &KromfacResult::cover)
      .def_readonly("trace", &KromfacResult::trace)
      .def_readonly("fit", &KromfacResult::fit)
      .def_readonly("recovered", &KromfacResult::recovered)
      .def_readonly("ranking", &KromfacResult::ranking)
      .def_readonly("covers", &KromfacResult::covers)
      .def_readonly("delta", &KromfacResult::delta);

  m.def("regularized_loss", &regularized_loss, py::arg("d"), py::arg("i"), py::arg("lambda_"));
  m.def("run_kromfac", &run_kromfac, py::arg("observed"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def(
      "baseline1", [](const Graph& g, const KromfacConfig& cfg) { return baseline1(g, cfg); }, py::arg("observed"),
      py::arg("config"), py::call_guard<py::gil_scoped_release>());
  m.def(
      "baseline2", [](const Graph& g, const KromfacConfig& cfg) { return baseline2(g, cfg); }, py::arg("observed"),
      py::arg("config"), py::call_guard<py::gil_scoped_release>());

  // Evaluation
  m.def("nmi", &nmi, py::arg("x"), py::arg("y"));

  py::enum_<SampleStrategy>(m, "SampleStrategy").value("rn", SampleStrategy::rn).value("ff", SampleStrategy::ff);

  py::class_<SampleSpec>(m, "SampleSpec")
      .def(py::init<>())
      .def_readwrite("strategy", &SampleSpec::strategy)
      .def_readwrite("fraction", &SampleSpec::fraction)
      .def_readwrite("p_forward", &SampleSpec::p_forward)
      .def_readwrite("seed", &SampleSpec::seed);

  py::class_<Sample>(m, "Sample").def_readonly("graph", &Sample::graph).def_readonly("kept", &Sample::kept);
  m.def("sample_graph", &sample_graph, py::arg("graph"), py::arg("spec"));

  m.def(
      "planted_affiliation",
      [](std::size_t n, std::size_t c, double overlap, double strength, std::uint64_t seed) {
        return affiliation_array(planted_affiliation(n, c, overlap, strength, seed));
      },
      py::arg("n"), py::arg("c"), py::arg("overlap"), py::arg("strength"), py::arg("seed"));
  m.def(
      "agm_generate",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> f, std::uint64_t seed, double threshold) {
        Planted p = agm_generate(affiliation_from(f), seed, threshold);
        return py::make_tuple(std::move(p.graph), std::move(p.truth));
      },
      py::arg("f"), py::arg("seed"), py::arg("threshold") = 0.5, "Returns (graph, truth cover).");

  m.def(
      "run_experiment",
      [](const Graph& dataset, const Cover& truth, const SampleSpec& spec, const KromfacConfig& cfg) {
        ExperimentRun run;
        {
          py::gil_scoped_release release;
          run = run_experiment(dataset, truth, spec, cfg);
        }
        return py::module_::import("json").attr("loads")(report_to_json(run.report));
      },
      py::arg("dataset"), py::arg("truth"), py::arg("spec"), py::arg("config"),
      "Samples, runs KroMFac and both baselines; returns the report as a dict.");

  m.def(
      "run_command",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_command(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool in-process; returns (exit code, stdout, stderr).");
}
