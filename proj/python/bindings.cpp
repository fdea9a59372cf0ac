#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ledsim/algorithms.hpp"
#include "ledsim/harness.hpp"
#include "ledsim/problems.hpp"
#include "ledsim/topology.hpp"

namespace py = pybind11;
using namespace ledsim;

namespace {

GraphSpec graph_spec(const std::string& kind, int n, int rows, int cols, double edge_prob, std::uint64_t seed) {
  GraphSpec spec;
  spec.kind = parse_graph_kind(kind);
  spec.n = n;
  spec.rows = rows;
  spec.cols = cols;
  spec.edge_prob = edge_prob;
  spec.seed = seed;
  return spec;
}

py::dict trace_to_dict(const Trace& trace) {
  std::vector<int> rounds;
  std::vector<double> grad, cons, vpl;
  for (const auto& row : trace.rows) {
    rounds.push_back(row.round);
    grad.push_back(row.grad_norm_sq);
    cons.push_back(row.consensus_err);
    vpl.push_back(row.vectors_per_link);
  }
  py::dict d;
  d["round"] = rounds;
  d["grad_norm_sq"] = grad;
  d["consensus_err"] = cons;
  d["vectors_per_link"] = vpl;
  d["diverged"] = trace.diverged;
  d["stopped_early"] = trace.stopped_early;
  return d;
}

}  // namespace

PYBIND11_MODULE(_ledsim, m) {
  m.doc() = "Decentralized optimization simulator";

  py::class_<MixingMatrix>(m, "MixingMatrix")
      .def_static("from_dense", [](const Matrix& w) { return MixingMatrix::from_dense(w); })
      .def_property_readonly("n", &MixingMatrix::n)
      .def_property_readonly("weights", &MixingMatrix::weights)
      .def_property_readonly("spectrum", &MixingMatrix::spectrum)
      .def_property_readonly("mixing_rate", &MixingMatrix::mixing_rate)
      .def_property_readonly("min_eigenvalue", &MixingMatrix::min_eigenvalue)
      .def("is_complete_average", &MixingMatrix::is_complete_average);

  m.def(
      "mixing_matrix",
      [](const std::string& graph, int n, bool lazy, int rows, int cols, double edge_prob, std::uint64_t seed) {
        return build_mixing(graph_spec(graph, n, rows, cols, edge_prob, seed), lazy);
      },
      py::arg("graph"), py::arg("n"), py::arg("lazy") = false, py::arg("rows") = 0, py::arg("cols") = 0,
      py::arg("edge_prob") = 0.3, py::arg("seed") = 0);
  m.def("average_weights", &average_weights, py::arg("n"));
  m.def("lazy_transform", &lazy_transform, py::arg("w"));

  py::class_<Problem>(m, "Problem")
      .def_property_readonly("n_nodes", &Problem::n_nodes)
      .def_property_readonly("dim", &Problem::dim)
      .def_property_readonly("smoothness", &Problem::smoothness)
      .def_property_readonly("noise_sigma", &Problem::noise_sigma)
      .def("value", [](const Problem& p, int node, const Vector& x) { return p.value(node, x); })
      .def("gradient", [](const Problem& p, int node, const Vector& x) { return p.gradient(node, x); })
      .def("global_value", [](const Problem& p, const Vector& x) { return p.global_value(x); })
      .def("global_gradient", [](const Problem& p, const Vector& x) { return p.global_gradient(x); })
      .def_property_readonly("minimizer", [](const Problem& p) -> std::optional<Vector> {
        if (!p.is_quadratic()) return std::nullopt;
        return p.minimizer();
      });

  m.def(
      "logistic_problem",
      [](int nodes, int dim, int samples, double eta, double sigma_u, double sigma_h, double sigma,
         std::uint64_t seed) {
        SynthConfig cfg;
        cfg.nodes = nodes;
        cfg.dim = dim;
        cfg.samples = samples;
        cfg.eta = eta;
        cfg.sigma_u = sigma_u;
        cfg.sigma_h = sigma_h;
        cfg.sigma = sigma;
        return synth_logistic(cfg, seed);
      },
      py::arg("nodes") = 15, py::arg("dim") = 5, py::arg("samples") = 1000, py::arg("eta") = 0.01,
      py::arg("sigma_u") = 6.0, py::arg("sigma_h") = 2.0, py::arg("sigma") = 1e-3, py::arg("seed") = 0);
  m.def(
      "quadratic_problem",
      [](int nodes, int dim, double mu, double L, double heterogeneity, double sigma, std::uint64_t seed) {
        QuadraticSpec spec;
        spec.nodes = nodes;
        spec.dim = dim;
        spec.mu = mu;
        spec.L = L;
        spec.heterogeneity = heterogeneity;
        spec.sigma = sigma;
        return quadratic_problem(spec, seed);
      },
      py::arg("nodes"), py::arg("dim"), py::arg("mu") = 0.1, py::arg("L") = 1.0, py::arg("heterogeneity") = 1.0,
      py::arg("sigma") = 0.0, py::arg("seed") = 0);

  m.def("algorithms", [] {
    std::vector<std::string> names;
    for (AlgorithmId id : all_algorithms()) names.push_back(to_string(id));
    return names;
  });
  m.def("default_stepsize", &default_stepsize, py::arg("L"), py::arg("tau"), py::arg("rounds"), py::arg("n_nodes"));

  m.def(
      "run",
      [](const Problem& problem, const MixingMatrix& w, const std::string& algo, double alpha, int tau, int rounds,
         int num_runs, std::uint64_t seed, std::optional<double> beta, double gamma, double p, int jobs) {
        RunSettings s;
        s.algo = parse_algorithm(algo);
        s.hp.alpha = alpha;
        s.hp.tau = tau;
        s.hp.beta = beta;
        s.hp.gamma = gamma;
        s.hp.p = p;
        s.rounds = rounds;
        s.num_runs = num_runs;
        s.seed = seed;
        s.jobs = jobs;
        py::gil_scoped_release release;
        Trace t = run_experiment(problem, w, s);
        py::gil_scoped_acquire acquire;
        return trace_to_dict(t);
      },
      py::arg("problem"), py::arg("w"), py::arg("algo"), py::arg("alpha"), py::arg("tau") = 1,
      py::arg("rounds") = 100, py::arg("num_runs") = 1, py::arg("seed") = 0, py::arg("beta") = py::none(),
      py::arg("gamma") = 1.0, py::arg("p") = 1.0, py::arg("jobs") = 1);

  m.def(
      "tune",
      [](const Problem& problem, const MixingMatrix& w, const std::string& algo, int tau, double target, int rounds,
         int num_runs, std::uint64_t seed, int points, double decades) {
        RunSettings s;
        s.algo = parse_algorithm(algo);
        s.hp.tau = tau;
        s.rounds = rounds;
        s.num_runs = num_runs;
        s.seed = seed;
        const TuneGrid grid =
            default_grid(s.algo, stability_estimate(problem.smoothness()), problem.n_nodes(), points, decades);
        const TuneResult r = tune_to_target(problem, w, s, target, grid, true);
        py::dict d;
        d["achieved"] = r.achieved();
        if (const GridPoint* best = r.best()) {
          d["alpha"] = best->hp.alpha;
          d["gamma"] = best->hp.gamma;
          d["rounds_to_target"] = *best->rounds_to_target;
          d["vectors_to_target"] = best->vectors_to_target;
        }
        return d;
      },
      py::arg("problem"), py::arg("w"), py::arg("algo"), py::arg("tau") = 1, py::arg("target") = 1e-4,
      py::arg("rounds") = 500, py::arg("num_runs") = 1, py::arg("seed") = 0, py::arg("points") = 20,
      py::arg("decades") = 4.0);

  m.def(
      "noise_floor",
      [](const Problem& problem, const MixingMatrix& w, const std::string& algo, double alpha, int tau, int rounds,
         int num_runs, std::uint64_t seed) {
        RunSettings s;
        s.algo = parse_algorithm(algo);
        s.hp.alpha = alpha;
        s.hp.tau = tau;
        s.rounds = rounds;
        s.num_runs = num_runs;
        s.seed = seed;
        const NoiseFloor f = noise_floor(problem, w, s);
        py::dict d;
        d["floor"] = f.floor;
        d["stationary"] = f.stationary;
        d["window_rounds"] = f.window_rounds;
        return d;
      },
      py::arg("problem"), py::arg("w"), py::arg("algo"), py::arg("alpha"), py::arg("tau") = 1,
      py::arg("rounds") = 1000, py::arg("num_runs") = 10, py::arg("seed") = 0);
}
