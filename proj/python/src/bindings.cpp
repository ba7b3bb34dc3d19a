#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "kdiffnet/error.hpp"
#include "kdiffnet/eval.hpp"
#include "kdiffnet/io.hpp"
#include "kdiffnet/knowledge.hpp"
#include "kdiffnet/linalg.hpp"
#include "kdiffnet/prox.hpp"
#include "kdiffnet/simulate.hpp"
#include "kdiffnet/solvers.hpp"

namespace py = pybind11;
using namespace kdiffnet;

namespace {

using Groups = std::vector<std::vector<int>>;

BackwardMap as_backward(const Matrix& b) { return BackwardMap{b, 0.0}; }

EdgeGroupSet groups_of(const Groups& groups, int p) { return expand_node_groups(NodeGroupSet(groups, p)); }

py::dict score_dict(const EdgeScore& s) {
  py::dict d;
  d["tp"] = s.tp;
  d["fp"] = s.fp;
  d["fn"] = s.fn;
  d["tn"] = s.tn;
  d["tpr"] = s.tpr();
  d["fpr"] = s.fpr();
  d["precision"] = s.precision;
  d["recall"] = s.recall;
  d["f1"] = s.f1;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Differential Gaussian graphical models with edge and group knowledge";
  m.attr("__version__") = KDIFFNET_VERSION;

  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  py::register_exception<InputError>(m, "InputError", error.ptr());
  py::register_exception<ParameterError>(m, "ParameterError", error.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", error.ptr());
  py::register_exception<InvertibilityError>(m, "InvertibilityError", error.ptr());
  py::register_exception<SelectionError>(m, "SelectionError", error.ptr());
  py::register_exception<SpecError>(m, "SpecError", error.ptr());
  py::register_exception<IoError>(m, "IoError", error.ptr());
  py::register_exception<MissingKnowledgeError>(m, "MissingKnowledgeError", error.ptr());

  m.def("sample_covariance",
        [](const Matrix& x, bool centered) { return sample_covariance(SampleBlock(x), centered).values(); },
        py::arg("x"), py::arg("centered") = true);
  m.def("soft_threshold_matrix",
        [](const Matrix& a, double v) { return soft_threshold_matrix(CovarianceMatrix(a), v).values(); },
        py::arg("a"), py::arg("v"));
  m.def("backward_map",
        [](const Matrix& sc, const Matrix& sd, double v, double cond_limit) {
          return proxy_backward_mapping(CovarianceMatrix(sc), CovarianceMatrix(sd), v, cond_limit).values;
        },
        py::arg("sigma_c"), py::arg("sigma_d"), py::arg("v"), py::arg("cond_limit") = kDefaultCondLimit);
  m.def("select_v",
        [](const Matrix& sc, const Matrix& sd, std::optional<std::vector<double>> grid, double cond_limit) {
          const std::vector<double> g = grid ? *grid : default_v_grid();
          return select_v(CovarianceMatrix(sc), CovarianceMatrix(sd), g, cond_limit);
        },
        py::arg("sigma_c"), py::arg("sigma_d"), py::arg("grid") = py::none(),
        py::arg("cond_limit") = kDefaultCondLimit);

  m.def("expand_node_groups",
        [](const Groups& groups, int p) {
          std::vector<std::vector<std::pair<int, int>>> out;
          const EdgeGroupSet eg = groups_of(groups, p);
          for (std::size_t k = 0; k < eg.num_groups(); ++k) {
            auto& entries = out.emplace_back();
            for (const EdgeIndex& e : eg.group(k)) entries.emplace_back(e.row, e.col);
          }
          return out;
        },
        py::arg("node_groups"), py::arg("p"), "Edge groups; entries outside them act as singletons.");
  m.def("kev_norm",
        [](const Matrix& de, const Matrix& dg, const Matrix& w, const Groups& groups, double eps) {
          return kev_norm(de, dg, EdgeWeightMatrix(w), groups_of(groups, static_cast<int>(w.rows())), eps);
        },
        py::arg("delta_e"), py::arg("delta_g"), py::arg("w"), py::arg("node_groups"), py::arg("eps"));
  m.def("prox_weighted_l1",
        [](const Matrix& x, const Matrix& w, double gamma) { return prox_weighted_l1(x, EdgeWeightMatrix(w), gamma); },
        py::arg("x"), py::arg("w"), py::arg("gamma"));
  m.def("prox_group_l2",
        [](const Matrix& x, const Groups& groups, double eps, double gamma) {
          return prox_group_l2(x, groups_of(groups, static_cast<int>(x.rows())), eps, gamma);
        },
        py::arg("x"), py::arg("node_groups"), py::arg("eps"), py::arg("gamma"));

  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init<>())
      .def_readwrite("v", &SolverConfig::v)
      .def_readwrite("lambda_n", &SolverConfig::lambda_n)
      .def_readwrite("eps", &SolverConfig::eps)
      .def_readwrite("gamma", &SolverConfig::gamma)
      .def_readwrite("rho", &SolverConfig::rho)
      .def_readwrite("max_iter", &SolverConfig::max_iter)
      .def_readwrite("tol", &SolverConfig::tol)
      .def_readwrite("cond_limit", &SolverConfig::cond_limit)
      .def("validate", &SolverConfig::validate);

  py::class_<DifferentialNetwork>(m, "DifferentialNetwork")
      .def_readonly("delta", &DifferentialNetwork::delta)
      .def_readonly("delta_e", &DifferentialNetwork::delta_e)
      .def_readonly("delta_g", &DifferentialNetwork::delta_g)
      .def_readonly("components", &DifferentialNetwork::components)
      .def_readonly("iterations_run", &DifferentialNetwork::iterations_run)
      .def_readonly("converged", &DifferentialNetwork::converged)
      .def_readonly("objective", &DifferentialNetwork::objective);

  m.def("solve_diffee",
        [](const Matrix& b, double lambda_n, bool off_diagonal_only) {
          return solve_diffee(as_backward(b), lambda_n, off_diagonal_only);
        },
        py::arg("backward"), py::arg("lambda_n"), py::arg("off_diagonal_only") = false);
  m.def("solve_kdiffnet_e",
        [](const Matrix& b, const Matrix& w, double lambda_n) {
          return solve_kdiffnet_e(as_backward(b), EdgeWeightMatrix(w), lambda_n);
        },
        py::arg("backward"), py::arg("w"), py::arg("lambda_n"));
  m.def("solve_kdiffnet_g",
        [](const Matrix& b, const Groups& groups, double lambda_n) {
          return solve_kdiffnet_g(as_backward(b), groups_of(groups, static_cast<int>(b.rows())), lambda_n);
        },
        py::arg("backward"), py::arg("node_groups"), py::arg("lambda_n"));
  m.def("solve_kdiffnet_eg",
        [](const Matrix& b, const Matrix& w, const Groups& groups, const SolverConfig& cfg) {
          return solve_kdiffnet_eg(as_backward(b), EdgeWeightMatrix(w),
                                   groups_of(groups, static_cast<int>(b.rows())), cfg);
        },
        py::arg("backward"), py::arg("w"), py::arg("node_groups"), py::arg("config") = SolverConfig{},
        py::call_guard<py::gil_scoped_release>());

  py::class_<SimulationSpec>(m, "SimulationSpec")
      .def(py::init<>())
      .def_readwrite("p", &SimulationSpec::p)
      .def_readwrite("n_c", &SimulationSpec::n_c)
      .def_readwrite("n_d", &SimulationSpec::n_d)
      .def_property(
          "setting", [](const SimulationSpec& s) { return to_string(s.setting); },
          [](SimulationSpec& s, const std::string& v) { s.setting = parse_setting(v); })
      .def_readwrite("sparsity", &SimulationSpec::sparsity)
      .def_readwrite("group_size", &SimulationSpec::group_size)
      .def_readwrite("num_groups", &SimulationSpec::num_groups)
      .def_readwrite("edge_value", &SimulationSpec::edge_value)
      .def_readwrite("background_prob", &SimulationSpec::background_prob)
      .def_readwrite("delta_c", &SimulationSpec::delta_c)
      .def_readwrite("delta_d", &SimulationSpec::delta_d)
      .def_property(
          "knowledge", [](const SimulationSpec& s) { return to_string(s.knowledge); },
          [](SimulationSpec& s, const std::string& v) { s.knowledge = parse_knowledge_source(v); })
      .def_readwrite("er_prob", &SimulationSpec::er_prob)
      .def_readwrite("seed", &SimulationSpec::seed)
      .def("validate", &SimulationSpec::validate);

  py::class_<SimulatedDataset>(m, "SimulatedDataset")
      .def_readonly("spec", &SimulatedDataset::spec)
      .def_readonly("x_c", &SimulatedDataset::x_c)
      .def_readonly("x_d", &SimulatedDataset::x_d)
      .def_property_readonly("w_e",
                             [](const SimulatedDataset& d) -> std::optional<Matrix> {
                               if (!d.w_e) return std::nullopt;
                               return d.w_e->weights();
                             })
      .def_property_readonly("node_groups",
                             [](const SimulatedDataset& d) -> std::optional<Groups> {
                               if (!d.node_groups) return std::nullopt;
                               return d.node_groups->groups();
                             })
      .def_readonly("true_delta", &SimulatedDataset::true_delta)
      .def_readonly("true_omega_c", &SimulatedDataset::true_omega_c)
      .def_readonly("true_omega_d", &SimulatedDataset::true_omega_d)
      .def_readonly("edge_level", &SimulatedDataset::edge_level)
      .def("save", [](const SimulatedDataset& d, const std::string& dir) { io::save_dataset(dir, d); },
           py::arg("directory"));

  m.def("gen_dataset", [](const SimulationSpec& spec, std::optional<Matrix> distances) {
        return gen_dataset(spec, distances);
      },
        py::arg("spec"), py::arg("distances") = py::none());
  m.def("load_dataset", [](const std::string& dir) { return io::load_dataset(dir); }, py::arg("directory"));
  m.def("true_support",
        [](const Matrix& delta, double tol, bool exclude_diagonal) {
          std::vector<std::pair<int, int>> out;
          for (const EdgeIndex& e : true_support(delta, tol, exclude_diagonal)) out.emplace_back(e.row, e.col);
          return out;
        },
        py::arg("true_delta"), py::arg("tol") = 0.0, py::arg("exclude_diagonal") = true);

  m.def("score_edges",
        [](const Matrix& est, const Matrix& truth, double threshold, bool exclude_diagonal) {
          return score_dict(score_edges(est, true_support(truth, 0.0, exclude_diagonal), threshold,
                                        exclude_diagonal));
        },
        py::arg("estimated"), py::arg("true_delta"), py::arg("threshold") = kSupportThreshold,
        py::arg("exclude_diagonal") = true);
  m.def("roc_auc", &roc_auc, py::arg("fpr_tpr"));
  m.def("lambda_grid", &lambda_grid, py::arg("p"), py::arg("n_c"), py::arg("n_d"), py::arg("base"),
        py::arg("steps"));

  m.def("sweep",
        [](const SimulatedDataset& ds, const std::string& method, const std::vector<double>& lambdas,
           const std::vector<double>& eps, std::optional<std::vector<double>> v, int workers,
           const SolverConfig& base) {
          SweepGrid grid;
          grid.lambdas = lambdas;
          grid.eps = eps;
          grid.v = v ? VPolicy::fixed(*v) : VPolicy::automatic();
          SweepOptions opts;
          opts.base = base;
          opts.workers = workers;
          SweepResult r;
          {
            py::gil_scoped_release release;
            r = sweep(ds, parse_method(method), grid, opts);
          }
          py::list points;
          for (const SweepPoint& pt : r.points) {
            py::dict d;
            d["lambda_n"] = pt.lambda_n;
            d["eps"] = pt.eps;
            d["v"] = pt.v;
            d["tpr"] = pt.tpr;
            d["fpr"] = pt.fpr;
            d["f1"] = pt.f1;
            d["iterations"] = pt.iterations;
            d["converged"] = pt.converged;
            d["error"] = pt.error;
            points.append(d);
          }
          py::dict out;
          out["points"] = points;
          out["auc"] = r.auc;
          out["has_best"] = r.has_best;
          out["best_lambda"] = r.best_lambda;
          out["best_eps"] = r.best_eps;
          out["best_v"] = r.best_v;
          out["best_f1"] = r.best_f1;
          return out;
        },
        py::arg("dataset"), py::arg("method"), py::arg("lambdas"), py::arg("eps") = kDefaultEpsGrid,
        py::arg("v") = py::none(), py::arg("workers") = 1, py::arg("config") = SolverConfig{});
}
