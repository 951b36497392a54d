#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mlembed/bayesopt.hpp"
#include "mlembed/driver.hpp"
#include "mlembed/error.hpp"
#include "mlembed/model_io.hpp"

namespace py = pybind11;
using namespace mlembed;

namespace {

RunConfig make_config(const std::string& formulation, const std::string& sense, const std::string& quantity,
                      std::size_t output, const std::string& validity, double rho, double tau, double abs_gap,
                      double rel_gap, long node_limit, std::size_t grid, int threads) {
  RunConfig c;
  if (formulation == "fullspace") c.formulation = Formulation::fullspace;
  else if (formulation != "reduced") fail(ErrorKind::config, "formulation must be 'reduced' or 'fullspace'");
  if (sense == "max") c.maximize = true;
  else if (sense != "min") fail(ErrorKind::config, "sense must be 'min' or 'max'");
  if (quantity == "mean") c.quantity = Quantity::gp_mean;
  else if (quantity == "variance") c.quantity = Quantity::gp_variance;
  else if (quantity != "output") fail(ErrorKind::config, "quantity must be 'output', 'mean' or 'variance'");
  if (validity == "hull") c.validity = Validity::hull;
  else if (validity == "penalty") c.validity = Validity::penalty;
  else if (validity != "none") fail(ErrorKind::config, "validity must be 'none', 'hull' or 'penalty'");
  c.output = output;
  c.rho = rho;
  c.tau = tau;
  c.abs_gap = abs_gap;
  c.rel_gap = rel_gap;
  c.node_limit = node_limit;
  c.grid = grid;
  c.threads = threads;
  return c;
}

py::dict report_dict(const SolveReport& r) {
  py::dict d;
  d["formulation"] = to_string(r.formulation);
  d["solver"] = r.solver;
  d["status"] = r.status;
  d["optimum"] = r.has_solution ? py::object(py::float_(r.optimum)) : py::object(py::none());
  d["x"] = r.x;
  d["bound"] = r.bound;
  d["abs_gap"] = r.abs_gap;
  d["rel_gap"] = r.rel_gap;
  d["nodes"] = r.nodes;
  d["seconds"] = r.seconds;
  d["warnings"] = r.warnings;
  if (r.has_grid) {
    d["grid_optimum"] = r.grid_optimum;
    d["grid_x"] = r.grid_x;
  }
  return d;
}

#define CONFIG_ARGS                                                                                   \
  py::arg("formulation") = "reduced", py::arg("sense") = "min", py::arg("quantity") = "output",       \
  py::arg("output") = 0, py::arg("validity") = "none", py::arg("rho") = 1.0, py::arg("tau") = 0.01,   \
  py::arg("abs_gap") = 1e-6, py::arg("rel_gap") = 1e-6, py::arg("node_limit") = 200000,              \
  py::arg("grid") = 0, py::arg("threads") = 1

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Optimization over embedded machine-learning surrogates";

  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });

  py::class_<TrainedModel>(m, "Model")
      .def_property_readonly("name", [](const TrainedModel& t) { return t.name; })
      .def_property_readonly("kind", [](const TrainedModel& t) { return std::string(to_string(t.kind())); })
      .def_property_readonly("input_dim", &TrainedModel::input_dim)
      .def_property_readonly("output_dim", &TrainedModel::output_dim)
      .def_property_readonly("warnings", [](const TrainedModel& t) { return t.warnings; })
      .def_property_readonly("input_box",
                             [](const TrainedModel& t) {
                               const Box& b = t.input_box();
                               return std::make_pair(b.lower, b.upper);
                             })
      .def("evaluate", [](const TrainedModel& t, const std::vector<double>& x) {
        if (x.size() != t.input_dim()) fail(ErrorKind::dimension, "point dimension differs from the model");
        return t.evaluate(x);
      })
      .def("to_json", [](const TrainedModel& t) { return dump_model(t); });

  m.def("load_model", [](const std::string& doc) { return load_model(doc); }, py::arg("document"));
  m.def("load_model_file", [](const std::string& path) { return load_model_file(path); }, py::arg("path"));

  m.def(
      "solve",
      [](const TrainedModel& model, const std::string& formulation, const std::string& sense,
         const std::string& quantity, std::size_t output, const std::string& validity, double rho, double tau,
         double abs_gap, double rel_gap, long node_limit, std::size_t grid, int threads) {
        const RunConfig c = make_config(formulation, sense, quantity, output, validity, rho, tau, abs_gap,
                                        rel_gap, node_limit, grid, threads);
        py::gil_scoped_release release;
        const SolveReport r = solve_model(model, c);
        py::gil_scoped_acquire acquire;
        return report_dict(r);
      },
      py::arg("model"), CONFIG_ARGS);

  m.def(
      "compare",
      [](const TrainedModel& model, const std::string& formulation, const std::string& sense,
         const std::string& quantity, std::size_t output, const std::string& validity, double rho, double tau,
         double abs_gap, double rel_gap, long node_limit, std::size_t grid, int threads) {
        const RunConfig c = make_config(formulation, sense, quantity, output, validity, rho, tau, abs_gap,
                                        rel_gap, node_limit, grid, threads);
        CompareReport r;
        {
          py::gil_scoped_release release;
          r = compare_formulations(model, c);
        }
        py::dict d;
        d["reduced"] = report_dict(r.reduced);
        d["fullspace"] = report_dict(r.fullspace);
        d["difference"] = r.difference;
        return d;
      },
      py::arg("model"), CONFIG_ARGS);

  m.def(
      "formulate_lp",
      [](const TrainedModel& model, const std::string& sense, std::size_t output) {
        RunConfig c;
        c.maximize = sense == "max";
        c.output = output;
        return formulate_lp(model, c);
      },
      py::arg("model"), py::arg("sense") = "min", py::arg("output") = 0);

  m.def(
      "bayesopt",
      [](const std::function<double(std::vector<double>)>& objective, const std::vector<double>& lower,
         const std::vector<double>& upper, std::size_t budget, std::size_t initial, std::uint64_t seed,
         std::vector<double> kernel_weights, double signal_variance, double noise_variance) {
        Box box;
        box.lower = lower;
        box.upper = upper;
        BoSurrogate s;
        if (kernel_weights.empty()) {
          for (std::size_t j = 0; j < lower.size(); ++j) kernel_weights.push_back(4.0 / (upper[j] - lower[j]));
        }
        s.lengthscales = kernel_weights;
        s.signal_variance = signal_variance;
        s.noise_variance = noise_variance;
        BoOptions o;
        o.budget = budget;
        o.initial = initial;
        o.seed = seed;
        const auto history = bo_run(
            [&](std::span<const double> x) { return objective(std::vector<double>(x.begin(), x.end())); }, box, s,
            o);
        py::list out;
        for (const auto& r : history) {
          py::dict d;
          d["iteration"] = r.iteration;
          d["x"] = r.x;
          d["value"] = r.value;
          d["best"] = r.best;
          d["source"] = r.from_design ? "design" : (r.fallback ? "fallback" : "ei");
          out.append(d);
        }
        return out;
      },
      py::arg("objective"), py::arg("lower"), py::arg("upper"), py::arg("budget") = 12, py::arg("initial") = 3,
      py::arg("seed") = 0, py::arg("kernel_weights") = std::vector<double>{}, py::arg("signal_variance") = 1.0,
      py::arg("noise_variance") = 1e-8);
}
