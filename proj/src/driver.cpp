#include "mlembed/driver.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "mlembed/encoders.hpp"
#include "mlembed/error.hpp"
#include "mlembed/global.hpp"
#include "mlembed/milp.hpp"

namespace mlembed {

const char* to_string(Formulation f) { return f == Formulation::reduced ? "reduced" : "fullspace"; }

const char* to_string(Validity v) {
  switch (v) {
    case Validity::none: return "none";
    case Validity::hull: return "hull";
    case Validity::penalty: return "penalty";
  }
  return "?";
}

namespace {

bool is_milp_model(const TrainedModel& model) {
  switch (model.kind()) {
    case ModelKind::tree_ensemble:
    case ModelKind::crs: return true;
    case ModelKind::gp: return false;
    case ModelKind::ann: {
      const auto& net = std::get<FeedForwardNetwork>(model.model);
      for (const auto& layer : net.layers) {
        if (layer.activation == Activation::tanh) return false;
      }
      return true;
    }
  }
  return false;
}

Dataset validity_data(const TrainedModel& model, const RunConfig& config) {
  if (config.data) return *config.data;
  if (model.kind() == ModelKind::gp) {
    Dataset d;
    d.inputs = std::get<GaussianProcessModel>(model.model).inputs();
    return d;
  }
  fail(ErrorKind::config, std::string("validity '") + to_string(config.validity) +
                              "' needs a data file for " + to_string(model.kind()) + " models");
}

std::vector<double> penalty_weights(const Box& box) {
  std::vector<double> w(box.size());
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double width = box.width(j);
    w[j] = width > 0.0 ? 1.0 / (width * width) : 1.0;
  }
  return w;
}

std::vector<int> identity_vars(std::size_t n) {
  std::vector<int> v(n);
  for (std::size_t j = 0; j < n; ++j) v[j] = static_cast<int>(j);
  return v;
}

GlobalOptions global_options(const RunConfig& c) {
  GlobalOptions o;
  o.abs_tol = c.abs_gap;
  o.rel_tol = c.rel_gap;
  o.node_limit = c.node_limit;
  o.threads = c.threads;
  return o;
}

MilpOptions milp_options(const RunConfig& c) {
  MilpOptions o;
  o.abs_gap = c.abs_gap;
  o.rel_gap = c.rel_gap;
  o.node_limit = c.node_limit;
  o.threads = c.threads;
  return o;
}

// Runs the spatial solver on a minimization problem whose first n variables
// are the model inputs; `flip` negates the reported values back.
void run_global(const HybridProblem& problem, std::size_t n, bool flip, const RunConfig& config,
                SolveReport& r) {
  const GlobalSolution s = solve_global(problem, global_options(config));
  r.solver = "global";
  r.status = to_string(s.status);
  r.has_solution = s.has_incumbent;
  r.nodes = s.nodes;
  r.variables = problem.num_vars();
  const double sign = flip ? -1.0 : 1.0;
  r.bound = sign * s.lower_bound;
  if (s.has_incumbent) {
    r.optimum = sign * s.objective;
    r.x.assign(s.x.begin(), s.x.begin() + static_cast<std::ptrdiff_t>(n));
    r.abs_gap = s.abs_gap;
    r.rel_gap = s.rel_gap;
  }
}

void run_milp(const ProblemIR& ir, const RunConfig& config, SolveReport& r) {
  const MilpSolution s = solve_milp(ir, milp_options(config));
  r.solver = "milp";
  r.status = to_string(s.status);
  r.has_solution = s.has_incumbent;
  r.nodes = s.nodes;
  r.variables = ir.num_vars();
  r.binaries = ir.num_binaries();
  r.bound = s.bound;
  if (s.has_incumbent) {
    r.optimum = s.objective;
    for (int v : ir.input_vars) r.x.push_back(s.x[static_cast<std::size_t>(v)]);
    r.abs_gap = s.abs_gap;
    r.rel_gap = s.rel_gap;
  }
}

void solve_reduced(const TrainedModel& model, const RunConfig& config, SolveReport& r) {
  EmbedOptions eo;
  eo.quantity = config.quantity;
  ExprGraph g = embed_reduced_space(model, eo);
  const std::size_t n = model.input_dim();
  Expr out = g.outputs().at(config.output);
  if (config.maximize) out = g.negate(out);
  g.set_outputs({out});
  HybridProblem p;
  p.box = model.input_box();
  p.objective = std::move(g);
  const std::vector<int> xv = identity_vars(n);
  if (config.validity == Validity::hull) {
    encode_hull_validity(p, validity_data(model, config), xv);
  } else if (config.validity == Validity::penalty) {
    encode_distance_penalty(p, validity_data(model, config), xv, config.rho, config.tau,
                            penalty_weights(model.input_box()));
  }
  run_global(p, n, config.maximize, config, r);
}

void solve_fullspace(const TrainedModel& model, const RunConfig& config, SolveReport& r) {
  ProblemIR ir = encode_fullspace(model, model.input_box(), config.quantity, config.output);
  ir.maximize = config.maximize;
  r.warnings.insert(r.warnings.end(), ir.warnings.begin(), ir.warnings.end());
  if (config.validity == Validity::hull) encode_hull_validity(ir, validity_data(model, config), ir.input_vars);
  if (ir.num_binaries() > 0 || (ir.is_linear() && config.validity != Validity::penalty)) {
    if (config.validity == Validity::penalty) {
      fail(ErrorKind::config, "penalty validity is nonlinear and cannot be added to a MILP formulation");
    }
    run_milp(ir, config, r);
    return;
  }
  HybridProblem p = to_hybrid(ir);
  if (config.validity == Validity::penalty) {
    encode_distance_penalty(p, validity_data(model, config), ir.input_vars, config.rho, config.tau,
                            penalty_weights(model.input_box()));
  }
  // Inputs are not necessarily the leading variables here.
  run_global(p, p.num_vars(), config.maximize, config, r);
  if (r.has_solution) {
    std::vector<double> inputs;
    for (int v : ir.input_vars) inputs.push_back(r.x[static_cast<std::size_t>(v)]);
    r.x = std::move(inputs);
  }
}

}  // namespace

double model_objective(const TrainedModel& model, std::span<const double> x, const RunConfig& config) {
  const std::vector<double> y = model.evaluate(x);
  if (model.kind() == ModelKind::gp) return config.quantity == Quantity::gp_variance ? y.at(1) : y.at(0);
  return y.at(config.output);
}

void check_config(const TrainedModel& model, const RunConfig& config) {
  const bool discontinuous = model.kind() == ModelKind::tree_ensemble || model.kind() == ModelKind::crs;
  if (discontinuous && config.formulation == Formulation::reduced) {
    fail(ErrorKind::config, std::string("formulation 'reduced' is not available for ") +
                                to_string(model.kind()) + " models; use 'fullspace'");
  }
  if (config.output >= model.output_dim() && model.kind() != ModelKind::gp) {
    fail(ErrorKind::config, "output index " + std::to_string(config.output) + " out of range");
  }
  if (config.quantity == Quantity::expected_improvement) {
    fail(ErrorKind::config, "expected improvement is only available through the bo command");
  }
  if (config.quantity == Quantity::gp_variance && model.kind() != ModelKind::gp) {
    fail(ErrorKind::config, "quantity 'variance' needs a GP model");
  }
  if (config.validity == Validity::penalty) {
    if (!(config.rho >= 0.0)) fail(ErrorKind::config, "--rho must be >= 0");
    if (!(config.tau > 0.0)) fail(ErrorKind::config, "--tau must be > 0");
    if (config.formulation == Formulation::fullspace && is_milp_model(model)) {
      fail(ErrorKind::config, "penalty validity is nonlinear and cannot be added to a MILP formulation");
    }
  }
  if (config.data && config.data->dim() != model.input_dim()) {
    fail(ErrorKind::config, "validity data dimension differs from the model input dimension");
  }
  if (config.node_limit < 1) fail(ErrorKind::config, "--node-limit must be >= 1");
  if (config.threads < 1) fail(ErrorKind::config, "--threads must be >= 1");
  if (!(config.abs_gap >= 0.0) || !(config.rel_gap >= 0.0)) fail(ErrorKind::config, "gaps must be >= 0");
  if (config.grid == 1) fail(ErrorKind::config, "--grid needs at least 2 points per dimension");
  if (config.grid > 1 && model.input_dim() > 3) fail(ErrorKind::config, "--grid supports at most 3 inputs");
}

SolveReport solve_model(const TrainedModel& model, const RunConfig& config) {
  check_config(model, config);
  SolveReport r;
  r.formulation = config.formulation;
  r.warnings = model.warnings;
  const auto t0 = std::chrono::steady_clock::now();
  if (config.formulation == Formulation::reduced) {
    solve_reduced(model, config, r);
  } else {
    solve_fullspace(model, config, r);
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (config.grid > 1 && config.validity == Validity::none) {
    const double sign = config.maximize ? -1.0 : 1.0;
    const GridResult g = grid_oracle(
        [&](std::span<const double> x) { return sign * model_objective(model, x, config); },
        model.input_box(), config.grid);
    if (!g.x.empty()) {
      r.has_grid = true;
      r.grid_optimum = sign * g.value;
      r.grid_x = g.x;
    }
  }
  return r;
}

CompareReport compare_formulations(const TrainedModel& model, RunConfig config) {
  CompareReport c;
  config.formulation = Formulation::reduced;
  check_config(model, config);
  config.formulation = Formulation::fullspace;
  check_config(model, config);
  config.formulation = Formulation::reduced;
  c.reduced = solve_model(model, config);
  config.formulation = Formulation::fullspace;
  c.fullspace = solve_model(model, config);
  c.difference = c.reduced.has_solution && c.fullspace.has_solution
                     ? std::abs(c.reduced.optimum - c.fullspace.optimum)
                     : std::numeric_limits<double>::infinity();
  return c;
}

std::string formulate_lp(const TrainedModel& model, const RunConfig& config) {
  RunConfig c = config;
  c.formulation = Formulation::fullspace;
  check_config(model, c);
  if (!is_milp_model(model)) {
    fail(ErrorKind::unsupported, std::string("model '") + model.name +
                                     "' has a nonlinear full-space formulation; LP export covers "
                                     "ReLU networks, tree ensembles and region surrogates");
  }
  ProblemIR ir = encode_fullspace(model, model.input_box(), c.quantity, c.output);
  ir.maximize = c.maximize;
  if (c.validity == Validity::hull) encode_hull_validity(ir, validity_data(model, c), ir.input_vars);
  return export_lp(ir);
}

}  // namespace mlembed
