#include "mlembed/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "mlembed/bayesopt.hpp"
#include "mlembed/driver.hpp"
#include "mlembed/error.hpp"
#include "mlembed/model_io.hpp"

namespace mlembed {

namespace {

using nlohmann::ordered_json;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string nums(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + num(v[i]);
  return s;
}

ordered_json jnum(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(num(v)); }

ordered_json jvec(const std::vector<double>& v) {
  ordered_json a = ordered_json::array();
  for (double d : v) a.push_back(jnum(d));
  return a;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::config, "cannot open output file '" + path + "'");
  f << text;
  if (!f) fail(ErrorKind::config, "failed writing output file '" + path + "'");
}

struct Flags {
  std::string model;
  std::string formulation = "reduced";
  std::string sense = "min";
  std::string quantity = "output";
  std::size_t output = 0;
  std::string validity = "none";
  std::string data;
  double rho = 1.0;
  double tau = 0.01;
  double abs_gap = 1e-6;
  double rel_gap = 1e-6;
  long node_limit = 200000;
  std::size_t grid = 0;
  int threads = 1;
  std::uint64_t seed = 0;
  std::string out;
  std::string points;
  bool no_assert = false;
  double tolerance = 1e-4;
  // bo
  std::string function;
  std::size_t dim = 1;
  std::size_t budget = 12;
  std::size_t initial = 3;
  double kernel_weight = 0.0;
  double signal_variance = 1.0;
  double noise_variance = 1e-8;
};

RunConfig to_config(const Flags& f, const TrainedModel* model) {
  RunConfig c;
  c.formulation = f.formulation == "fullspace" ? Formulation::fullspace : Formulation::reduced;
  c.maximize = f.sense == "max";
  if (f.quantity == "mean") c.quantity = Quantity::gp_mean;
  else if (f.quantity == "variance") c.quantity = Quantity::gp_variance;
  else c.quantity = Quantity::output;
  c.output = f.output;
  if (f.validity == "hull") c.validity = Validity::hull;
  else if (f.validity == "penalty") c.validity = Validity::penalty;
  c.rho = f.rho;
  c.tau = f.tau;
  c.abs_gap = f.abs_gap;
  c.rel_gap = f.rel_gap;
  c.node_limit = f.node_limit;
  c.grid = f.grid;
  c.threads = f.threads;
  c.seed = f.seed;
  if (!f.data.empty() && model) {
    const auto rows = parse_points(read_text_file(f.data), model->input_dim());
    Dataset d;
    d.inputs.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(model->input_dim()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < rows[i].size(); ++j) {
        d.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
      }
    }
    c.data = std::move(d);
  }
  return c;
}

void print_report(std::ostream& out, const std::string& prefix, const SolveReport& r) {
  out << prefix << "formulation: " << to_string(r.formulation) << '\n';
  out << prefix << "solver: " << r.solver << '\n';
  out << prefix << "status: " << r.status << '\n';
  if (r.has_solution) {
    out << prefix << "optimum: " << num(r.optimum) << '\n';
    out << prefix << "x: " << nums(r.x) << '\n';
  } else {
    out << prefix << "optimum: none\n";
  }
  out << prefix << "bound: " << num(r.bound) << '\n';
  out << prefix << "abs_gap: " << num(r.abs_gap) << '\n';
  out << prefix << "rel_gap: " << num(r.rel_gap) << '\n';
  out << prefix << "nodes: " << r.nodes << '\n';
  out << prefix << "variables: " << r.variables << '\n';
  out << prefix << "binaries: " << r.binaries << '\n';
  if (r.has_grid) {
    out << prefix << "grid_optimum: " << num(r.grid_optimum) << '\n';
    out << prefix << "grid_x: " << nums(r.grid_x) << '\n';
  }
  for (const auto& w : r.warnings) out << prefix << "warning: " << w << '\n';
}

ordered_json report_json(const SolveReport& r) {
  ordered_json j;
  j["formulation"] = to_string(r.formulation);
  j["solver"] = r.solver;
  j["status"] = r.status;
  j["has_solution"] = r.has_solution;
  j["optimum"] = r.has_solution ? jnum(r.optimum) : ordered_json(nullptr);
  j["x"] = jvec(r.x);
  j["bound"] = jnum(r.bound);
  j["abs_gap"] = jnum(r.abs_gap);
  j["rel_gap"] = jnum(r.rel_gap);
  j["nodes"] = r.nodes;
  j["variables"] = r.variables;
  j["binaries"] = r.binaries;
  if (r.has_grid) {
    j["grid_optimum"] = jnum(r.grid_optimum);
    j["grid_x"] = jvec(r.grid_x);
  }
  j["warnings"] = r.warnings;
  return j;
}

int cmd_evaluate(const Flags& f, std::ostream& out) {
  const TrainedModel model = load_model_file(f.model);
  if (f.points.empty()) fail(ErrorKind::config, "evaluate needs --points");
  const auto rows = parse_points(read_text_file(f.points), model.input_dim());
  std::string text;
  for (const auto& row : rows) text += nums(model.evaluate(row)) + '\n';
  if (f.out.empty()) {
    out << text;
  } else {
    write_file(f.out, text);
    out << "rows: " << rows.size() << '\n';
  }
  return 0;
}

int cmd_solve(const Flags& f, std::ostream& out, std::ostream& log) {
  const TrainedModel model = load_model_file(f.model);
  const SolveReport r = solve_model(model, to_config(f, &model));
  out << "model: " << model.name << '\n';
  out << "sense: " << f.sense << '\n';
  print_report(out, "", r);
  log << "time: solve " << num(r.seconds) << " s\n";
  if (!f.out.empty()) {
    ordered_json j;
    j["command"] = "solve";
    j["model"] = model.name;
    j["sense"] = f.sense;
    j["result"] = report_json(r);
    write_file(f.out, j.dump(2) + '\n');
  }
  return 0;
}

int cmd_compare(const Flags& f, std::ostream& out, std::ostream& log) {
  const TrainedModel model = load_model_file(f.model);
  const CompareReport c = compare_formulations(model, to_config(f, &model));
  const bool agree = c.difference <= f.tolerance;
  out << "model: " << model.name << '\n';
  out << "sense: " << f.sense << '\n';
  print_report(out, "reduced.", c.reduced);
  print_report(out, "fullspace.", c.fullspace);
  out << "difference: " << num(c.difference) << '\n';
  out << "agreement: " << (agree ? "yes" : "no") << '\n';
  log << "time: reduced " << num(c.reduced.seconds) << " s, fullspace " << num(c.fullspace.seconds) << " s\n";
  if (!f.out.empty()) {
    ordered_json j;
    j["command"] = "compare";
    j["model"] = model.name;
    j["sense"] = f.sense;
    j["reduced"] = report_json(c.reduced);
    j["fullspace"] = report_json(c.fullspace);
    j["difference"] = jnum(c.difference);
    j["tolerance"] = f.tolerance;
    j["agreement"] = agree;
    write_file(f.out, j.dump(2) + '\n');
  }
  if (!agree && !f.no_assert) {
    log << "error: reduced and full-space optima differ by " << num(c.difference) << " (tolerance "
        << num(f.tolerance) << ")\n";
    return 1;
  }
  return 0;
}

int cmd_formulate(const Flags& f, std::ostream& out) {
  const TrainedModel model = load_model_file(f.model);
  const std::string lp = formulate_lp(model, to_config(f, &model)) + '\n';
  if (f.out.empty()) {
    out << lp;
  } else {
    write_file(f.out, lp);
    out << "written: " << f.out << '\n';
  }
  return 0;
}

int cmd_bo(const Flags& f, std::ostream& out, std::ostream& log) {
  BoObjective objective;
  Box box;
  std::string name;
  std::optional<TrainedModel> model;
  if (!f.model.empty() && !f.function.empty()) fail(ErrorKind::config, "bo takes --model or --function, not both");
  if (!f.model.empty()) {
    model = load_model_file(f.model);
    const RunConfig c = to_config(f, &*model);
    check_config(*model, c);
    const double sign = c.maximize ? -1.0 : 1.0;
    const TrainedModel* m = &*model;
    objective = [m, c, sign](std::span<const double> x) { return sign * model_objective(*m, x, c); };
    box = model->input_box();
    name = model->name;
  } else {
    const std::string fn = f.function.empty() ? "quadratic" : f.function;
    if (f.dim < 1) fail(ErrorKind::config, "--dim must be >= 1");
    box.lower.assign(f.dim, 0.0);
    box.upper.assign(f.dim, 1.0);
    if (fn == "quadratic") {
      objective = [](std::span<const double> x) {
        double s = 0.0;
        for (double v : x) s += (v - 0.3) * (v - 0.3);
        return s;
      };
    } else if (fn == "forrester") {
      if (f.dim != 1) fail(ErrorKind::config, "forrester is one-dimensional");
      objective = [](std::span<const double> x) {
        const double t = 6.0 * x[0] - 2.0;
        return t * t * std::sin(12.0 * x[0] - 4.0);
      };
    } else {
      fail(ErrorKind::config, "unknown builtin function '" + fn + "' (quadratic, forrester)");
    }
    name = fn;
  }
  BoSurrogate s;
  for (std::size_t j = 0; j < box.size(); ++j) {
    s.lengthscales.push_back(f.kernel_weight > 0.0 ? f.kernel_weight : 4.0 / box.width(j));
  }
  s.signal_variance = f.signal_variance;
  s.noise_variance = f.noise_variance;
  BoOptions o;
  o.budget = f.budget;
  o.initial = f.initial;
  o.seed = f.seed;
  o.global.threads = f.threads;
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<BoRecord> history = bo_run(objective, box, s, o);
  log << "time: bo " << num(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count())
      << " s\n";
  const std::string tsv = format_history(history);
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (history[i].value < history[best_i].value) best_i = i;
  }
  if (f.out.empty()) {
    out << tsv;
  } else {
    write_file(f.out, tsv);
  }
  out << "objective: " << name << '\n';
  out << "evaluations: " << history.size() << '\n';
  out << "best: " << num(history[best_i].value) << '\n';
  out << "best_x: " << nums(history[best_i].x) << '\n';
  return 0;
}

void add_model_flags(CLI::App* sub, Flags& f, bool required = true) {
  auto* opt = sub->add_option("--model", f.model, "portable model document (JSON)");
  if (required) opt->required();
}

void add_solve_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--formulation", f.formulation, "reduced | fullspace")
      ->check(CLI::IsMember({"reduced", "fullspace"}));
  sub->add_option("--sense", f.sense, "min | max")->check(CLI::IsMember({"min", "max"}));
  sub->add_option("--quantity", f.quantity, "output | mean | variance")
      ->check(CLI::IsMember({"output", "mean", "variance"}));
  sub->add_option("--output", f.output, "network output index");
  sub->add_option("--validity", f.validity, "none | hull | penalty")
      ->check(CLI::IsMember({"none", "hull", "penalty"}));
  sub->add_option("--data", f.data, "validity data points file (defaults to GP training inputs)");
  sub->add_option("--rho", f.rho, "penalty weight");
  sub->add_option("--tau", f.tau, "penalty softmin temperature");
  sub->add_option("--abs-gap", f.abs_gap, "absolute optimality gap");
  sub->add_option("--rel-gap", f.rel_gap, "relative optimality gap");
  sub->add_option("--node-limit", f.node_limit, "branch-and-bound node limit");
  sub->add_option("--grid", f.grid, "also scan a grid with this many points per input");
  sub->add_option("--threads", f.threads, "worker threads");
  sub->add_option("--seed", f.seed, "seed (unused by deterministic solvers)");
  sub->add_option("--out", f.out, "machine-readable output path");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& log) {
  CLI::App app{"Optimization over embedded machine-learning surrogates", "mlembed"};
  app.require_subcommand(1);
  Flags f;

  auto* evaluate = app.add_subcommand("evaluate", "evaluate a model at the rows of a points file");
  add_model_flags(evaluate, f);
  evaluate->add_option("--points", f.points, "whitespace-separated input rows")->required();
  evaluate->add_option("--out", f.out, "values file");

  auto* solve = app.add_subcommand("solve", "optimize a model output over its input box");
  add_model_flags(solve, f);
  add_solve_flags(solve, f);

  auto* compare = app.add_subcommand("compare", "solve reduced and full-space formulations and compare");
  add_model_flags(compare, f);
  add_solve_flags(compare, f);
  compare->add_flag("--no-assert", f.no_assert, "report disagreement without failing");
  compare->add_option("--tolerance", f.tolerance, "allowed optimum difference");

  auto* formulate = app.add_subcommand("formulate", "write the full-space MILP in LP-file format");
  add_model_flags(formulate, f);
  formulate->add_option("--sense", f.sense, "min | max")->check(CLI::IsMember({"min", "max"}));
  formulate->add_option("--output", f.output, "network output index");
  formulate->add_option("--validity", f.validity, "none | hull")->check(CLI::IsMember({"none", "hull"}));
  formulate->add_option("--data", f.data, "validity data points file");
  formulate->add_option("--out", f.out, "LP file path");

  auto* bo = app.add_subcommand("bo", "Bayesian optimization of a model or builtin function");
  add_model_flags(bo, f, false);
  bo->add_option("--function", f.function, "builtin objective: quadratic | forrester");
  bo->add_option("--dim", f.dim, "dimension of the builtin objective");
  bo->add_option("--sense", f.sense, "min | max")->check(CLI::IsMember({"min", "max"}));
  bo->add_option("--quantity", f.quantity, "output | mean | variance")
      ->check(CLI::IsMember({"output", "mean", "variance"}));
  bo->add_option("--output", f.output, "network output index");
  bo->add_option("--budget", f.budget, "total evaluations");
  bo->add_option("--initial", f.initial, "initial design size");
  bo->add_option("--seed", f.seed, "Halton offset of the initial design");
  bo->add_option("--kernel-weight", f.kernel_weight, "kernel distance weight (default 4/width)");
  bo->add_option("--signal-variance", f.signal_variance, "kernel signal variance");
  bo->add_option("--noise-variance", f.noise_variance, "observation noise variance");
  bo->add_option("--threads", f.threads, "worker threads");
  bo->add_option("--out", f.out, "history file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, log);
    return code == 0 ? 0 : 2;
  }

  try {
    if (evaluate->parsed()) return cmd_evaluate(f, out);
    if (solve->parsed()) return cmd_solve(f, out, log);
    if (compare->parsed()) return cmd_compare(f, out, log);
    if (formulate->parsed()) return cmd_formulate(f, out);
    if (bo->parsed()) return cmd_bo(f, out, log);
  } catch (const Error& e) {
    log << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return e.kind() == ErrorKind::internal || e.kind() == ErrorKind::numeric ? 3 : 2;
  } catch (const std::exception& e) {
    log << "error (internal): " << e.what() << '\n';
    return 3;
  }
  return 2;
}

}  // namespace mlembed
