#include "mlembed/bayesopt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "mlembed/embed.hpp"
#include "mlembed/error.hpp"

namespace mlembed {

BoState::BoState(const BoSurrogate& surrogate, const Box& box) : surrogate_(surrogate), box_(box) {
  box_.validate("bayesian optimization box");
  if (surrogate_.lengthscales.size() != box_.size()) {
    fail(ErrorKind::dimension, "bayesian optimization: lengthscale count does not match box");
  }
}

void BoState::observe(std::vector<double> x, double y, bool from_design, bool fallback) {
  if (x.size() != box_.size()) fail(ErrorKind::dimension, "bayesian optimization: point dimension");
  if (!std::isfinite(y)) fail(ErrorKind::numeric, "bayesian optimization: non-finite observation");
  xs.push_back(std::move(x));
  ys.push_back(y);
  best = iteration == 0 ? y : std::min(best, y);
  ++iteration;
  history.push_back(BoRecord{iteration, xs.back(), y, best, from_design, fallback});

  const auto n = static_cast<Eigen::Index>(xs.size());
  const auto d = static_cast<Eigen::Index>(box_.size());
  Eigen::MatrixXd X(n, d);
  Eigen::VectorXd Y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) X(i, j) = xs[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    Y[i] = ys[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(surrogate_.lengthscales.data(), d);
  gp = GaussianProcessModel(std::move(X), std::move(Y), w, surrogate_.signal_variance,
                            surrogate_.noise_variance, surrogate_.prior_mean, box_);
}

ExprGraph build_ei_graph(const GaussianProcessModel& gp, double incumbent, double sigma_floor) {
  const Box& box = gp.input_box();
  ExprGraph g(box.size(), box);
  std::vector<Expr> inputs;
  for (std::size_t j = 0; j < box.size(); ++j) inputs.push_back(g.variable(j));
  g.add_output(embed_expected_improvement(g, gp, inputs, incumbent, sigma_floor));
  return g;
}

GlobalOptions BoOptions::default_global() {
  GlobalOptions o;
  o.rel_tol = 1e-3;
  o.abs_tol = 1e-9;
  o.node_limit = 20000;
  return o;
}

std::vector<double> farthest_vertex(const Box& box, const std::vector<std::vector<double>>& points) {
  const std::size_t n = box.size();
  if (n > 20) fail(ErrorKind::unsupported, "farthest_vertex: too many dimensions to enumerate vertices");
  std::vector<double> best(n);
  double best_d = -1.0;
  std::vector<double> v(n);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    for (std::size_t j = 0; j < n; ++j) v[j] = (mask >> j) & 1u ? box.upper[j] : box.lower[j];
    double dmin = std::numeric_limits<double>::infinity();
    for (const auto& p : points) {
      double d = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double w = box.width(j) > 0.0 ? box.width(j) : 1.0;
        const double t = (v[j] - p[j]) / w;
        d += t * t;
      }
      dmin = std::min(dmin, d);
    }
    if (dmin > best_d) {
      best_d = dmin;
      best = v;
    }
  }
  return best;
}

BoStep bo_step(const BoState& state, const Box& box, const BoOptions& options) {
  if (state.xs.empty()) fail(ErrorKind::validation, "bo_step: needs at least one observation");
  box.validate("bo_step box");
  for (std::size_t j = 0; j < box.size(); ++j) {
    if (!(box.width(j) > 0.0)) fail(ErrorKind::validation, "bo_step: degenerate box");
  }
  HybridProblem problem;
  problem.box = box;
  problem.objective = ExprGraph(box.size(), box);
  std::vector<Expr> inputs;
  for (std::size_t j = 0; j < box.size(); ++j) inputs.push_back(problem.objective.variable(j));
  const Expr ei = embed_expected_improvement(problem.objective, state.gp, inputs, state.best, options.sigma_floor);
  problem.objective.add_output(problem.objective.negate(ei));
  BoStep step;
  step.solve = solve_global(problem, options.global);
  if (step.solve.has_incumbent) {
    step.x = step.solve.x;
    step.expected_improvement = -step.solve.objective;
  }
  // Nothing to gain anywhere beyond the floor-level value: explore instead.
  if (!step.solve.has_incumbent || step.expected_improvement <= options.sigma_floor) {
    step.x = farthest_vertex(box, state.xs);
    step.fallback = true;
  }
  for (std::size_t j = 0; j < box.size(); ++j) step.x[j] = std::clamp(step.x[j], box.lower[j], box.upper[j]);
  return step;
}

std::vector<BoRecord> bo_run(const BoObjective& objective, const Box& box, const BoSurrogate& surrogate,
                             const BoOptions& options) {
  if (options.initial < 2) fail(ErrorKind::config, "bo_run: initial design needs at least 2 points");
  if (options.budget < options.initial) fail(ErrorKind::config, "bo_run: budget smaller than the initial design");
  BoState state(surrogate, box);
  auto evaluate = [&](const std::vector<double>& x) {
    try {
      return objective(x);
    } catch (const std::exception& e) {
      fail(ErrorKind::numeric,
           "objective failed at iteration " + std::to_string(state.iteration + 1) + ": " + e.what());
    }
  };
  for (std::size_t k = 0; k < options.initial; ++k) {
    std::vector<double> x = halton(static_cast<std::size_t>(options.seed) + k + 1, box.size());
    for (std::size_t j = 0; j < box.size(); ++j) x[j] = box.lower[j] + x[j] * box.width(j);
    const double y = evaluate(x);
    state.observe(std::move(x), y, true, false);
  }
  while (state.iteration < options.budget) {
    BoStep step = bo_step(state, box, options);
    const double y = evaluate(step.x);
    state.observe(std::move(step.x), y, false, step.fallback);
  }
  return state.history;
}

std::string format_history(const std::vector<BoRecord>& history) {
  std::string out = "iteration";
  const std::size_t n = history.empty() ? 0 : history.front().x.size();
  for (std::size_t j = 0; j < n; ++j) out += "\tx" + std::to_string(j + 1);
  out += "\tvalue\tbest\tsource\n";
  char buf[64];
  for (const auto& r : history) {
    out += std::to_string(r.iteration);
    for (double v : r.x) {
      std::snprintf(buf, sizeof buf, "\t%.17g", v);
      out += buf;
    }
    std::snprintf(buf, sizeof buf, "\t%.17g\t%.17g\t", r.value, r.best);
    out += buf;
    out += r.from_design ? "design" : (r.fallback ? "fallback" : "ei");
    out += '\n';
  }
  return out;
}

}  // namespace mlembed
