#include "mlembed/global.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "mlembed/error.hpp"
#include "mlembed/lp.hpp"
#include "mlembed/parallel.hpp"

namespace mlembed {

const char* to_string(GlobalStatus status) {
  switch (status) {
    case GlobalStatus::converged: return "converged";
    case GlobalStatus::gap_limit: return "gap-limit";
    case GlobalStatus::node_limit: return "node-limit";
    case GlobalStatus::infeasible: return "infeasible";
  }
  return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void clamp_into(std::vector<double>& x, const Box& box) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], box.lower[i], box.upper[i]);
}

bool try_value(const ExprGraph& g, std::span<const double> x, std::size_t output, double& v) {
  try {
    v = g.value(x, output);
    return std::isfinite(v);
  } catch (const Error&) {
    return false;
  }
}

struct Candidate {
  std::vector<double> x;
  double value = kInf;
};

struct Node {
  long id = 0;
  Box box;
  double bound = -kInf;
};

struct NodeResult {
  bool infeasible = false;
  double lower = -kInf;
  std::vector<Candidate> candidates;
  int branch = -1;
};

class Solver {
 public:
  Solver(const HybridProblem& p, const GlobalOptions& o) : p_(p), o_(o) {
    n_ = p.num_vars();
    branchable_.assign(n_, false);
    auto mark = [&](const ExprGraph& g) {
      const auto nl = g.nonlinear_variables();
      for (std::size_t i = 0; i < n_; ++i) branchable_[i] = branchable_[i] || nl[i];
    };
    mark(p.objective);
    for (const auto& c : p.constraints) mark(c.graph);
    constrained_ = !p.constraints.empty() || !p.linear.empty();
    repair_target_ = o.feas_tol;
    for (const auto& c : p.constraints) repair_target_ = std::min(repair_target_, c.tolerance);
    repair_target_ *= 0.01;
  }

  GlobalSolution run();

 private:
  NodeResult process(const Box& box) const;
  double lower_bound(const Box& box, NodeResult& res, std::vector<double>& lp_point) const;
  bool feasible(std::span<const double> x) const;
  void consider(std::vector<double> x, std::vector<Candidate>& out) const;
  std::vector<double> repair(std::vector<double> x, const Box& box) const;
  int choose_branch(const Box& box) const;
  double tolerance(double inc) const { return std::max(o_.abs_tol, o_.rel_tol * std::abs(inc)); }

  const HybridProblem& p_;
  const GlobalOptions& o_;
  std::size_t n_ = 0;
  std::vector<bool> branchable_;
  bool constrained_ = false;
  double repair_target_ = 0.0;
};

bool Solver::feasible(std::span<const double> x) const {
  if (!p_.box.contains(x, 0.0)) return false;
  try {
    for (const auto& c : p_.constraints) {
      if (c.violation(x) > c.tolerance) return false;
    }
  } catch (const Error&) {
    return false;
  }
  for (const auto& row : p_.linear) {
    if (row.violation(x) > o_.feas_tol) return false;
  }
  return true;
}

void Solver::consider(std::vector<double> x, std::vector<Candidate>& out) const {
  clamp_into(x, p_.box);
  if (!feasible(x)) {
    if (!constrained_) return;
    x = repair(std::move(x), p_.box);
    if (!feasible(x)) return;
  }
  double v;
  if (!try_value(p_.objective, x, 0, v)) return;
  out.push_back(Candidate{std::move(x), v});
}

// Gauss-Newton min-norm steps on the violated rows (equalities always).
std::vector<double> Solver::repair(std::vector<double> x, const Box& box) const {
  for (int it = 0; it < 30; ++it) {
    std::vector<std::vector<double>> rows;
    std::vector<double> res;
    std::vector<double> grad;
    bool ok = true;
    try {
      for (const auto& c : p_.constraints) {
        const double v = c.graph.value_and_gradient(x, grad) - c.rhs;
        const bool active = c.sense == RowSense::eq || (c.sense == RowSense::le && v > 0.0) ||
                            (c.sense == RowSense::ge && v < 0.0);
        if (!active) continue;
        rows.push_back(grad);
        res.push_back(v);
      }
    } catch (const Error&) {
      ok = false;
    }
    if (!ok) break;
    for (const auto& row : p_.linear) {
      const double v = row.activity(x) - row.rhs;
      const bool active = row.sense == RowSense::eq || (row.sense == RowSense::le && v > 0.0) ||
                          (row.sense == RowSense::ge && v < 0.0);
      if (!active) continue;
      std::vector<double> g(n_, 0.0);
      for (const auto& t : row.terms) g[static_cast<std::size_t>(t.var)] += t.coef;
      rows.push_back(std::move(g));
      res.push_back(v);
    }
    if (rows.empty()) break;
    double worst = 0.0;
    for (double r : res) worst = std::max(worst, std::abs(r));
    if (worst <= repair_target_) break;
    Eigen::MatrixXd J(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n_));
    Eigen::VectorXd r(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < n_; ++j) J(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
      r[static_cast<Eigen::Index>(i)] = res[i];
    }
    const Eigen::VectorXd step = J.completeOrthogonalDecomposition().solve(-r);
    if (!step.allFinite()) break;
    for (std::size_t j = 0; j < n_; ++j) x[j] += step[static_cast<Eigen::Index>(j)];
    clamp_into(x, box);
  }
  return x;
}

double Solver::lower_bound(const Box& box, NodeResult& res, std::vector<double>& lp_point) const {
  const std::vector<double> mid = box.midpoint();
  const auto omc = propagate_mccormick(p_.objective, box, mid, o_.relax);
  const McValue& f = omc[static_cast<std::size_t>(p_.objective.outputs()[0].id)];
  const double flo = f.range.lo;
  const bool cut_ok = std::isfinite(f.cv);

  if (!constrained_) {
    double lb = -kInf;
    std::vector<double> arg = mid;
    if (cut_ok) {
      lb = f.cv;
      for (std::size_t i = 0; i < n_; ++i) {
        const double s = f.cvsub[i];
        const double to = s > 0.0 ? box.lower[i] : box.upper[i];
        if (s != 0.0) {
          lb += s * (to - mid[i]);
          arg[i] = to;
        }
      }
    }
    lp_point = std::move(arg);
    return std::max(lb, flo);
  }

  // Node LP over (x, eta).
  const auto cols = static_cast<Eigen::Index>(n_ + 1);
  std::vector<std::vector<double>> A;
  std::vector<RowSense> sense;
  std::vector<double> rhs;
  auto lin_row = [&](const std::vector<double>& sub, double eta_coef, RowSense s, double b) {
    std::vector<double> row(n_ + 1, 0.0);
    for (std::size_t i = 0; i < n_; ++i) row[i] = sub[i];
    row[n_] = eta_coef;
    A.push_back(std::move(row));
    sense.push_back(s);
    rhs.push_back(b);
  };
  auto dot_mid = [&](const std::vector<double>& s) {
    double d = 0.0;
    for (std::size_t i = 0; i < n_; ++i) d += s[i] * mid[i];
    return d;
  };
  if (cut_ok) lin_row(f.cvsub, -1.0, RowSense::le, dot_mid(f.cvsub) - f.cv);
  for (const auto& c : p_.constraints) {
    const auto mc = propagate_mccormick(c.graph, box, mid, o_.relax);
    const McValue& g = mc[static_cast<std::size_t>(c.graph.outputs()[0].id)];
    const double tol = c.tolerance;
    const bool need_le = c.sense != RowSense::ge;
    const bool need_ge = c.sense != RowSense::le;
    if (need_le && g.range.lo > c.rhs + tol) {
      res.infeasible = true;
      return kInf;
    }
    if (need_ge && g.range.hi < c.rhs - tol) {
      res.infeasible = true;
      return kInf;
    }
    if (need_le && std::isfinite(g.cv)) lin_row(g.cvsub, 0.0, RowSense::le, c.rhs + tol - g.cv + dot_mid(g.cvsub));
    if (need_ge && std::isfinite(g.cc)) lin_row(g.ccsub, 0.0, RowSense::ge, c.rhs - tol - g.cc + dot_mid(g.ccsub));
  }
  for (const auto& row : p_.linear) {
    std::vector<double> a(n_, 0.0);
    for (const auto& t : row.terms) a[static_cast<std::size_t>(t.var)] += t.coef;
    lin_row(a, 0.0, row.sense, row.rhs);
  }
  LpModel lp;
  lp.A.resize(static_cast<Eigen::Index>(A.size()), cols);
  lp.rhs.resize(static_cast<Eigen::Index>(A.size()));
  for (std::size_t i = 0; i < A.size(); ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) lp.A(static_cast<Eigen::Index>(i), j) = A[i][static_cast<std::size_t>(j)];
    lp.rhs[static_cast<Eigen::Index>(i)] = rhs[i];
  }
  lp.sense = sense;
  lp.cost = Eigen::VectorXd::Zero(cols);
  lp.cost[cols - 1] = 1.0;
  lp.lower = box.lower;
  lp.upper = box.upper;
  lp.lower.push_back(flo);
  lp.upper.push_back(f.range.hi);
  if (!(lp.lower.back() <= lp.upper.back())) lp.upper.back() = lp.lower.back();
  const LpSolution s = solve_lp(lp);
  if (s.status == LpStatus::infeasible) {
    res.infeasible = true;
    return kInf;
  }
  if (s.status != LpStatus::optimal) return flo;
  lp_point.assign(s.x.begin(), s.x.begin() + static_cast<std::ptrdiff_t>(n_));
  return std::max(s.objective, flo);
}

int Solver::choose_branch(const Box& box) const {
  const std::vector<double> mid = box.midpoint();
  std::vector<double> sens(n_, 0.0);
  std::size_t graphs = 0;
  std::vector<double> grad;
  auto add = [&](const ExprGraph& g) {
    try {
      g.value_and_gradient(mid, grad);
      for (std::size_t i = 0; i < n_; ++i) sens[i] += std::abs(grad[i]);
      ++graphs;
    } catch (const Error&) {
    }
  };
  add(p_.objective);
  for (const auto& c : p_.constraints) add(c.graph);
  double maxsens = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    if (branchable_[i]) maxsens = std::max(maxsens, sens[i]);
  }
  int best = -1;
  double best_score = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    if (!branchable_[i]) continue;
    const double w = box.width(i);
    if (!(w > 1e-10 * (1.0 + std::abs(mid[i])))) continue;
    const double score = w * std::max(sens[i], 1e-3 * maxsens) / static_cast<double>(std::max<std::size_t>(graphs, 1));
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(i);
    }
  }
  if (best >= 0) return best;
  // Flat sensitivities: widest relative width.
  double best_w = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    if (!branchable_[i]) continue;
    const double root = p_.box.width(i);
    const double w = root > 0.0 ? box.width(i) / root : 0.0;
    if (w > best_w && box.width(i) > 1e-10 * (1.0 + std::abs(mid[i]))) {
      best_w = w;
      best = static_cast<int>(i);
    }
  }
  return best;
}

NodeResult Solver::process(const Box& box) const {
  NodeResult res;
  std::vector<double> lp_point;
  try {
    res.lower = lower_bound(box, res, lp_point);
  } catch (const Error&) {
    res.lower = -kInf;
  }
  if (res.infeasible) return res;
  // Floating-point safety margin on the relaxation bound.
  if (std::isfinite(res.lower)) res.lower -= 1e-9 * (1.0 + std::abs(res.lower));
  const std::vector<double> mid = box.midpoint();
  consider(mid, res.candidates);
  if (!lp_point.empty()) consider(lp_point, res.candidates);
  if (!constrained_ && o_.local_search) consider(local_search(p_.objective, box, mid), res.candidates);
  res.branch = choose_branch(box);
  return res;
}

GlobalSolution Solver::run() {
  GlobalSolution sol;
  double incumbent = kInf;
  std::vector<double> best;
  auto offer = [&](const std::vector<Candidate>& cands) {
    for (const auto& c : cands) {
      if (c.value < incumbent) {
        incumbent = c.value;
        best = c.x;
      }
    }
  };
  // Root multistart from Halton points.
  {
    std::vector<std::vector<double>> starts;
    for (std::size_t k = 1; k <= n_ + 1; ++k) {
      std::vector<double> u = halton(k, n_);
      for (std::size_t i = 0; i < n_; ++i) u[i] = p_.box.lower[i] + u[i] * p_.box.width(i);
      starts.push_back(std::move(u));
    }
    std::vector<std::vector<Candidate>> found(starts.size());
    parallel_for(starts.size(), o_.threads, [&](std::size_t k) {
      std::vector<double> x = starts[k];
      if (!constrained_ && o_.local_search) x = local_search(p_.objective, p_.box, x);
      consider(std::move(x), found[k]);
    });
    for (const auto& f : found) offer(f);
  }

  std::vector<Node> open;
  open.push_back(Node{0, p_.box, -kInf});
  long next_id = 1;
  long processed = 0;
  bool hit_limit = false;
  double retired = kInf;  // bounds of nodes closed without reaching the tolerance
  double pruned = kInf;
  auto global_lb = [&]() {
    double b = std::min({incumbent, retired, pruned});
    for (const auto& nd : open) b = std::min(b, nd.bound);
    return b;
  };
  bool first = true;
  while (!open.empty()) {
    if (processed >= o_.node_limit) {
      hit_limit = true;
      break;
    }
    std::vector<std::size_t> order(open.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (open[a].bound != open[b].bound) return open[a].bound < open[b].bound;
      return open[a].id < open[b].id;
    });
    const std::size_t take = std::min<std::size_t>(
        {order.size(), static_cast<std::size_t>(std::max(o_.batch, 1)),
         static_cast<std::size_t>(o_.node_limit - processed)});
    std::vector<bool> chosen(open.size(), false);
    for (std::size_t k = 0; k < take; ++k) chosen[order[k]] = true;
    std::vector<Node> batch, rest;
    for (std::size_t i = 0; i < open.size(); ++i) (chosen[i] ? batch : rest).push_back(std::move(open[i]));
    open = std::move(rest);
    std::sort(batch.begin(), batch.end(), [](const Node& a, const Node& b) { return a.id < b.id; });

    std::vector<NodeResult> results(batch.size());
    parallel_for(batch.size(), o_.threads, [&](std::size_t i) { results[i] = process(batch[i].box); });

    for (std::size_t i = 0; i < batch.size(); ++i) {
      ++processed;
      Node& node = batch[i];
      NodeResult& r = results[i];
      if (r.infeasible) continue;
      offer(r.candidates);
      if (first && !best.empty() && o_.local_search && !constrained_) {
        std::vector<Candidate> extra;
        consider(local_search(p_.objective, p_.box, best), extra);
        offer(extra);
      }
      first = false;
      const double lb = std::max(r.lower, node.bound);
      if (incumbent < kInf && lb >= incumbent - tolerance(incumbent)) {
        pruned = std::min(pruned, lb);
        continue;
      }
      if (r.branch < 0) {
        retired = std::min(retired, lb);
        continue;
      }
      const auto b = static_cast<std::size_t>(r.branch);
      const double cut = 0.5 * (node.box.lower[b] + node.box.upper[b]);
      Node left{next_id++, node.box, lb};
      left.box.upper[b] = cut;
      Node right{next_id++, std::move(node.box), lb};
      right.box.lower[b] = cut;
      open.push_back(std::move(left));
      open.push_back(std::move(right));
    }
    if (incumbent < kInf) {
      const double cut = incumbent - tolerance(incumbent);
      std::erase_if(open, [&](const Node& nd) {
        if (nd.bound < cut) return false;
        pruned = std::min(pruned, nd.bound);
        return true;
      });
    }
    if (o_.record_trace) sol.trace.push_back(GlobalTrace{processed, global_lb(), incumbent});
  }
  sol.nodes = processed;
  sol.has_incumbent = incumbent < kInf;
  sol.lower_bound = std::min(global_lb(), incumbent);
  if (!sol.has_incumbent) {
    sol.status = hit_limit ? GlobalStatus::node_limit
                           : (retired < kInf ? GlobalStatus::gap_limit : GlobalStatus::infeasible);
    return sol;
  }
  sol.x = best;
  sol.objective = incumbent;
  sol.abs_gap = std::max(0.0, incumbent - sol.lower_bound);
  sol.rel_gap = sol.abs_gap / std::max(1e-10, std::abs(incumbent));
  const bool within = sol.abs_gap <= tolerance(incumbent);
  if (hit_limit) {
    sol.status = within ? GlobalStatus::gap_limit : GlobalStatus::node_limit;
  } else {
    sol.status = within ? GlobalStatus::converged : GlobalStatus::gap_limit;
  }
  return sol;
}

}  // namespace

GlobalSolution solve_global(const HybridProblem& problem, const GlobalOptions& options) {
  problem.validate();
  for (std::size_t i = 0; i < problem.box.size(); ++i) {
    if (problem.box.lower[i] > problem.box.upper[i]) fail(ErrorKind::validation, "solve_global: empty box");
  }
  if (options.batch < 1) fail(ErrorKind::config, "solve_global: batch must be >= 1");
  Solver s(problem, options);
  return s.run();
}

std::vector<double> local_search(const ExprGraph& graph, const Box& box, std::span<const double> start,
                                 int max_iterations, std::size_t output) {
  std::vector<double> x(start.begin(), start.end());
  clamp_into(x, box);
  double fx;
  std::vector<double> g;
  try {
    fx = graph.value_and_gradient(x, g, output);
  } catch (const Error&) {
    return x;
  }
  if (!std::isfinite(fx)) return x;
  double t = -1.0;
  const std::size_t n = x.size();
  std::vector<double> trial(n);
  for (int it = 0; it < max_iterations; ++it) {
    double gmax = 0.0;
    double wmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      // Projected gradient component.
      const bool stuck = (g[i] > 0.0 && x[i] <= box.lower[i]) || (g[i] < 0.0 && x[i] >= box.upper[i]);
      if (!stuck) gmax = std::max(gmax, std::abs(g[i]));
      wmax = std::max(wmax, box.width(i));
    }
    if (gmax == 0.0 || !std::isfinite(gmax)) break;
    // Steps move at most a tenth of the box so the search keeps to its basin.
    t = t <= 0.0 ? 0.1 * wmax / gmax : std::min(t, 0.1 * wmax / gmax);
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      double decrease = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        trial[i] = std::clamp(x[i] - t * g[i], box.lower[i], box.upper[i]);
        decrease += g[i] * (trial[i] - x[i]);
      }
      double ft;
      if (decrease < 0.0 && try_value(graph, trial, output, ft) && ft <= fx + 1e-4 * decrease) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    std::vector<double> gn;
    double fn;
    try {
      fn = graph.value_and_gradient(trial, gn, output);
    } catch (const Error&) {
      break;
    }
    x = trial;
    fx = fn;
    g = std::move(gn);
    t *= 2.0;
  }
  return x;
}

GridResult grid_oracle(const ExprGraph& graph, const Box& box, std::size_t points, std::size_t output) {
  if (graph.num_vars() != box.size()) fail(ErrorKind::dimension, "grid_oracle: box dimension differs from graph");
  return grid_oracle([&](std::span<const double> x) { return graph.value(x, output); }, box, points);
}

GridResult grid_oracle(const std::function<double(std::span<const double>)>& f, const Box& box,
                       std::size_t points) {
  const std::size_t n = box.size();
  if (n > 3) fail(ErrorKind::config, "grid_oracle: dimension " + std::to_string(n) + " exceeds 3");
  if (points < 2) fail(ErrorKind::config, "grid_oracle: need at least 2 points per dimension");
  GridResult best;
  best.value = kInf;
  std::vector<std::size_t> idx(n, 0);
  std::vector<double> x(n);
  for (;;) {
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = idx[i] + 1 == points ? box.upper[i]
                                  : box.lower[i] + box.width(i) * static_cast<double>(idx[i]) /
                                                       static_cast<double>(points - 1);
    }
    double v = kInf;
    bool ok = false;
    try {
      v = f(x);
      ok = std::isfinite(v);
    } catch (const Error&) {
    }
    if (ok) {
      ++best.evaluated;
      if (v < best.value) {
        best.value = v;
        best.x = x;
      }
    }
    if (n == 0) return best;
    std::size_t d = n;
    while (d > 0) {
      --d;
      if (++idx[d] < points) break;
      idx[d] = 0;
      if (d == 0) return best;
    }
  }
}

std::vector<double> halton(std::size_t index, std::size_t dim) {
  static constexpr unsigned kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53,
                                         59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113};
  std::vector<double> out(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    const unsigned base = kPrimes[d % std::size(kPrimes)];
    std::size_t i = index + d / std::size(kPrimes);
    double f = 1.0;
    double r = 0.0;
    while (i > 0) {
      f /= base;
      r += f * static_cast<double>(i % base);
      i /= base;
    }
    out[d] = r;
  }
  return out;
}

}  // namespace mlembed
