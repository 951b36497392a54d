#include "mlembed/milp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mlembed/error.hpp"
#include "mlembed/parallel.hpp"

namespace mlembed {

const char* to_string(MilpStatus status) {
  switch (status) {
    case MilpStatus::optimal: return "optimal";
    case MilpStatus::infeasible: return "infeasible";
    case MilpStatus::gap_limit: return "gap-limit";
    case MilpStatus::node_limit: return "node-limit";
  }
  return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Node {
  long id = 0;
  int depth = 0;
  double bound = -kInf;  // parent LP bound
  std::vector<double> lower;
  std::vector<double> upper;
};

struct NodeResult {
  LpSolution lp;
};

}  // namespace

MilpSolution solve_milp(const ProblemIR& ir, const MilpOptions& options) {
  ir.validate();
  if (!ir.is_linear()) fail(ErrorKind::unsupported, "solve_milp requires a linear problem");
  if (options.batch < 1) fail(ErrorKind::config, "solve_milp: batch must be >= 1");
  const LpModel lp = to_lp_model(ir);
  const double sign = ir.maximize ? -1.0 : 1.0;
  std::vector<int> binaries;
  for (std::size_t j = 0; j < ir.num_vars(); ++j) {
    if (ir.variables[j].type == VarType::binary) binaries.push_back(static_cast<int>(j));
  }

  MilpSolution sol;
  double incumbent = kInf;
  std::vector<double> best_x;
  auto tolerance = [&](double inc) { return std::max(options.abs_gap, options.rel_gap * std::abs(inc)); };

  std::vector<Node> open;
  open.push_back(Node{0, 0, -kInf, lp.lower, lp.upper});
  long next_id = 1;
  long processed = 0;
  bool hit_limit = false;
  double pruned = kInf;  // smallest bound among nodes fathomed within tolerance

  auto global_bound = [&]() {
    double b = std::min(incumbent, pruned);
    for (const auto& n : open) b = std::min(b, n.bound);
    return b;
  };

  while (!open.empty()) {
    if (processed >= options.node_limit) {
      hit_limit = true;
      break;
    }
    // Selection: deepest first until an incumbent exists, then best bound.
    std::vector<std::size_t> order(open.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (incumbent == kInf) {
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (open[a].depth != open[b].depth) return open[a].depth > open[b].depth;
        return open[a].id > open[b].id;
      });
    } else {
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (open[a].bound != open[b].bound) return open[a].bound < open[b].bound;
        return open[a].id < open[b].id;
      });
    }
    const std::size_t take = std::min<std::size_t>(
        {order.size(), static_cast<std::size_t>(options.batch),
         static_cast<std::size_t>(options.node_limit - processed)});
    std::vector<Node> batch;
    std::vector<bool> chosen(open.size(), false);
    for (std::size_t k = 0; k < take; ++k) chosen[order[k]] = true;
    std::vector<Node> rest;
    for (std::size_t i = 0; i < open.size(); ++i) {
      (chosen[i] ? batch : rest).push_back(std::move(open[i]));
    }
    open = std::move(rest);
    std::sort(batch.begin(), batch.end(), [](const Node& a, const Node& b) { return a.id < b.id; });

    std::vector<NodeResult> results(batch.size());
    parallel_for(batch.size(), options.threads, [&](std::size_t i) {
      results[i].lp = solve_lp(lp, batch[i].lower, batch[i].upper, options.lp);
    });

    // Commit in node-id order.
    for (std::size_t i = 0; i < batch.size(); ++i) {
      ++processed;
      Node& node = batch[i];
      const LpSolution& r = results[i].lp;
      if (r.status == LpStatus::infeasible) continue;
      if (r.status == LpStatus::unbounded) fail(ErrorKind::numeric, "solve_milp: unbounded LP relaxation");
      if (r.status != LpStatus::optimal) fail(ErrorKind::numeric, "solve_milp: LP relaxation failed numerically");
      const double bound = std::max(r.objective, node.bound);
      if (incumbent < kInf && bound >= incumbent - tolerance(incumbent)) {
        pruned = std::min(pruned, bound);
        continue;
      }
      int branch = -1;
      double best_frac = options.int_tol;
      for (int j : binaries) {
        const double v = r.x[static_cast<std::size_t>(j)];
        const double frac = std::abs(v - std::round(v));
        if (frac > best_frac) {
          best_frac = frac;
          branch = j;
        }
      }
      if (branch < 0) {
        if (r.objective < incumbent) {
          incumbent = r.objective;
          best_x = r.x;
          for (int j : binaries) best_x[static_cast<std::size_t>(j)] = std::round(best_x[static_cast<std::size_t>(j)]);
        }
        continue;
      }
      const auto b = static_cast<std::size_t>(branch);
      Node down{next_id++, node.depth + 1, bound, node.lower, node.upper};
      down.upper[b] = 0.0;
      Node up{next_id++, node.depth + 1, bound, std::move(node.lower), std::move(node.upper)};
      up.lower[b] = 1.0;
      open.push_back(std::move(down));
      open.push_back(std::move(up));
    }
    // Drop nodes that the incumbent now fathoms.
    if (incumbent < kInf) {
      const double cut = incumbent - tolerance(incumbent);
      std::erase_if(open, [&](const Node& n) {
        if (n.bound < cut) return false;
        pruned = std::min(pruned, n.bound);
        return true;
      });
    }
    if (options.record_trace) sol.trace.push_back(BoundTrace{processed, global_bound(), incumbent});
  }

  sol.nodes = processed;
  sol.has_incumbent = incumbent < kInf;
  const double bound = std::min(global_bound(), incumbent);
  if (!sol.has_incumbent) {
    sol.status = hit_limit ? MilpStatus::node_limit : MilpStatus::infeasible;
    sol.bound = sign * (hit_limit ? global_bound() : kInf);
    return sol;
  }
  sol.x = best_x;
  sol.objective = sign * incumbent;
  sol.bound = sign * bound;
  sol.abs_gap = std::max(0.0, incumbent - bound);
  sol.rel_gap = sol.abs_gap / std::max(1e-10, std::abs(incumbent));
  if (hit_limit) {
    sol.status = sol.abs_gap <= tolerance(incumbent) ? MilpStatus::gap_limit : MilpStatus::node_limit;
  } else {
    sol.status = MilpStatus::optimal;
  }
  return sol;
}

}  // namespace mlembed
