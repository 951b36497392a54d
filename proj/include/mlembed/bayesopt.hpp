#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mlembed/expr_graph.hpp"
#include "mlembed/global.hpp"
#include "mlembed/model.hpp"

namespace mlembed {

struct BoRecord {
  std::size_t iteration = 0;  // 1-based evaluation counter
  std::vector<double> x;
  double value = 0.0;
  double best = 0.0;          // incumbent after this evaluation
  bool from_design = false;
  bool fallback = false;      // farthest-vertex suggestion (expected improvement vanished)
};

/// Kernel hyperparameters held fixed for the whole run.
struct BoSurrogate {
  std::vector<double> lengthscales;  // distance weights, one per dimension
  double signal_variance = 1.0;
  double noise_variance = 1e-8;
  double prior_mean = 0.0;
};

struct BoState {
  GaussianProcessModel gp;
  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  double best = 0.0;
  std::size_t iteration = 0;
  std::vector<BoRecord> history;

  BoState(const BoSurrogate& surrogate, const Box& box);

  /// Appends an observation and refits the cache.
  void observe(std::vector<double> x, double y, bool from_design, bool fallback);

 private:
  BoSurrogate surrogate_;
  Box box_;
};

/// Expected-improvement graph over the GP input box.
ExprGraph build_ei_graph(const GaussianProcessModel& gp, double incumbent, double sigma_floor = 1e-6);

struct BoStep {
  std::vector<double> x;
  double expected_improvement = 0.0;
  bool fallback = false;
  GlobalSolution solve;
};

struct BoOptions {
  std::size_t budget = 12;
  std::size_t initial = 3;
  std::uint64_t seed = 0;  // skips this many Halton points
  double sigma_floor = 1e-6;
  GlobalOptions global = default_global();

  static GlobalOptions default_global();
};

/// Globally maximizes expected improvement over `box`.
BoStep bo_step(const BoState& state, const Box& box, const BoOptions& options = {});

using BoObjective = std::function<double(std::span<const double>)>;

std::vector<BoRecord> bo_run(const BoObjective& objective, const Box& box, const BoSurrogate& surrogate,
                             const BoOptions& options = {});

/// Tab-separated history: iteration, x_1..x_n, value, best, source.
std::string format_history(const std::vector<BoRecord>& history);

/// Box vertex maximizing the smallest width-scaled distance to `points`.
std::vector<double> farthest_vertex(const Box& box, const std::vector<std::vector<double>>& points);

}  // namespace mlembed
