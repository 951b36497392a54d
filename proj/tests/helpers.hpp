#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mlembed/expr_graph.hpp"
#include "mlembed/model_io.hpp"

namespace testing {

inline std::string model_path(const std::string& name) {
  return std::string(MLEMBED_MODELS_DIR) + "/" + name + ".json";
}

inline mlembed::TrainedModel load(const std::string& name) { return mlembed::load_model_file(model_path(name)); }

/// Uniform doubles in [lo, hi) from a 64-bit Mersenne twister.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform(double lo = 0.0, double hi = 1.0) {
    return lo + (hi - lo) * static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }
  int integer(int lo, int hi) { return lo + static_cast<int>(gen_() % static_cast<std::uint64_t>(hi - lo + 1)); }
  std::vector<double> point(const mlembed::Box& b) {
    std::vector<double> x(b.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = uniform(b.lower[i], b.upper[i]);
    return x;
  }

 private:
  std::mt19937_64 gen_;
};

inline std::vector<double> central_difference(const mlembed::ExprGraph& g, std::vector<double> x,
                                              double h = 1e-6) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double fp = g.value(x);
    x[i] = keep - h;
    const double fm = g.value(x);
    x[i] = keep;
    out[i] = (fp - fm) / (2.0 * h);
  }
  return out;
}

/// Random 3-variable graph of smooth primitives (no max0, sqrt and log kept
/// away from 0).
inline mlembed::ExprGraph random_smooth_graph(Rng& rng, int ops = 8) {
  using mlembed::Expr;
  mlembed::Box b({-1.5, -1.5, -1.5}, {1.5, 1.5, 1.5});
  mlembed::ExprGraph g(3, b);
  std::vector<Expr> pool{g.variable(0), g.variable(1), g.variable(2)};
  for (int k = 0; k < ops; ++k) {
    const Expr a = pool[static_cast<std::size_t>(rng.integer(0, static_cast<int>(pool.size()) - 1))];
    const Expr c = pool[static_cast<std::size_t>(rng.integer(0, static_cast<int>(pool.size()) - 1))];
    Expr e;
    switch (rng.integer(0, 8)) {
      case 0: e = g.multiply(a, c); break;
      case 1: e = g.tanh(a); break;
      case 2: e = g.exp(g.scale(a, 0.3)); break;
      case 3: e = g.erf(a); break;
      case 4: e = g.sqrt(g.scale(g.square(a), 1.0, 1.0)); break;
      case 5: e = g.divide(a, g.scale(g.square(c), 1.0, 1.0)); break;
      case 6: e = g.log(g.scale(g.square(a), 1.0, 0.5)); break;
      case 7: {
        const Expr t[2] = {a, c};
        const double w[2] = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const double ctr[2] = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const double kw[2] = {1.0, 2.0};
        e = rng.uniform() < 0.5 ? g.affine(t, w, rng.uniform(-1, 1)) : g.se_kernel(t, ctr, kw);
        break;
      }
      default: e = g.subtract(g.add(a, c), g.negate(a)); break;
    }
    pool.push_back(e);
  }
  g.add_output(pool.back());
  return g;
}

/// Largest |forward - central difference| over max(|central difference|, 1).
inline double gradient_error(const mlembed::ExprGraph& g, const std::vector<double>& x) {
  const auto grad = g.gradient(x);
  const auto fd = central_difference(g, x);
  double num = 0.0;
  double den = 1.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num = std::max(num, std::abs(grad[i] - fd[i]));
    den = std::max(den, std::abs(fd[i]));
  }
  return num / den;
}

/// 1-D or 2-D tensor grid minimum of an arbitrary function, own loop.
template <class F>
double brute_min(F f, const mlembed::Box& b, int points, std::vector<double>* arg = nullptr) {
  double best = INFINITY;
  std::vector<double> x(b.size());
  const int n2 = b.size() > 1 ? points : 1;
  for (int i = 0; i < points; ++i) {
    for (int j = 0; j < n2; ++j) {
      x[0] = b.lower[0] + b.width(0) * i / (points - 1);
      if (b.size() > 1) x[1] = b.lower[1] + b.width(1) * j / (points - 1);
      const double v = f(x);
      if (v < best) {
        best = v;
        if (arg) *arg = x;
      }
    }
  }
  return best;
}

}  // namespace testing
