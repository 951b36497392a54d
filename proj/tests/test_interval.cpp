#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "mlembed/error.hpp"
#include "mlembed/interval.hpp"
#include "mlembed/relax_graph.hpp"

using namespace mlembed;

TEST_CASE("interval primitives") {
  const Interval e = exp(Interval(0.0, 1.0));
  CHECK(e.lo == 1.0);
  CHECK(e.hi == doctest::Approx(2.718281828459045).epsilon(1e-15));

  const Interval s = sqr(Interval(-1.0, 2.0));
  CHECK(s.lo == 0.0);
  CHECK(s.hi == 4.0);

  const Interval m = Interval(0.0, 1.0) * Interval(-1.0, 1.0);
  CHECK(m.lo == -1.0);
  CHECK(m.hi == 1.0);

  CHECK(sqr(Interval(-3.0, -1.0)).lo == 1.0);
  CHECK(sqr(Interval(-3.0, -1.0)).hi == 9.0);
  CHECK(max0(Interval(-2.0, 3.0)).lo == 0.0);
  CHECK(tanh(Interval(-1.0, 1.0)).hi == doctest::Approx(std::tanh(1.0)));
}

TEST_CASE("interval errors") {
  CHECK_THROWS_AS(divide(Interval(1.0, 2.0), Interval(-1.0, 1.0)), Error);
  CHECK_THROWS_AS(Interval(2.0, 1.0), Error);
  CHECK_THROWS_AS(Interval(NAN, 1.0), Error);
  CHECK_THROWS_AS(log(Interval(-2.0, -1.0)), Error);
  CHECK(std::isinf(log(Interval(0.0, 1.0)).lo));
}

namespace {

// Random expression built from all smooth and kinked primitives.
ExprGraph random_graph(testing::Rng& rng, const Box& box, bool smooth) {
  ExprGraph g(box.size(), box);
  std::vector<Expr> pool;
  for (std::size_t i = 0; i < box.size(); ++i) pool.push_back(g.variable(i));
  for (int k = 0; k < 6; ++k) {
    const Expr a = pool[static_cast<std::size_t>(rng.integer(0, static_cast<int>(pool.size()) - 1))];
    const Expr b = pool[static_cast<std::size_t>(rng.integer(0, static_cast<int>(pool.size()) - 1))];
    Expr e;
    switch (rng.integer(0, smooth ? 8 : 9)) {
      case 0: e = g.add(a, b); break;
      case 1: e = g.subtract(a, b); break;
      case 2: e = g.multiply(a, b); break;
      case 3: e = g.square(a); break;
      case 4: e = g.exp(g.scale(a, 0.5)); break;
      case 5: e = g.tanh(a); break;
      case 6: e = g.erf(a); break;
      case 7: e = g.sqrt(g.scale(g.square(a), 1.0, 0.5)); break;
      case 8: {
        const Expr t[2] = {a, b};
        const double w[2] = {rng.uniform(-2, 2), rng.uniform(-2, 2)};
        e = g.affine(t, w, rng.uniform(-1, 1));
        break;
      }
      default: e = g.max0(a); break;
    }
    pool.push_back(e);
  }
  g.add_output(pool.back());
  return g;
}

}  // namespace

TEST_CASE("inclusion isotonicity on nested boxes") {
  testing::Rng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    Box outer({rng.uniform(-2, 0), rng.uniform(-2, 0)}, {rng.uniform(0.1, 2), rng.uniform(0.1, 2)});
    const ExprGraph g = random_graph(rng, outer, false);
    Box inner = outer;
    for (std::size_t i = 0; i < 2; ++i) {
      const double a = rng.uniform(outer.lower[i], outer.upper[i]);
      const double b = rng.uniform(outer.lower[i], outer.upper[i]);
      inner.lower[i] = std::min(a, b);
      inner.upper[i] = std::max(a, b);
    }
    const auto big = propagate_intervals(g, outer);
    const auto small = propagate_intervals(g, inner);
    for (std::size_t k = 0; k < big.size(); ++k) {
      CHECK(small[k].lo >= big[k].lo - 1e-12 * (1 + std::abs(big[k].lo)));
      CHECK(small[k].hi <= big[k].hi + 1e-12 * (1 + std::abs(big[k].hi)));
    }
    // Every sampled value lies in the enclosure.
    for (int s = 0; s < 10; ++s) {
      const auto x = rng.point(inner);
      const double v = g.value(x);
      const Interval r = small[static_cast<std::size_t>(g.outputs()[0].id)];
      CHECK(v >= r.lo - 1e-12 * (1 + std::abs(v)));
      CHECK(v <= r.hi + 1e-12 * (1 + std::abs(v)));
    }
  }
}
