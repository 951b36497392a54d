#include <cmath>

#include "doctest.h"
#include "mlembed/error.hpp"
#include "mlembed/mccormick.hpp"
#include "relax_suite.hpp"

using namespace mlembed;

namespace {

McValue relax_at(const ExprGraph& g, const Box& b, std::vector<double> p, RelaxOptions o = {}) {
  return propagate_mccormick(g, b, p, o)[static_cast<std::size_t>(g.outputs()[0].id)];
}

RelaxOptions plain() {
  RelaxOptions o;
  o.subgradient_tightening = false;
  return o;
}

}  // namespace

TEST_CASE("bilinear envelope on the unit square") {
  Box b({0.0, 0.0}, {1.0, 1.0});
  ExprGraph g(2, b);
  g.add_output(g.multiply(g.variable(0), g.variable(1)));
  const McValue v = relax_at(g, b, {0.5, 0.5}, plain());
  CHECK(v.cv == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(v.cc == doctest::Approx(0.5));
}

TEST_CASE("tanh on a concave interval") {
  Box b({0.0}, {1.0});
  ExprGraph g(1, b);
  g.add_output(g.tanh(g.variable(0)));
  const McValue v = relax_at(g, b, {0.5}, plain());
  CHECK(v.cc == doctest::Approx(std::tanh(0.5)).epsilon(1e-12));
  CHECK(v.cv == doctest::Approx(0.5 * std::tanh(1.0)).epsilon(1e-12));
}

TEST_CASE("max0 secant over a kink") {
  Box b({-1.0}, {1.0});
  ExprGraph g(1, b);
  g.add_output(g.max0(g.variable(0)));
  const McValue v = relax_at(g, b, {0.0}, plain());
  CHECK(v.cv == 0.0);
  CHECK(v.cc == doctest::Approx(0.5));
}

TEST_CASE("kernel factor exp(-u/2)") {
  auto point = [](double u) {
    McValue m = McValue::constant(u, 1);
    m.range = Interval::point(u);
    return m;
  };
  const McValue one = se_kernel_relax(point(0.0));
  CHECK(one.cv == 1.0);
  CHECK(one.cc == 1.0);
  const McValue half = se_kernel_relax(point(1.0));
  CHECK(half.cv == doctest::Approx(0.6065306597126334).epsilon(1e-14));
  CHECK(half.cc == doctest::Approx(0.6065306597126334).epsilon(1e-14));
  McValue bad = point(0.0);
  bad.range = Interval(-1.0, 1.0);
  CHECK_THROWS_AS(se_kernel_relax(bad), Error);
}

TEST_CASE("tailored kernel envelope versus plain composition") {
  // exp(-x^2/2) on [0,2] at x = 1. Reference envelopes computed offline with
  // a bracketing root finder on the tangency conditions.
  const double convex_envelope = 0.5487437659216909;
  const double concave_envelope = 0.6352897758830837;
  Box b({0.0}, {2.0});
  ExprGraph fused(1, b);
  const Expr x = fused.variable(0);
  const double c[1] = {0.0};
  const double w[1] = {1.0};
  fused.add_output(fused.se_kernel(std::span<const Expr>(&x, 1), c, w));
  ExprGraph chain(1, b);
  chain.add_output(chain.exp(chain.scale(chain.square(chain.variable(0)), -0.5)));

  RelaxOptions generic = plain();
  generic.tailored_kernel = false;
  const McValue t = relax_at(fused, b, {1.0}, plain());
  const McValue gk = relax_at(fused, b, {1.0}, generic);
  const McValue ch = relax_at(chain, b, {1.0}, plain());
  const double f = std::exp(-0.5);
  CHECK(t.cv <= f);
  CHECK(t.cc >= f);
  CHECK(t.cv == doctest::Approx(convex_envelope).epsilon(1e-9));
  CHECK(t.cc == doctest::Approx(concave_envelope).epsilon(1e-9));
  CHECK(gk.cv == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(t.cc - t.cv < gk.cc - gk.cv);
  CHECK(t.cc - t.cv < ch.cc - ch.cv);
}

TEST_CASE("tailored kernel never looser than the u-chain") {
  testing::Rng rng(99);
  for (int s = 0; s < 1000; ++s) {
    const Box b = testing::primitive_box(Op::se_kernel, rng);
    const ExprGraph g = testing::primitive_graph(Op::se_kernel, b, rng);
    const auto p = rng.point(b);
    RelaxOptions gen = plain();
    gen.tailored_kernel = false;
    const McValue t = relax_at(g, b, p, plain());
    const McValue u = relax_at(g, b, p, gen);
    CHECK(t.cv >= u.cv - 1e-12);
    CHECK(t.cc <= u.cc + 1e-12);
  }
}

TEST_CASE("sandwich for every primitive") {
  for (Op op : testing::relaxed_primitives()) {
    for (int tight = 0; tight < 2; ++tight) {
      RelaxOptions o;
      o.subgradient_tightening = tight == 1;
      testing::SandwichStats st;
      testing::sandwich(op, 1000, 1234 + static_cast<std::uint64_t>(op), 1e-9, st, o);
      INFO(to_string(op), " tightening ", tight, " first failure ", st.first_failure, " worst ", st.worst);
      CHECK(st.violations == 0);
    }
  }
}

TEST_CASE("relaxations are convex and concave in the reference point") {
  testing::Rng rng(5);
  for (Op op : testing::relaxed_primitives()) {
    for (int s = 0; s < 200; ++s) {
      const Box b = testing::primitive_box(op, rng);
      const ExprGraph g = testing::primitive_graph(op, b, rng);
      const auto x1 = rng.point(b);
      const auto x2 = rng.point(b);
      std::vector<double> m{0.5 * (x1[0] + x2[0]), 0.5 * (x1[1] + x2[1])};
      const McValue a = relax_at(g, b, x1, plain());
      const McValue c = relax_at(g, b, x2, plain());
      const McValue mid = relax_at(g, b, m, plain());
      INFO(to_string(op), " sample ", s);
      CHECK(mid.cv <= 0.5 * (a.cv + c.cv) + 1e-9 * (1 + std::abs(mid.cv)));
      CHECK(mid.cc >= 0.5 * (a.cc + c.cc) - 1e-9 * (1 + std::abs(mid.cc)));
    }
  }
}

TEST_CASE("subgradient linearizations bound the function") {
  testing::Rng rng(17);
  for (Op op : testing::relaxed_primitives()) {
    for (int s = 0; s < 60; ++s) {
      const Box b = testing::primitive_box(op, rng);
      const ExprGraph g = testing::primitive_graph(op, b, rng);
      const auto x0 = rng.point(b);
      const McValue v = relax_at(g, b, x0);
      for (int k = 0; k < 100; ++k) {
        const auto x = rng.point(b);
        const double f = g.value(x);
        double lin_cv = v.cv;
        double lin_cc = v.cc;
        for (std::size_t i = 0; i < 2; ++i) {
          lin_cv += v.cvsub[i] * (x[i] - x0[i]);
          lin_cc += v.ccsub[i] * (x[i] - x0[i]);
        }
        const double tol = 1e-9 * (1 + std::abs(f));
        INFO(to_string(op), " sample ", s);
        CHECK(lin_cv <= f + tol);
        CHECK(lin_cc >= f - tol);
      }
    }
  }
}
