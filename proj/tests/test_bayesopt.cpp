#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "helpers.hpp"
#include "mlembed/bayesopt.hpp"
#include "mlembed/error.hpp"

using namespace mlembed;

namespace {

GaussianProcessModel gp_1d(std::vector<double> xs, std::vector<double> ys, double weight, Box box,
                           double noise = 0.0) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(xs.size()), 1);
  Eigen::VectorXd Y(static_cast<Eigen::Index>(ys.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    X(static_cast<Eigen::Index>(i), 0) = xs[i];
    Y[static_cast<Eigen::Index>(i)] = ys[i];
  }
  return GaussianProcessModel(X, Y, Eigen::VectorXd::Constant(1, weight), 1.0, noise, 0.0, std::move(box));
}

// Closed-form expected improvement from the GP prediction.
double ei_reference(const GaussianProcessModel& gp, double fstar, double x, double floor = 1e-6) {
  const auto p = gp.predict(std::vector<double>{x});
  const double s = std::sqrt(std::max(p.variance, floor * floor));
  const double z = (fstar - p.mean) / s;
  const double Phi = 0.5 * std::erfc(-z / std::sqrt(2.0));
  const double phi = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
  return (fstar - p.mean) * Phi + s * phi;
}

double quadratic(std::span<const double> x) { return (x[0] - 0.3) * (x[0] - 0.3); }

}  // namespace

TEST_CASE("expected improvement examples") {
  // Far from the data the posterior reverts to the prior: mean 0, variance 1.
  const auto far = gp_1d({0.0}, {0.0}, 1.0, Box({-100}, {100}));
  const ExprGraph g = build_ei_graph(far, 0.0);
  CHECK(std::abs(g.value(std::vector<double>{60.0}) - 0.3989422804014327) <= 1e-6);

  // Noise-free data point with target f* + 1: no improvement, no uncertainty.
  const auto gp = gp_1d({0.0, 1.0}, {1.0, 0.0}, 2.0, Box({-2}, {3}));
  const ExprGraph e = build_ei_graph(gp, 0.0);
  CHECK(e.value(std::vector<double>{0.0}) <= 1e-6);
  // Data point whose target equals f*.
  CHECK(e.value(std::vector<double>{1.0}) <= 1e-6);
}

TEST_CASE("expected improvement is nonnegative and matches the closed form") {
  testing::Rng rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (int i = 0; i < 5; ++i) {
      xs.push_back(-2.0 + i + rng.uniform(0, 0.5));
      ys.push_back(rng.uniform(-1, 1));
    }
    const auto gp = gp_1d(xs, ys, 1.5, Box({-3}, {3}), 1e-8);
    const double fstar = *std::min_element(ys.begin(), ys.end());
    const ExprGraph g = build_ei_graph(gp, fstar);
    for (int s = 0; s < 200; ++s) {
      const double x = rng.uniform(-3, 3);
      const double v = g.value(std::vector<double>{x});
      CHECK(v >= -1e-12);
      CHECK(std::abs(v - ei_reference(gp, fstar, x)) <= 1e-9);
    }
    const auto exact = gp_1d(xs, ys, 1.5, Box({-3}, {3}));
    const ExprGraph h = build_ei_graph(exact, fstar);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      CHECK(h.value(std::vector<double>{xs[i]}) <= 1e-6 * (1 + std::abs(fstar)));
    }
  }
}

TEST_CASE("symmetric data suggests the midpoint") {
  const Box box({-1.0}, {1.0});
  BoState state(BoSurrogate{{1.0}}, box);
  state.observe({-1.0}, 0.0, true, false);
  state.observe({1.0}, 0.0, true, false);
  const BoStep step = bo_step(state, box);
  CHECK(!step.fallback);
  CHECK(std::abs(step.x[0]) <= 1e-3);
}

TEST_CASE("a single observation pushes to the far boundary") {
  const Box box({-2.0}, {2.0});
  BoState state(BoSurrogate{{1.0}}, box);
  state.observe({0.3}, 0.0, true, false);
  const BoStep step = bo_step(state, box);
  CHECK(!step.fallback);
  // Dense sampling of the acquisition surface.
  const ExprGraph g = build_ei_graph(state.gp, state.best);
  const GridResult dense = grid_oracle(
      [&](std::span<const double> x) { return -g.value(x); }, box, 4001);
  CHECK(dense.x[0] == -2.0);
  CHECK(std::abs(step.x[0] + 2.0) <= 1e-6);
}

TEST_CASE("vanishing expected improvement falls back to the farthest vertex") {
  const Box box({0.0, 0.0}, {1.0, 1.0});
  BoState state(BoSurrogate{{1e-9, 1e-9}, 1.0, 1e-14}, box);
  state.observe({0.1, 0.2}, 0.0, true, false);
  const BoStep step = bo_step(state, box);
  CHECK(step.fallback);
  CHECK(step.x == std::vector<double>{1.0, 1.0});
  CHECK(farthest_vertex(box, {{0.9, 0.1}}) == std::vector<double>{0.0, 1.0});
}

TEST_CASE("state bookkeeping") {
  const Box box({0.0}, {1.0});
  BoState state(BoSurrogate{{3.0}}, box);
  for (double y : {2.0, 1.0, 3.0}) state.observe({y / 4}, y, true, false);
  CHECK(state.best == 1.0);
  CHECK(state.history.size() == state.iteration);
  CHECK(state.history.back().best == 1.0);
  CHECK_THROWS_AS(state.observe({0.5}, NAN, false, false), Error);
  CHECK_THROWS_AS(BoState(BoSurrogate{{1.0, 1.0}}, box), Error);
}

TEST_CASE("quadratic run") {
  const Box box({0.0}, {1.0});
  BoOptions o;
  o.budget = 12;
  const BoSurrogate sur{{4.0}};
  const auto hist = bo_run(quadratic, box, sur, o);
  REQUIRE(hist.size() == 12);
  double best_x = 0.0;
  for (const auto& r : hist) {
    if (r.value == hist.back().best) best_x = r.x[0];
  }
  CHECK(std::abs(best_x - 0.3) <= 1e-2);
  double last = INFINITY;
  for (const auto& r : hist) {
    CHECK(r.best <= last);
    last = r.best;
    CHECK(box.contains(r.x));
  }
  CHECK(hist[0].from_design);
  CHECK(!hist[5].from_design);

  const auto again = bo_run(quadratic, box, sur, o);
  CHECK(format_history(again) == format_history(hist));
}

TEST_CASE("budget equal to the design") {
  const Box box({0.0, -1.0}, {1.0, 1.0});
  BoOptions o;
  o.budget = 4;
  o.initial = 4;
  const auto hist = bo_run([](std::span<const double> x) { return x[0] + x[1]; }, box, BoSurrogate{{1.0, 1.0}}, o);
  REQUIRE(hist.size() == 4);
  for (std::size_t k = 0; k < hist.size(); ++k) {
    CHECK(hist[k].from_design);
    const auto h = halton(k + 1, 2);
    CHECK(hist[k].x[0] == h[0]);
    CHECK(hist[k].x[1] == -1.0 + 2.0 * h[1]);
  }
  const std::string text = format_history(hist);
  CHECK(text.rfind("iteration\tx1\tx2\tvalue\tbest\tsource\n", 0) == 0);
}

TEST_CASE("run configuration and callback errors") {
  const Box box({0.0}, {1.0});
  BoOptions o;
  o.initial = 1;
  CHECK_THROWS_AS(bo_run(quadratic, box, BoSurrogate{{1.0}}, o), Error);
  o.initial = 3;
  o.budget = 2;
  CHECK_THROWS_AS(bo_run(quadratic, box, BoSurrogate{{1.0}}, o), Error);
  o.budget = 6;
  int calls = 0;
  try {
    (void)bo_run(
        [&](std::span<const double> x) {
          if (++calls == 5) throw std::runtime_error("simulator crashed");
          return x[0];
        },
        box, BoSurrogate{{2.0}}, o);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("iteration 5") != std::string::npos);
  }
}
