#include <cmath>
#include <limits>

#include "doctest.h"
#include "helpers.hpp"
#include "mlembed/lp.hpp"
#include "mlembed/problem.hpp"

using namespace mlembed;

namespace {

LpModel box_model(int n, double lo, double hi) {
  LpModel m;
  m.A = Eigen::MatrixXd::Zero(0, n);
  m.rhs = Eigen::VectorXd::Zero(0);
  m.cost = Eigen::VectorXd::Zero(n);
  m.lower.assign(static_cast<std::size_t>(n), lo);
  m.upper.assign(static_cast<std::size_t>(n), hi);
  return m;
}

LpModel random_lp(testing::Rng& rng) {
  const int n = rng.integer(1, 6);
  const int m = rng.integer(1, 6);
  LpModel lp = box_model(n, 0.0, 0.0);
  lp.A.resize(m, n);
  lp.rhs.resize(m);
  for (int j = 0; j < n; ++j) {
    lp.lower[static_cast<std::size_t>(j)] = rng.uniform(-3, 0);
    lp.upper[static_cast<std::size_t>(j)] = rng.uniform(0.5, 3);
    lp.cost[j] = rng.uniform(-1, 1);
  }
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) lp.A(i, j) = rng.uniform() < 0.3 ? 0.0 : rng.uniform(-2, 2);
    lp.rhs[i] = rng.uniform(-1, 2);
    lp.sense.push_back(rng.uniform() < 0.7 ? RowSense::le : RowSense::ge);
  }
  return lp;
}

bool feasible(const LpModel& lp, const Eigen::VectorXd& x, double tol) {
  for (int j = 0; j < lp.num_cols(); ++j) {
    if (x[j] < lp.lower[static_cast<std::size_t>(j)] - tol || x[j] > lp.upper[static_cast<std::size_t>(j)] + tol) {
      return false;
    }
  }
  const Eigen::VectorXd act = lp.A * x;
  for (int i = 0; i < lp.num_rows(); ++i) {
    const double r = act[i] - lp.rhs[i];
    const auto s = lp.sense[static_cast<std::size_t>(i)];
    if (s == RowSense::le && r > tol) return false;
    if (s == RowSense::ge && r < -tol) return false;
    if (s == RowSense::eq && std::abs(r) > tol) return false;
  }
  return true;
}

// Minimum over all basic solutions: every choice of n tight constraints
// among the rows and the bounds.
std::optional<double> enumerate_vertices(const LpModel& lp) {
  const int n = lp.num_cols();
  const int m = lp.num_rows();
  const int total = m + 2 * n;
  std::optional<double> best;
  std::vector<int> pick(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pick[static_cast<std::size_t>(i)] = i;
  while (true) {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd b(n);
    for (int r = 0; r < n; ++r) {
      const int c = pick[static_cast<std::size_t>(r)];
      if (c < m) {
        M.row(r) = lp.A.row(c);
        b[r] = lp.rhs[c];
      } else {
        const int j = (c - m) / 2;
        M(r, j) = 1.0;
        b[r] = (c - m) % 2 == 0 ? lp.lower[static_cast<std::size_t>(j)] : lp.upper[static_cast<std::size_t>(j)];
      }
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (lu.rank() == n) {
      const Eigen::VectorXd x = lu.solve(b);
      if (feasible(lp, x, 1e-9)) {
        const double v = lp.cost.dot(x);
        if (!best || v < *best) best = v;
      }
    }
    int k = n - 1;
    while (k >= 0 && pick[static_cast<std::size_t>(k)] == total - n + k) --k;
    if (k < 0) break;
    ++pick[static_cast<std::size_t>(k)];
    for (int r = k + 1; r < n; ++r) pick[static_cast<std::size_t>(r)] = pick[static_cast<std::size_t>(r - 1)] + 1;
  }
  return best;
}

}  // namespace

TEST_CASE("simplex examples") {
  LpModel a = box_model(1, 0.0, 1.0);
  a.cost[0] = 1.0;
  const auto sa = solve_lp(a);
  CHECK(sa.status == LpStatus::optimal);
  CHECK(sa.objective == 0.0);

  LpModel b = box_model(2, 0.0, 1.0);
  b.cost << -1.0, -1.0;
  b.A.resize(1, 2);
  b.A << 1.0, 1.0;
  b.rhs = Eigen::VectorXd::Constant(1, 1.0);
  b.sense = {RowSense::le};
  const auto sb = solve_lp(b);
  CHECK(sb.status == LpStatus::optimal);
  CHECK(std::abs(sb.objective + 1.0) <= 1e-12);

  // max x s.t. x >= 2 with x in [0,1], posed as min -x.
  LpModel c = box_model(1, 0.0, 1.0);
  c.cost[0] = -1.0;
  c.A = Eigen::MatrixXd::Constant(1, 1, 1.0);
  c.rhs = Eigen::VectorXd::Constant(1, 2.0);
  c.sense = {RowSense::ge};
  CHECK(solve_lp(c).status == LpStatus::infeasible);
}

TEST_CASE("unbounded detection") {
  const double inf = std::numeric_limits<double>::infinity();
  LpModel m = box_model(2, 0.0, inf);
  m.cost << -1.0, 0.0;
  m.A.resize(1, 2);
  m.A << 1.0, -1.0;
  m.rhs = Eigen::VectorXd::Constant(1, 1.0);
  m.sense = {RowSense::le};
  CHECK(solve_lp(m).status == LpStatus::unbounded);
}

TEST_CASE("equality rows and free columns") {
  const double inf = std::numeric_limits<double>::infinity();
  LpModel m = box_model(2, -inf, inf);
  m.cost << 1.0, 2.0;
  m.A.resize(2, 2);
  m.A << 1.0, 1.0, 1.0, -1.0;
  m.rhs.resize(2);
  m.rhs << 3.0, 1.0;
  m.sense = {RowSense::eq, RowSense::eq};
  const auto s = solve_lp(m);
  REQUIRE(s.status == LpStatus::optimal);
  CHECK(std::abs(s.x[0] - 2.0) <= 1e-12);
  CHECK(std::abs(s.x[1] - 1.0) <= 1e-12);
}

TEST_CASE("optimum matches vertex enumeration") {
  testing::Rng rng(101);
  int optimal = 0;
  int infeasible = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const LpModel lp = random_lp(rng);
    const auto ref = enumerate_vertices(lp);
    const auto sol = solve_lp(lp);
    if (!ref) {
      CHECK(sol.status == LpStatus::infeasible);
      ++infeasible;
      continue;
    }
    REQUIRE(sol.status == LpStatus::optimal);
    ++optimal;
    CHECK(std::abs(sol.objective - *ref) <= 1e-7);
    const Eigen::Map<const Eigen::VectorXd> x(sol.x.data(), lp.num_cols());
    CHECK(feasible(lp, x, 1e-7));
    CHECK(std::abs(lp.cost.dot(x) - sol.objective) <= 1e-9);
    for (double rc : sol.reduced_costs) CHECK(std::isfinite(rc));
  }
  CHECK(optimal > 100);
  CHECK(infeasible > 0);
}

TEST_CASE("simplex is deterministic") {
  testing::Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const LpModel lp = random_lp(rng);
    const auto a = solve_lp(lp);
    const auto b = solve_lp(lp);
    CHECK(a.status == b.status);
    CHECK(a.iterations == b.iterations);
    CHECK(a.x == b.x);
  }
}

TEST_CASE("bound override") {
  LpModel m = box_model(2, 0.0, 1.0);
  m.cost << -1.0, -2.0;
  const std::vector<double> lo{0.0, 0.0};
  const std::vector<double> hi{1.0, 0.25};
  const auto s = solve_lp(m, lo, hi);
  CHECK(std::abs(s.objective + 1.5) <= 1e-12);
}

TEST_CASE("problem IR relaxation") {
  ProblemIR ir;
  const int x = ir.add_variable("x", 0.0, 1.0);
  ir.objective = {{x, 1.0}};
  const auto s = solve_lp(ir);
  CHECK(s.status == LpStatus::optimal);
  CHECK(s.objective == 0.0);
}
