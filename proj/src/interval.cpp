#include "mlembed/interval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mlembed/error.hpp"

namespace mlembed {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// 0 * inf is taken as 0 for interval endpoint products.
double mul0(double a, double b) {
  if (a == 0.0 || b == 0.0) return 0.0;
  return a * b;
}
}  // namespace

Interval::Interval(double l, double h) : lo(l), hi(h) {
  if (std::isnan(l) || std::isnan(h)) fail(ErrorKind::numeric, "interval with NaN endpoint");
  if (l > h) fail(ErrorKind::numeric, "interval with lo > hi");
}

Interval operator+(const Interval& a, const Interval& b) { return {a.lo + b.lo, a.hi + b.hi}; }
Interval operator-(const Interval& a, const Interval& b) { return {a.lo - b.hi, a.hi - b.lo}; }
Interval operator-(const Interval& a) { return {-a.hi, -a.lo}; }
Interval operator+(double s, const Interval& a) { return {a.lo + s, a.hi + s}; }

Interval operator*(const Interval& a, const Interval& b) {
  const double p[4] = {mul0(a.lo, b.lo), mul0(a.lo, b.hi), mul0(a.hi, b.lo), mul0(a.hi, b.hi)};
  return {*std::min_element(p, p + 4), *std::max_element(p, p + 4)};
}

Interval operator*(double s, const Interval& a) {
  return s >= 0.0 ? Interval(mul0(s, a.lo), mul0(s, a.hi)) : Interval(mul0(s, a.hi), mul0(s, a.lo));
}

Interval reciprocal(const Interval& a) {
  if (a.lo <= 0.0 && a.hi >= 0.0) {
    fail(ErrorKind::numeric, "division by an interval containing zero");
  }
  return {1.0 / a.hi, 1.0 / a.lo};
}

Interval divide(const Interval& a, const Interval& b) { return a * reciprocal(b); }

Interval sqr(const Interval& a) {
  if (a.lo <= 0.0 && a.hi >= 0.0) return {0.0, std::max(a.lo * a.lo, a.hi * a.hi)};
  const double l = a.lo * a.lo;
  const double h = a.hi * a.hi;
  return {std::min(l, h), std::max(l, h)};
}

Interval sqrt(const Interval& a) {
  return {std::sqrt(std::max(a.lo, 0.0)), std::sqrt(std::max(a.hi, 0.0))};
}

Interval exp(const Interval& a) { return {std::exp(a.lo), std::exp(a.hi)}; }

Interval log(const Interval& a) {
  if (a.hi <= 0.0) fail(ErrorKind::numeric, "log of a nonpositive interval");
  return {a.lo > 0.0 ? std::log(a.lo) : -kInf, std::log(a.hi)};
}

Interval tanh(const Interval& a) { return {std::tanh(a.lo), std::tanh(a.hi)}; }
Interval erf(const Interval& a) { return {std::erf(a.lo), std::erf(a.hi)}; }
Interval max0(const Interval& a) { return {std::max(a.lo, 0.0), std::max(a.hi, 0.0)}; }

Interval hull(const Interval& a, const Interval& b) {
  return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
}

Interval intersect(const Interval& a, const Interval& b) {
  const double lo = std::max(a.lo, b.lo);
  const double hi = std::min(a.hi, b.hi);
  if (lo > hi) {
    // Empty up to rounding: collapse onto the nearer endpoint.
    return Interval::point(0.5 * (lo + hi));
  }
  return {lo, hi};
}

Interval interval_apply(const ExprNode& n, std::span<const Interval> v, const Box& box) {
  auto A = [&]() -> const Interval& { return v[static_cast<std::size_t>(n.a)]; };
  auto B = [&]() -> const Interval& { return v[static_cast<std::size_t>(n.b)]; };
  switch (n.op) {
    case Op::constant: return Interval::point(n.value);
    case Op::variable: {
      const auto i = static_cast<std::size_t>(n.var);
      return {box.lower[i], box.upper[i]};
    }
    case Op::negate: return -A();
    case Op::add: return A() + B();
    case Op::subtract: return A() - B();
    case Op::multiply: return A() * B();
    case Op::divide: return divide(A(), B());
    case Op::square: return sqr(A());
    case Op::sqrt: return sqrt(A());
    case Op::exp: return exp(A());
    case Op::log: return log(A());
    case Op::tanh: return tanh(A());
    case Op::erf: return erf(A());
    case Op::max0: return max0(A());
    case Op::affine: {
      Interval s = Interval::point(n.value);
      for (std::size_t k = 0; k < n.terms.size(); ++k) {
        s = s + n.weights[k] * v[static_cast<std::size_t>(n.terms[k])];
      }
      return s;
    }
    case Op::se_kernel: {
      Interval u = Interval::point(0.0);
      for (std::size_t k = 0; k < n.terms.size(); ++k) {
        const Interval d = v[static_cast<std::size_t>(n.terms[k])] - Interval::point(n.centers[k]);
        u = u + n.weights[k] * sqr(d);
      }
      return {std::exp(-0.5 * u.hi), std::exp(-0.5 * u.lo)};
    }
  }
  return Interval::point(0.0);
}

}  // namespace mlembed
