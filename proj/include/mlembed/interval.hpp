#pragma once

#include <span>

#include "mlembed/expr_graph.hpp"

namespace mlembed {

/// Closed inclusion interval [lo, hi] over the extended reals.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  Interval() = default;
  Interval(double l, double h);
  static Interval point(double v) { return Interval(v, v); }

  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  bool contains(double v, double tol = 0.0) const { return v >= lo - tol && v <= hi + tol; }
  bool contains(const Interval& o, double tol = 0.0) const {
    return o.lo >= lo - tol && o.hi <= hi + tol;
  }
};

Interval operator+(const Interval& a, const Interval& b);
Interval operator-(const Interval& a, const Interval& b);
Interval operator-(const Interval& a);
Interval operator*(const Interval& a, const Interval& b);
Interval operator*(double s, const Interval& a);
Interval operator+(double s, const Interval& a);

/// Throws ErrorKind::numeric when 0 lies in `b`.
Interval divide(const Interval& a, const Interval& b);
Interval reciprocal(const Interval& a);
Interval sqr(const Interval& a);
/// Square root of the argument floored at 0.
Interval sqrt(const Interval& a);
Interval exp(const Interval& a);
/// lo = -inf when a.lo <= 0; throws when a.hi <= 0.
Interval log(const Interval& a);
Interval tanh(const Interval& a);
Interval erf(const Interval& a);
Interval max0(const Interval& a);
Interval hull(const Interval& a, const Interval& b);
Interval intersect(const Interval& a, const Interval& b);

/// Natural interval extension of one graph node given operand intervals
/// (indexed by node id).
Interval interval_apply(const ExprNode& node, std::span<const Interval> values,
                        const Box& box);

}  // namespace mlembed
