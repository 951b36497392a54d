#include "mlembed/mccormick.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "mlembed/error.hpp"

namespace mlembed {

namespace {

using Vec = std::vector<double>;

struct Piece {
  double value;
  double slope;
};
using UniFn = std::function<Piece(double)>;

bool all_finite(const Vec& v) {
  return std::all_of(v.begin(), v.end(), [](double s) { return std::isfinite(s); });
}

// Non-finite pieces fall back to the interval bound; then cut.
McValue finish(McValue r) {
  const std::size_t n = std::max(r.cvsub.size(), r.ccsub.size());
  if (!std::isfinite(r.cv) || !all_finite(r.cvsub)) {
    r.cv = r.range.lo;
    r.cvsub.assign(n, 0.0);
  }
  if (!std::isfinite(r.cc) || !all_finite(r.ccsub)) {
    r.cc = r.range.hi;
    r.ccsub.assign(n, 0.0);
  }
  if (r.cv < r.range.lo) {
    r.cv = r.range.lo;
    std::fill(r.cvsub.begin(), r.cvsub.end(), 0.0);
  }
  if (r.cc > r.range.hi) {
    r.cc = r.range.hi;
    std::fill(r.ccsub.begin(), r.ccsub.end(), 0.0);
  }
  return r;
}

Vec scaled(const Vec& v, double s) {
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = s * v[i];
  return out;
}

void axpy(Vec& dst, double s, const Vec& v) {
  for (std::size_t i = 0; i < v.size(); ++i) dst[i] += s * v[i];
}

// Secant of f over [a, b] as an affine piece.
UniFn secant(double a, double fa, double b, double fb) {
  const double s = b > a ? (fb - fa) / (b - a) : 0.0;
  return [=](double x) { return Piece{fa + s * (x - a), s}; };
}

// Univariate composition: cv = cvfn(mid(g.cv, g.cc, xmin)), likewise for cc.
McValue compose(const McValue& g, Interval out, const UniFn& cvfn, double xmin, const UniFn& ccfn,
                double xmax) {
  McValue r;
  r.range = out;
  const std::size_t n = g.cvsub.size();
  auto pick = [&](double target, const UniFn& fn, double& val, Vec& sub) {
    double p;
    const Vec* src = nullptr;
    if (target <= g.cv) {
      p = g.cv;
      src = &g.cvsub;
    } else if (target >= g.cc) {
      p = g.cc;
      src = &g.ccsub;
    } else {
      p = target;
    }
    p = std::clamp(p, g.range.lo, g.range.hi);
    const Piece piece = fn(p);
    val = piece.value;
    sub = src ? scaled(*src, piece.slope) : Vec(n, 0.0);
  };
  pick(xmin, cvfn, r.cv, r.cvsub);
  pick(xmax, ccfn, r.cc, r.ccsub);
  return finish(std::move(r));
}

UniFn exact(double (*f)(double), double (*df)(double)) {
  return [=](double x) { return Piece{f(x), df(x)}; };
}

// Bracketed root of fn on [lo, hi] (opposite signs at the ends), returning a
// point where fn has the sign requested by `want_nonneg`.
double bracket_root(const std::function<double(double)>& fn, const std::function<double(double)>& dfn,
                    double lo, double hi, bool want_nonneg) {
  double flo = fn(lo);
  auto good = [&](double v) { return want_nonneg ? v >= 0.0 : v <= 0.0; };
  // Keep lo on the side where fn has the sign of flo.
  const bool lo_is_good = good(flo);
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double fx = fn(x);
    if ((fx >= 0.0) == (flo >= 0.0)) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
    }
    if (hi - lo <= 1e-14 * (1.0 + std::abs(x))) break;
    if (std::abs(fx) < 1e-13) {
      // Collapse the bracket around x by probing outward.
      double d = 1e-13 * (1.0 + std::abs(x));
      for (int k = 0; k < 60; ++k) {
        const double xl = std::max(lo, x - d);
        const double xr = std::min(hi, x + d);
        const double fl = fn(xl);
        const double fr = fn(xr);
        if ((fl >= 0.0) == (flo >= 0.0)) {
          lo = xl;
          flo = fl;
        }
        if ((fr >= 0.0) != (flo >= 0.0)) {
          hi = xr;
        }
        if (hi - lo <= 4.0 * d) break;
        d *= 2.0;
      }
      break;
    }
    const double d = dfn(x);
    double next = (d != 0.0 && std::isfinite(d)) ? x - fx / d : lo - 1.0;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
  }
  return lo_is_good ? lo : hi;
}

// ---- S-shaped primitives (convex on x <= 0, concave on x >= 0) -----------

struct SShape {
  double (*f)(double);
  double (*df)(double);
  double (*d2f)(double);
};

double tanh_d1(double x) {
  const double t = std::tanh(x);
  return 1.0 - t * t;
}
double tanh_d2(double x) {
  const double t = std::tanh(x);
  return -2.0 * t * (1.0 - t * t);
}
double erf_d1(double x) { return 2.0 / std::sqrt(std::numbers::pi) * std::exp(-x * x); }
double erf_d2(double x) { return -2.0 * x * erf_d1(x); }
double erf_f(double x) { return std::erf(x); }
double tanh_f(double x) { return std::tanh(x); }

McValue sshape_relax(const McValue& g, Interval out, const SShape& s) {
  const double a = g.range.lo;
  const double b = g.range.hi;
  const double fa = s.f(a);
  const double fb = s.f(b);
  if (b <= 0.0) return compose(g, out, exact(s.f, s.df), a, secant(a, fa, b, fb), b);
  if (a >= 0.0) return compose(g, out, secant(a, fa, b, fb), a, exact(s.f, s.df), b);

  // Underestimator: f left of the tangency point, its tangent line after.
  UniFn cvfn;
  auto gfun = [&](double x) { return s.f(x) + s.df(x) * (b - x) - fb; };
  auto gder = [&](double x) { return s.d2f(x) * (b - x); };
  if (gfun(a) >= 0.0) {
    cvfn = secant(a, fa, b, fb);
  } else {
    const double t = bracket_root(gfun, gder, a, 0.0, false);
    const double ft = s.f(t);
    const double st = s.df(t);
    const auto f = s.f;
    const auto df = s.df;
    cvfn = [=](double x) {
      if (x <= t) return Piece{f(x), df(x)};
      return Piece{ft + st * (x - t), st};
    };
  }
  UniFn ccfn;
  auto hfun = [&](double y) { return s.f(y) - s.df(y) * (y - a) - fa; };
  auto hder = [&](double y) { return -s.d2f(y) * (y - a); };
  if (hfun(b) <= 0.0) {
    ccfn = secant(a, fa, b, fb);
  } else {
    const double t = bracket_root(hfun, hder, 0.0, b, true);
    const double ft = s.f(t);
    const double st = s.df(t);
    const auto f = s.f;
    const auto df = s.df;
    ccfn = [=](double x) {
      if (x >= t) return Piece{f(x), df(x)};
      return Piece{ft + st * (x - t), st};
    };
  }
  return compose(g, out, cvfn, a, ccfn, b);
}

// ---- Gaussian factor exp(-w d^2 / 2) ------------------------------------

struct Bump {
  double w;
  double f(double d) const { return std::exp(-0.5 * w * d * d); }
  double df(double d) const { return -w * d * f(d); }
  double d2f(double d) const { return (w * w * d * d - w) * f(d); }
  Piece piece(double d) const { return Piece{f(d), df(d)}; }
  // Tangent line at t evaluated at x.
  double tangent_at(double t, double x) const { return f(t) + df(t) * (x - t); }
};

// Tangent-line-then-curve (or curve-then-tangent-line) piece.
UniFn spliced(const Bump& bm, double t, bool line_left) {
  const double ft = bm.f(t);
  const double st = bm.df(t);
  return [=](double x) {
    if ((x < t) == line_left) return Piece{ft + st * (x - t), st};
    return bm.piece(x);
  };
}

// Concave overestimator of the bump on [a, b] and its maximizer.
void bump_cc(const Bump& bm, double a, double b, UniFn& fn, double& xmax) {
  const double s = 1.0 / std::sqrt(bm.w);
  const double fa = bm.f(a);
  const double fb = bm.f(b);
  const UniFn sec = secant(a, fa, b, fb);
  const double sec_max = fa >= fb ? a : b;
  if (b <= -s || a >= s) {
    fn = sec;
    xmax = sec_max;
    return;
  }
  // Left tangent point: line through (a, f(a)) touching at pL.
  double pL = a;
  if (a < -s) {
    auto h = [&](double p) { return bm.tangent_at(p, a) - fa; };
    auto dh = [&](double p) { return bm.d2f(p) * (a - p); };
    pL = bracket_root(h, dh, -s, 0.0, true);
  }
  double pR = b;
  if (b > s) {
    auto h = [&](double p) { return bm.tangent_at(p, b) - fb; };
    auto dh = [&](double p) { return bm.d2f(p) * (b - p); };
    pR = bracket_root(h, dh, 0.0, s, true);
  }
  if (pL > pR || pL > b || pR < a) {
    fn = sec;
    xmax = sec_max;
    return;
  }
  const double fL = bm.f(pL);
  const double sL = bm.df(pL);
  const double fR = bm.f(pR);
  const double sR = bm.df(pR);
  fn = [=](double x) {
    if (x < pL) return Piece{fL + sL * (x - pL), sL};
    if (x > pR) return Piece{fR + sR * (x - pR), sR};
    return bm.piece(x);
  };
  xmax = std::clamp(0.0, pL, pR);
}

// Convex underestimator of the bump on [a, b]; returns false when the
// interval straddles the peak and leaves the concave core.
bool bump_cv(const Bump& bm, double a, double b, UniFn& fn, double& xmin) {
  const double s = 1.0 / std::sqrt(bm.w);
  const double fa = bm.f(a);
  const double fb = bm.f(b);
  if (a >= 0.0) {
    xmin = b;
    if (a >= s) {
      fn = [bm](double x) { return bm.piece(x); };
    } else if (b <= s) {
      fn = secant(a, fa, b, fb);
    } else {
      auto q = [&](double t) { return bm.tangent_at(t, a) - fa; };
      auto dq = [&](double t) { return bm.d2f(t) * (a - t); };
      if (q(b) >= 0.0) {
        fn = secant(a, fa, b, fb);
      } else {
        fn = spliced(bm, bracket_root(q, dq, s, b, false), true);
      }
    }
    return true;
  }
  if (b <= 0.0) {
    xmin = a;
    if (b <= -s) {
      fn = [bm](double x) { return bm.piece(x); };
    } else if (a >= -s) {
      fn = secant(a, fa, b, fb);
    } else {
      auto q = [&](double t) { return bm.tangent_at(t, b) - fb; };
      auto dq = [&](double t) { return bm.d2f(t) * (b - t); };
      if (q(a) >= 0.0) {
        fn = secant(a, fa, b, fb);
      } else {
        fn = spliced(bm, bracket_root(q, dq, a, -s, false), false);
      }
    }
    return true;
  }
  if (a >= -s && b <= s) {
    fn = secant(a, fa, b, fb);
    xmin = fa <= fb ? a : b;
    return true;
  }
  return false;
}

McValue max_of(const McValue& p, const McValue& q) {
  McValue r = p;
  if (q.cv > r.cv) {
    r.cv = q.cv;
    r.cvsub = q.cvsub;
  }
  if (q.cc < r.cc) {
    r.cc = q.cc;
    r.ccsub = q.ccsub;
  }
  return r;
}

McValue shifted(const McValue& a, double c) {
  McValue r = a;
  r.cv -= c;
  r.cc -= c;
  r.range = a.range - Interval::point(c);
  return r;
}

}  // namespace

McValue McValue::constant(double v, std::size_t n) {
  McValue r;
  r.cv = r.cc = v;
  r.cvsub.assign(n, 0.0);
  r.ccsub.assign(n, 0.0);
  r.range = Interval::point(v);
  return r;
}

McValue McValue::variable(double at, std::size_t index, Interval range, std::size_t n) {
  McValue r;
  r.cv = r.cc = at;
  r.cvsub.assign(n, 0.0);
  r.ccsub.assign(n, 0.0);
  r.cvsub[index] = 1.0;
  r.ccsub[index] = 1.0;
  r.range = range;
  return finish(std::move(r));
}

McValue mc_negate(const McValue& a, Interval out) {
  McValue r;
  r.range = out;
  r.cv = -a.cc;
  r.cc = -a.cv;
  r.cvsub = scaled(a.ccsub, -1.0);
  r.ccsub = scaled(a.cvsub, -1.0);
  return finish(std::move(r));
}

McValue mc_add(const McValue& a, const McValue& b, Interval out) {
  const McValue* t[2] = {&a, &b};
  const double w[2] = {1.0, 1.0};
  return mc_affine(t, w, 0.0, out);
}

McValue mc_sub(const McValue& a, const McValue& b, Interval out) {
  const McValue* t[2] = {&a, &b};
  const double w[2] = {1.0, -1.0};
  return mc_affine(t, w, 0.0, out);
}

McValue mc_affine(std::span<const McValue* const> terms, std::span<const double> weights,
                  double offset, Interval out) {
  const std::size_t n = terms.empty() ? 0 : terms[0]->cvsub.size();
  McValue r;
  r.range = out;
  r.cv = r.cc = offset;
  r.cvsub.assign(n, 0.0);
  r.ccsub.assign(n, 0.0);
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const McValue& t = *terms[k];
    const double w = weights[k];
    if (w >= 0.0) {
      r.cv += w * t.cv;
      r.cc += w * t.cc;
      axpy(r.cvsub, w, t.cvsub);
      axpy(r.ccsub, w, t.ccsub);
    } else {
      r.cv += w * t.cc;
      r.cc += w * t.cv;
      axpy(r.cvsub, w, t.ccsub);
      axpy(r.ccsub, w, t.cvsub);
    }
  }
  return finish(std::move(r));
}

McValue mc_mul(const McValue& a, const McValue& b, Interval out) {
  const double xL = a.range.lo, xU = a.range.hi;
  const double yL = b.range.lo, yU = b.range.hi;
  const std::size_t n = a.cvsub.size();
  // c * (convex part of a) and c * (concave part of a).
  auto low = [](double c, const McValue& m, Vec& sub) {
    if (c >= 0.0) {
      axpy(sub, c, m.cvsub);
      return c * m.cv;
    }
    axpy(sub, c, m.ccsub);
    return c * m.cc;
  };
  auto high = [](double c, const McValue& m, Vec& sub) {
    if (c >= 0.0) {
      axpy(sub, c, m.ccsub);
      return c * m.cc;
    }
    axpy(sub, c, m.cvsub);
    return c * m.cv;
  };
  Vec s1(n, 0.0), s2(n, 0.0), s3(n, 0.0), s4(n, 0.0);
  const double a1 = low(yL, a, s1) + low(xL, b, s1) - xL * yL;
  const double a2 = low(yU, a, s2) + low(xU, b, s2) - xU * yU;
  const double b1 = high(yL, a, s3) + high(xU, b, s3) - xU * yL;
  const double b2 = high(yU, a, s4) + high(xL, b, s4) - xL * yU;
  McValue r;
  r.range = out;
  if (a1 >= a2 || std::isnan(a2)) {
    r.cv = a1;
    r.cvsub = std::move(s1);
  } else {
    r.cv = a2;
    r.cvsub = std::move(s2);
  }
  if (b1 <= b2 || std::isnan(b2)) {
    r.cc = b1;
    r.ccsub = std::move(s3);
  } else {
    r.cc = b2;
    r.ccsub = std::move(s4);
  }
  return finish(std::move(r));
}

McValue mc_recip(const McValue& g, Interval out) {
  const double a = g.range.lo;
  const double b = g.range.hi;
  if (a <= 0.0 && b >= 0.0) fail(ErrorKind::numeric, "division by an interval containing zero");
  auto f = [](double x) { return Piece{1.0 / x, -1.0 / (x * x)}; };
  const UniFn sec = secant(a, 1.0 / a, b, 1.0 / b);
  if (a > 0.0) return compose(g, out, f, b, sec, a);
  return compose(g, out, sec, b, f, a);
}

McValue mc_div(const McValue& a, const McValue& b, Interval out) {
  return mc_mul(a, mc_recip(b, reciprocal(b.range)), out);
}

McValue mc_square(const McValue& g, Interval out) {
  const double a = g.range.lo;
  const double b = g.range.hi;
  auto f = [](double x) { return Piece{x * x, 2.0 * x}; };
  const UniFn sec = secant(a, a * a, b, b * b);
  const double xmax = (a + b) >= 0.0 ? b : a;
  return compose(g, out, f, std::clamp(0.0, a, b), sec, xmax);
}

McValue mc_sqrt(const McValue& g, Interval out) {
  const double a = g.range.lo;
  const double b = g.range.hi;
  auto f = [](double x) {
    if (x <= 0.0) return Piece{0.0, 0.0};
    const double r = std::sqrt(x);
    return Piece{r, 0.5 / r};
  };
  if (a >= 0.0) return compose(g, out, secant(a, std::sqrt(a), b, std::sqrt(b)), a, f, b);
  // Floored branch: flat at 0 then concave.
  const double sb = std::sqrt(std::max(b, 0.0));
  const UniFn cv = [=](double x) {
    if (x <= 0.0 || b <= 0.0) return Piece{0.0, 0.0};
    return Piece{sb * x / b, sb / b};
  };
  const double p = -a;
  UniFn cc;
  if (b <= 0.0) {
    cc = [](double) { return Piece{0.0, 0.0}; };
  } else if (p >= b) {
    cc = secant(a, 0.0, b, sb);
  } else {
    const double sp = std::sqrt(p);
    const double slope = 0.5 / sp;
    cc = [=](double x) {
      if (x >= p) return Piece{std::sqrt(x), 0.5 / std::sqrt(x)};
      return Piece{sp + slope * (x - p), slope};
    };
  }
  return compose(g, out, cv, a, cc, b);
}

McValue mc_exp(const McValue& g, Interval out) {
  const double a = g.range.lo;
  const double b = g.range.hi;
  auto f = [](double x) {
    const double e = std::exp(x);
    return Piece{e, e};
  };
  return compose(g, out, f, a, secant(a, std::exp(a), b, std::exp(b)), b);
}

McValue mc_log(const McValue& g, Interval out) {
  const double a = g.range.lo;
  const double b = g.range.hi;
  if (b <= 0.0) fail(ErrorKind::numeric, "log of a nonpositive interval");
  auto f = [](double x) { return Piece{std::log(x), 1.0 / x}; };
  const UniFn sec = a > 0.0 ? secant(a, std::log(a), b, std::log(b))
                            : UniFn([](double) { return Piece{-std::numeric_limits<double>::infinity(), 0.0}; });
  return compose(g, out, sec, a, f, b);
}

McValue mc_tanh(const McValue& g, Interval out) {
  return sshape_relax(g, out, SShape{tanh_f, tanh_d1, tanh_d2});
}

McValue mc_erf(const McValue& g, Interval out) {
  return sshape_relax(g, out, SShape{erf_f, erf_d1, erf_d2});
}

McValue mc_max0(const McValue& g, Interval out) {
  const double a = g.range.lo;
  const double b = g.range.hi;
  auto f = [](double x) { return x > 0.0 ? Piece{x, 1.0} : Piece{0.0, 0.0}; };
  return compose(g, out, f, a, secant(a, std::max(a, 0.0), b, std::max(b, 0.0)), b);
}

McValue se_kernel_relax(const McValue& u) {
  const double a = u.range.lo;
  const double b = u.range.hi;
  if (a < 0.0) fail(ErrorKind::domain, "se_kernel_relax: negative squared distance bound");
  const Interval out(std::exp(-0.5 * b), std::exp(-0.5 * a));
  auto f = [](double x) {
    const double e = std::exp(-0.5 * x);
    return Piece{e, -0.5 * e};
  };
  return compose(u, out, f, b, secant(a, std::exp(-0.5 * a), b, std::exp(-0.5 * b)), a);
}

McValue se_kernel_relax_generic(std::span<const McValue> offsets, std::span<const double> weights) {
  std::vector<McValue> squares;
  squares.reserve(offsets.size());
  std::vector<const McValue*> ptrs;
  Interval urange = Interval::point(0.0);
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    const Interval sq = sqr(offsets[k].range);
    squares.push_back(mc_square(offsets[k], sq));
    urange = urange + weights[k] * sq;
  }
  for (const auto& s : squares) ptrs.push_back(&s);
  const McValue u = mc_affine(ptrs, weights, 0.0, urange);
  return se_kernel_relax(u);
}

McValue se_kernel_relax_tailored(std::span<const McValue> offsets, std::span<const double> weights) {
  McValue best = se_kernel_relax_generic(offsets, weights);
  McValue product;
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    const McValue& d = offsets[k];
    const double w = weights[k];
    McValue factor;
    if (w == 0.0) {
      factor = McValue::constant(1.0, d.cvsub.size());
    } else {
      const Bump bm{w};
      const double a = d.range.lo;
      const double b = d.range.hi;
      const Interval fr(std::exp(-0.5 * w * std::max(a * a, b * b)),
                        (a <= 0.0 && b >= 0.0) ? 1.0 : std::max(bm.f(a), bm.f(b)));
      UniFn ccfn;
      double xmax = 0.0;
      bump_cc(bm, a, b, ccfn, xmax);
      UniFn cvfn;
      double xmin = 0.0;
      if (!bump_cv(bm, a, b, cvfn, xmin)) {
        // Only the flat lower bound of the factor is available.
        const double lo = fr.lo;
        cvfn = [lo](double) { return Piece{lo, 0.0}; };
        xmin = a;
      }
      factor = compose(d, fr, cvfn, xmin, ccfn, xmax);
    }
    if (factor.cc < best.cc) {
      best.cc = factor.cc;
      best.ccsub = factor.ccsub;
    }
    if (k == 0) {
      product = factor;
    } else {
      product = mc_mul(product, factor, product.range * factor.range);
    }
  }
  if (!offsets.empty()) best = max_of(best, product);
  return finish(std::move(best));
}

McValue mc_apply(const ExprNode& n, std::span<const McValue> v, Interval out, bool tailored_kernel) {
  auto A = [&]() -> const McValue& { return v[static_cast<std::size_t>(n.a)]; };
  auto B = [&]() -> const McValue& { return v[static_cast<std::size_t>(n.b)]; };
  switch (n.op) {
    case Op::constant: {
      const std::size_t dim = v.empty() ? 0 : v[0].cvsub.size();
      return McValue::constant(n.value, dim);
    }
    case Op::variable: fail(ErrorKind::internal, "mc_apply: variables are seeded by the caller");
    case Op::negate: return mc_negate(A(), out);
    case Op::add: return mc_add(A(), B(), out);
    case Op::subtract: return mc_sub(A(), B(), out);
    case Op::multiply: return mc_mul(A(), B(), out);
    case Op::divide: return mc_div(A(), B(), out);
    case Op::square: return mc_square(A(), out);
    case Op::sqrt: return mc_sqrt(A(), out);
    case Op::exp: return mc_exp(A(), out);
    case Op::log: return mc_log(A(), out);
    case Op::tanh: return mc_tanh(A(), out);
    case Op::erf: return mc_erf(A(), out);
    case Op::max0: return mc_max0(A(), out);
    case Op::affine: {
      std::vector<const McValue*> terms;
      terms.reserve(n.terms.size());
      for (auto t : n.terms) terms.push_back(&v[static_cast<std::size_t>(t)]);
      return mc_affine(terms, n.weights, n.value, out);
    }
    case Op::se_kernel: {
      std::vector<McValue> offsets;
      offsets.reserve(n.terms.size());
      for (std::size_t k = 0; k < n.terms.size(); ++k) {
        offsets.push_back(shifted(v[static_cast<std::size_t>(n.terms[k])], n.centers[k]));
      }
      McValue r = tailored_kernel ? se_kernel_relax_tailored(offsets, n.weights)
                                  : se_kernel_relax_generic(offsets, n.weights);
      r.range = intersect(r.range, out);
      return finish(std::move(r));
    }
  }
  fail(ErrorKind::internal, "mc_apply: unknown primitive");
}

}  // namespace mlembed
