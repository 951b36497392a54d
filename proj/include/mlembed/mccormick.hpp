#pragma once

#include <span>
#include <vector>

#include "mlembed/interval.hpp"

namespace mlembed {

/// Convex underestimate / concave overestimate pair at one reference point,
/// with subgradients with respect to the graph variables and the enclosing
/// interval.
struct McValue {
  double cv = 0.0;
  double cc = 0.0;
  std::vector<double> cvsub;
  std::vector<double> ccsub;
  Interval range;

  static McValue constant(double v, std::size_t n);
  static McValue variable(double at, std::size_t index, Interval range, std::size_t n);
};

// Each rule receives the interval of its result (usually from interval_apply)
// and ends with the cut against that interval.
McValue mc_negate(const McValue& a, Interval out);
McValue mc_add(const McValue& a, const McValue& b, Interval out);
McValue mc_sub(const McValue& a, const McValue& b, Interval out);
McValue mc_mul(const McValue& a, const McValue& b, Interval out);
McValue mc_recip(const McValue& a, Interval out);
McValue mc_div(const McValue& a, const McValue& b, Interval out);
McValue mc_square(const McValue& a, Interval out);
McValue mc_sqrt(const McValue& a, Interval out);
McValue mc_exp(const McValue& a, Interval out);
McValue mc_log(const McValue& a, Interval out);
McValue mc_tanh(const McValue& a, Interval out);
McValue mc_erf(const McValue& a, Interval out);
McValue mc_max0(const McValue& a, Interval out);
McValue mc_affine(std::span<const McValue* const> terms, std::span<const double> weights,
                  double offset, Interval out);

/// exp(-u/2) for u >= 0 (convex, decreasing in u). Throws on u.range.lo < 0.
McValue se_kernel_relax(const McValue& u);

/// exp(-1/2 * sum_k w_k d_k^2) given the McCormick values of the offsets d_k.
/// Intersects the composition through u = sum w d^2 with per-dimension
/// Gaussian-factor envelopes; never looser than the plain composition.
McValue se_kernel_relax_tailored(std::span<const McValue> offsets, std::span<const double> weights);

/// Composition-only variant (the u-chain through exp(-u/2)).
McValue se_kernel_relax_generic(std::span<const McValue> offsets, std::span<const double> weights);

/// Relaxation of one graph node; `values` is indexed by node id. Variables
/// must be seeded by the caller.
McValue mc_apply(const ExprNode& node, std::span<const McValue> values, Interval out,
                 bool tailored_kernel = true);

}  // namespace mlembed
