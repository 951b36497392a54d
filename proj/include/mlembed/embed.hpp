#pragma once

#include <span>
#include <vector>

#include "mlembed/expr_graph.hpp"
#include "mlembed/model.hpp"

namespace mlembed {

/// How GP kernel entries appear in a graph: one fused se_kernel node per
/// training point, or the explicit difference/square/exp chain.
enum class KernelForm { fused, generic };

enum class Quantity {
  output,                // ANN outputs / GP mean
  gp_mean,
  gp_variance,
  expected_improvement,  // needs `incumbent`
};

struct EmbedOptions {
  Quantity quantity = Quantity::output;
  KernelForm kernel_form = KernelForm::fused;
  double incumbent = 0.0;       // best observed value for expected improvement
  double sigma_floor = 1e-6;    // standard-deviation floor for expected improvement
};

/// Appends the network to `g`; returns one node per network output.
std::vector<Expr> embed_ann(ExprGraph& g, const FeedForwardNetwork& net, std::span<const Expr> inputs);

/// k_i(x) = signal_variance * exp(-0.5 r_i^2(x)) for each training point.
std::vector<Expr> embed_gp_kernel_row(ExprGraph& g, const GaussianProcessModel& gp,
                                      std::span<const Expr> inputs, KernelForm form);

Expr embed_gp_mean(ExprGraph& g, const GaussianProcessModel& gp, std::span<const Expr> inputs,
                   KernelForm form = KernelForm::fused);

/// signal_variance - |L^-1 k(x)|^2 with the triangular solve unrolled into
/// affine nodes.
Expr embed_gp_variance(ExprGraph& g, const GaussianProcessModel& gp, std::span<const Expr> inputs,
                       KernelForm form = KernelForm::fused);

/// (f* - mu) Phi(z) + sigma phi(z), z = (f* - mu) / sigma,
/// sigma = sqrt(max(variance, floor^2)).
Expr embed_expected_improvement(ExprGraph& g, const GaussianProcessModel& gp,
                                std::span<const Expr> inputs, double incumbent,
                                double sigma_floor = 1e-6, KernelForm form = KernelForm::fused);

/// Reduced-space graph of a model over `box` (num_vars = box.size()); model
/// input j is decision variable wiring[j]. Tree ensembles and convex region
/// surrogates are rejected.
ExprGraph embed_reduced_space(const TrainedModel& model, std::span<const std::size_t> wiring,
                              const Box& box, const EmbedOptions& options = {});

/// Reduced-space graph over the model's own input box with identity wiring.
ExprGraph embed_reduced_space(const TrainedModel& model, const EmbedOptions& options = {});

/// rho * softmin_i(d_i) with d_i = sum_j weights_j (x_j - data_ij)^2 and
/// softmin(d) = -tau * log(sum_i exp(-d_i / tau)).
Expr embed_distance_penalty(ExprGraph& g, const Dataset& data, std::span<const Expr> inputs,
                            double rho, double tau, std::span<const double> weights);

}  // namespace mlembed
