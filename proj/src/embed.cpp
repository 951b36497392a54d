#include "mlembed/embed.hpp"

#include <cmath>
#include <numbers>

#include "mlembed/error.hpp"

namespace mlembed {

namespace {

void check_inputs(std::span<const Expr> inputs, std::size_t dim, const char* what) {
  if (inputs.size() != dim) {
    fail(ErrorKind::dimension, std::string(what) + ": expected " + std::to_string(dim) +
                                   " inputs, got " + std::to_string(inputs.size()));
  }
}

// exp(-0.5 r_i^2(x)) per training point, without the signal variance.
std::vector<Expr> unit_kernels(ExprGraph& g, const GaussianProcessModel& gp, std::span<const Expr> inputs,
                               KernelForm form) {
  check_inputs(inputs, gp.input_dim(), "gp embedding");
  const std::size_t n = gp.input_dim();
  std::vector<double> w(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double l = gp.lengthscales()[static_cast<Eigen::Index>(j)];
    w[j] = l * l;
  }
  std::vector<Expr> out;
  out.reserve(gp.num_points());
  for (std::size_t i = 0; i < gp.num_points(); ++i) {
    std::vector<double> center(n);
    for (std::size_t j = 0; j < n; ++j) {
      center[j] = gp.inputs()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    if (form == KernelForm::fused) {
      out.push_back(g.se_kernel(inputs, center, w));
      continue;
    }
    std::vector<Expr> squares;
    std::vector<double> coef;
    for (std::size_t j = 0; j < n; ++j) {
      squares.push_back(g.square(g.scale(inputs[j], 1.0, -center[j])));
      coef.push_back(-0.5 * w[j]);
    }
    out.push_back(g.exp(g.affine(squares, coef, 0.0)));
  }
  return out;
}

Expr mean_from(ExprGraph& g, const GaussianProcessModel& gp, const std::vector<Expr>& k) {
  std::vector<double> w(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) {
    w[i] = gp.signal_variance() * gp.alpha()[static_cast<Eigen::Index>(i)];
  }
  return g.affine(k, w, gp.prior_mean());
}

Expr variance_from(ExprGraph& g, const GaussianProcessModel& gp, const std::vector<Expr>& k) {
  const Eigen::MatrixXd& L = gp.cholesky();
  const double sf2 = gp.signal_variance();
  std::vector<Expr> v;
  std::vector<Expr> squares;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    std::vector<Expr> terms{k[i]};
    std::vector<double> w{sf2 / L(ii, ii)};
    for (std::size_t j = 0; j < i; ++j) {
      terms.push_back(v[j]);
      w.push_back(-L(ii, static_cast<Eigen::Index>(j)) / L(ii, ii));
    }
    v.push_back(g.affine(terms, w, 0.0));
    squares.push_back(g.square(v.back()));
  }
  const std::vector<double> minus(squares.size(), -1.0);
  return g.affine(squares, minus, sf2);
}

}  // namespace

std::vector<Expr> embed_ann(ExprGraph& g, const FeedForwardNetwork& net, std::span<const Expr> inputs) {
  check_inputs(inputs, net.input_dim(), "ann embedding");
  std::vector<Expr> prev(inputs.begin(), inputs.end());
  std::vector<double> row;
  for (const auto& layer : net.layers) {
    std::vector<Expr> next;
    next.reserve(static_cast<std::size_t>(layer.weights.rows()));
    row.resize(static_cast<std::size_t>(layer.weights.cols()));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) row[static_cast<std::size_t>(c)] = layer.weights(r, c);
      const Expr pre = g.affine(prev, row, layer.bias[r]);
      switch (layer.activation) {
        case Activation::identity: next.push_back(pre); break;
        case Activation::tanh: next.push_back(g.tanh(pre)); break;
        case Activation::relu: next.push_back(g.max0(pre)); break;
      }
    }
    prev = std::move(next);
  }
  return prev;
}

std::vector<Expr> embed_gp_kernel_row(ExprGraph& g, const GaussianProcessModel& gp,
                                      std::span<const Expr> inputs, KernelForm form) {
  std::vector<Expr> k = unit_kernels(g, gp, inputs, form);
  for (auto& e : k) e = g.scale(e, gp.signal_variance());
  return k;
}

Expr embed_gp_mean(ExprGraph& g, const GaussianProcessModel& gp, std::span<const Expr> inputs,
                   KernelForm form) {
  return mean_from(g, gp, unit_kernels(g, gp, inputs, form));
}

Expr embed_gp_variance(ExprGraph& g, const GaussianProcessModel& gp, std::span<const Expr> inputs,
                       KernelForm form) {
  return variance_from(g, gp, unit_kernels(g, gp, inputs, form));
}

Expr embed_expected_improvement(ExprGraph& g, const GaussianProcessModel& gp,
                                std::span<const Expr> inputs, double incumbent, double sigma_floor,
                                KernelForm form) {
  if (!(sigma_floor > 0.0)) fail(ErrorKind::config, "expected improvement: sigma floor must be > 0");
  const std::vector<Expr> k = unit_kernels(g, gp, inputs, form);
  const Expr mu = mean_from(g, gp, k);
  const Expr var = variance_from(g, gp, k);
  const double eps2 = sigma_floor * sigma_floor;
  const Expr sigma = g.sqrt(g.scale(g.max0(g.scale(var, 1.0, -eps2)), 1.0, eps2));
  const Expr improvement = g.scale(mu, -1.0, incumbent);
  const Expr z = g.divide(improvement, sigma);
  const Expr cdf = g.scale(g.erf(g.scale(z, 1.0 / std::numbers::sqrt2)), 0.5, 0.5);
  const Expr pdf = g.scale(g.exp(g.scale(g.square(z), -0.5)), 1.0 / std::sqrt(2.0 * std::numbers::pi));
  return g.add(g.multiply(improvement, cdf), g.multiply(sigma, pdf));
}

ExprGraph embed_reduced_space(const TrainedModel& model, std::span<const std::size_t> wiring,
                              const Box& box, const EmbedOptions& options) {
  const std::size_t n = model.input_dim();
  if (wiring.size() != n) fail(ErrorKind::dimension, "embed_reduced_space: wiring length differs from model input dimension");
  ExprGraph g(box.size(), box);
  std::vector<Expr> inputs;
  for (auto w : wiring) inputs.push_back(g.variable(w));
  switch (model.kind()) {
    case ModelKind::ann: {
      if (options.quantity != Quantity::output) {
        fail(ErrorKind::unsupported, "embed_reduced_space: only the outputs of a network can be embedded");
      }
      for (auto e : embed_ann(g, std::get<FeedForwardNetwork>(model.model), inputs)) g.add_output(e);
      break;
    }
    case ModelKind::gp: {
      const auto& gp = std::get<GaussianProcessModel>(model.model);
      switch (options.quantity) {
        case Quantity::output:
        case Quantity::gp_mean: g.add_output(embed_gp_mean(g, gp, inputs, options.kernel_form)); break;
        case Quantity::gp_variance: g.add_output(embed_gp_variance(g, gp, inputs, options.kernel_form)); break;
        case Quantity::expected_improvement:
          g.add_output(embed_expected_improvement(g, gp, inputs, options.incumbent, options.sigma_floor,
                                                  options.kernel_form));
          break;
      }
      break;
    }
    case ModelKind::tree_ensemble:
    case ModelKind::crs:
      fail(ErrorKind::unsupported, "discontinuous model has no reduced-space graph");
  }
  return g;
}

ExprGraph embed_reduced_space(const TrainedModel& model, const EmbedOptions& options) {
  std::vector<std::size_t> wiring(model.input_dim());
  for (std::size_t j = 0; j < wiring.size(); ++j) wiring[j] = j;
  return embed_reduced_space(model, wiring, model.input_box(), options);
}

Expr embed_distance_penalty(ExprGraph& g, const Dataset& data, std::span<const Expr> inputs, double rho,
                            double tau, std::span<const double> weights) {
  data.validate();
  check_inputs(inputs, data.dim(), "distance penalty");
  if (weights.size() != data.dim()) fail(ErrorKind::dimension, "distance penalty: weights length");
  if (!(rho >= 0.0)) fail(ErrorKind::config, "distance penalty: rho must be >= 0");
  if (!(tau > 0.0)) fail(ErrorKind::config, "distance penalty: tau must be > 0");
  if (rho == 0.0) return g.constant(0.0);
  std::vector<double> w(weights.size());
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = 2.0 * weights[j] / tau;
  std::vector<Expr> terms;
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::vector<double> center(data.dim());
    for (std::size_t j = 0; j < data.dim(); ++j) {
      center[j] = data.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    terms.push_back(g.se_kernel(inputs, center, w));
  }
  const std::vector<double> ones(terms.size(), 1.0);
  // Tiny offset keeps the log finite once every term underflows.
  const Expr sum = g.affine(terms, ones, 1e-300);
  return g.scale(g.log(sum), -rho * tau);
}

}  // namespace mlembed
