#include "mlembed/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "mlembed/error.hpp"

namespace mlembed {

namespace {

// Equality tolerance of lifted nonlinear rows. Kept tight because output
// rows amplify kernel-row residuals by the GP weights.
constexpr double kGraphRowTol = 1e-9;

std::string idx(const char* prefix, std::size_t a) { return prefix + std::to_string(a); }
std::string idx(const char* prefix, std::size_t a, std::size_t b) {
  return prefix + std::to_string(a) + "_" + std::to_string(b);
}

std::vector<int> add_inputs(ProblemIR& ir, const Box& box) {
  std::vector<int> xs;
  for (std::size_t j = 0; j < box.size(); ++j) {
    xs.push_back(ir.add_variable(idx("x", j), box.lower[j], box.upper[j]));
  }
  ir.input_vars = xs;
  return xs;
}

void check_box(const Box& box, std::size_t dim, const char* what) {
  if (box.size() != dim) fail(ErrorKind::dimension, std::string(what) + ": box dimension mismatch");
  box.validate(what, true);
  if (!box.is_finite()) fail(ErrorKind::validation, std::string(what) + ": input box must be finite");
}

Interval affine_interval(const Eigen::MatrixXd& W, Eigen::Index r, double bias, const std::vector<Interval>& in) {
  Interval s = Interval::point(bias);
  for (Eigen::Index c = 0; c < W.cols(); ++c) s = s + W(r, c) * in[static_cast<std::size_t>(c)];
  return s;
}

}  // namespace

BigMBounds compute_bigm_bounds(const FeedForwardNetwork& net, const Box& box) {
  check_box(box, net.input_dim(), "big-M bounds");
  BigMBounds b;
  std::vector<Interval> cur;
  for (std::size_t j = 0; j < box.size(); ++j) cur.emplace_back(box.lower[j], box.upper[j]);
  for (const auto& layer : net.layers) {
    std::vector<Interval> pre, post;
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      const Interval a = affine_interval(layer.weights, r, layer.bias[r], cur);
      pre.push_back(a);
      switch (layer.activation) {
        case Activation::identity: post.push_back(a); break;
        case Activation::tanh: post.push_back(tanh(a)); break;
        case Activation::relu: post.push_back(max0(a)); break;
      }
    }
    b.pre.push_back(pre);
    b.post.push_back(post);
    cur = std::move(post);
  }
  return b;
}

ProblemIR encode_relu_milp(const FeedForwardNetwork& net, const Box& box, std::size_t output) {
  net.validate();
  for (const auto& layer : net.layers) {
    if (layer.activation == Activation::tanh) {
      fail(ErrorKind::unsupported, "big-M MILP requires ReLU or identity layers; tanh layer present");
    }
  }
  if (output >= net.output_dim()) fail(ErrorKind::dimension, "encode_relu_milp: output index out of range");
  const BigMBounds bounds = compute_bigm_bounds(net, box);
  ProblemIR ir;
  std::vector<int> prev = add_inputs(ir, box);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const auto& layer = net.layers[l];
    const bool last = l + 1 == net.layers.size();
    std::vector<int> next;
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      const Interval a = bounds.pre[l][static_cast<std::size_t>(r)];
      const double lo = a.lo;
      const double hi = a.hi;
      // Row pieces of "z - W z_prev".
      auto with_pre = [&](int z, double zc) {
        std::vector<LinearTerm> t{{z, zc}};
        for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
          t.push_back({prev[static_cast<std::size_t>(c)], -layer.weights(r, c)});
        }
        return t;
      };
      const double b = layer.bias[r];
      const std::size_t ur = static_cast<std::size_t>(r);
      if (layer.activation == Activation::identity) {
        const int z = ir.add_variable(last ? idx("y", ur) : idx("h", l, ur), lo, hi);
        ir.add_row(with_pre(z, 1.0), RowSense::eq, b);
        next.push_back(z);
        continue;
      }
      if (hi <= 0.0) {
        next.push_back(ir.add_variable(idx("h", l, ur), 0.0, 0.0));
        continue;
      }
      if (lo >= 0.0) {
        const int z = ir.add_variable(idx("h", l, ur), lo, hi);
        ir.add_row(with_pre(z, 1.0), RowSense::eq, b);
        next.push_back(z);
        continue;
      }
      const int z = ir.add_variable(idx("h", l, ur), 0.0, hi);
      const int s = ir.add_binary(idx("s", l, ur));
      ir.add_row(with_pre(z, 1.0), RowSense::ge, b);
      auto upper = with_pre(z, 1.0);
      upper.push_back({s, -lo});
      ir.add_row(std::move(upper), RowSense::le, b - lo);
      ir.add_row({{z, 1.0}, {s, -hi}}, RowSense::le, 0.0);
      next.push_back(z);
    }
    prev = std::move(next);
  }
  ir.output_var = prev[output];
  ir.objective = {{ir.output_var, 1.0}};
  return ir;
}

ProblemIR encode_tree_milp(const TreeEnsembleModel& ens, const Box& box) {
  ens.validate();
  check_box(box, ens.input_dim, "encode_tree_milp");
  ProblemIR ir;
  const std::vector<int> xs = add_inputs(ir, box);

  // Distinct splits per feature, sorted by threshold.
  std::map<std::pair<int, double>, int> split_var;  // -1 forced left, -2 forced right
  for (const auto& tree : ens.trees) {
    for (const auto& node : tree.nodes) {
      if (!node.is_leaf()) split_var.emplace(std::make_pair(node.feature, node.threshold), 0);
    }
  }
  int prev_feature = -1;
  int prev_var = -1;
  for (auto& [key, var] : split_var) {
    const auto [f, c] = key;
    const auto fu = static_cast<std::size_t>(f);
    const double L = box.lower[fu];
    const double U = box.upper[fu];
    if (c >= U || c < L) {
      var = c >= U ? -1 : -2;
      if (c > U || c < L) {
        std::ostringstream os;
        os.precision(17);
        os << "split x" << f << " <= " << c << " lies outside the box [" << L << ", " << U
           << "]; branch forced " << (var == -1 ? "left" : "right");
        ir.warnings.push_back(os.str());
      }
      continue;
    }
    const double eps = 1e-6 * (U - L);
    const int s = ir.add_binary("t" + std::to_string(f) + "_" + std::to_string(ir.num_vars()));
    ir.add_row({{xs[fu], 1.0}, {s, U - c}}, RowSense::le, U);
    ir.add_row({{xs[fu], 1.0}, {s, c + eps - L}}, RowSense::ge, c + eps);
    if (prev_feature == f && prev_var >= 0) ir.add_row({{prev_var, 1.0}, {s, -1.0}}, RowSense::le, 0.0);
    prev_feature = f;
    prev_var = s;
    var = s;
  }

  const double inv_t = 1.0 / static_cast<double>(ens.trees.size());
  std::vector<LinearTerm> out_terms;
  double ylo = 0.0;
  double yhi = 0.0;
  for (std::size_t t = 0; t < ens.trees.size(); ++t) {
    const auto& nodes = ens.trees[t].nodes;
    struct Step {
      int split_var;
      bool left;
    };
    std::vector<LinearTerm> pick;
    double vmin = std::numeric_limits<double>::infinity();
    double vmax = -vmin;
    // Depth-first walk carrying the path.
    std::vector<std::pair<int, std::vector<Step>>> stack{{0, {}}};
    while (!stack.empty()) {
      auto [id, path] = std::move(stack.back());
      stack.pop_back();
      const TreeNode& node = nodes[static_cast<std::size_t>(id)];
      if (node.is_leaf()) {
        bool possible = true;
        for (const auto& st : path) {
          if ((st.split_var == -1 && !st.left) || (st.split_var == -2 && st.left)) possible = false;
        }
        const int l = ir.add_variable(idx("l", t, static_cast<std::size_t>(id)), 0.0, possible ? 1.0 : 0.0,
                                      VarType::binary);
        for (const auto& st : path) {
          if (st.split_var < 0) continue;
          if (st.left) {
            ir.add_row({{l, 1.0}, {st.split_var, -1.0}}, RowSense::le, 0.0);
          } else {
            ir.add_row({{l, 1.0}, {st.split_var, 1.0}}, RowSense::le, 1.0);
          }
        }
        pick.push_back({l, 1.0});
        out_terms.push_back({l, -inv_t * node.value});
        if (possible) {
          vmin = std::min(vmin, node.value);
          vmax = std::max(vmax, node.value);
        }
        continue;
      }
      const int sv = split_var.at({node.feature, node.threshold});
      auto right = path;
      right.push_back({sv, false});
      path.push_back({sv, true});
      stack.emplace_back(node.right, std::move(right));
      stack.emplace_back(node.left, std::move(path));
    }
    ir.add_row(std::move(pick), RowSense::eq, 1.0);
    ylo += inv_t * vmin;
    yhi += inv_t * vmax;
  }
  const double slack = 1e-9 * (1.0 + std::max(std::abs(ylo), std::abs(yhi)));
  const int y = ir.add_variable("y0", ylo - slack, yhi + slack);
  out_terms.insert(out_terms.begin(), {y, 1.0});
  ir.add_row(std::move(out_terms), RowSense::eq, 0.0);
  ir.output_var = y;
  ir.objective = {{y, 1.0}};
  return ir;
}

ProblemIR encode_crs_milp(const ConvexRegionSurrogateModel& crs) {
  if (crs.regions.empty()) fail(ErrorKind::validation, "convex region surrogate has no regions");
  const std::size_t n = crs.input_dim;
  Box hull_box(std::vector<double>(n, std::numeric_limits<double>::infinity()),
               std::vector<double>(n, -std::numeric_limits<double>::infinity()));
  for (const auto& r : crs.regions) {
    if (r.bounds.size() != n) fail(ErrorKind::validation, "convex region bounds missing; validate the model first");
    for (std::size_t j = 0; j < n; ++j) {
      hull_box.lower[j] = std::min(hull_box.lower[j], r.bounds.lower[j]);
      hull_box.upper[j] = std::max(hull_box.upper[j], r.bounds.upper[j]);
    }
  }
  Box xbox = hull_box;
  if (crs.input_box.size() == n) {
    for (std::size_t j = 0; j < n; ++j) {
      xbox.lower[j] = std::max(xbox.lower[j], crs.input_box.lower[j]);
      xbox.upper[j] = std::min(xbox.upper[j], crs.input_box.upper[j]);
      if (xbox.lower[j] > xbox.upper[j]) fail(ErrorKind::validation, "input box misses every region");
    }
  }
  ProblemIR ir;
  const std::vector<int> xs = add_inputs(ir, xbox);
  std::vector<LinearTerm> pick;
  std::vector<std::vector<LinearTerm>> link(n);
  for (std::size_t j = 0; j < n; ++j) link[j].push_back({xs[j], 1.0});
  std::vector<LinearTerm> out;
  double ylo = std::numeric_limits<double>::infinity();
  double yhi = -ylo;
  for (std::size_t r = 0; r < crs.regions.size(); ++r) {
    const ConvexRegion& reg = crs.regions[r];
    const int beta = ir.add_binary(idx("b", r));
    pick.push_back({beta, 1.0});
    std::vector<int> copy;
    Interval val = Interval::point(reg.e);
    for (std::size_t j = 0; j < n; ++j) {
      const double L = reg.bounds.lower[j];
      const double U = reg.bounds.upper[j];
      const int v = ir.add_variable(idx("u", r, j), std::min(0.0, L), std::max(0.0, U));
      ir.add_row({{v, 1.0}, {beta, -U}}, RowSense::le, 0.0);
      ir.add_row({{v, 1.0}, {beta, -L}}, RowSense::ge, 0.0);
      link[j].push_back({v, -1.0});
      copy.push_back(v);
      const double cj = reg.c[static_cast<Eigen::Index>(j)];
      if (cj != 0.0) out.push_back({v, -cj});
      val = val + cj * Interval(L, U);
    }
    if (reg.e != 0.0) out.push_back({beta, -reg.e});
    for (Eigen::Index h = 0; h < reg.A.rows(); ++h) {
      std::vector<LinearTerm> row;
      for (std::size_t j = 0; j < n; ++j) row.push_back({copy[j], reg.A(h, static_cast<Eigen::Index>(j))});
      row.push_back({beta, -reg.d[h]});
      ir.add_row(std::move(row), RowSense::le, 0.0);
    }
    ylo = std::min(ylo, val.lo);
    yhi = std::max(yhi, val.hi);
  }
  ir.add_row(std::move(pick), RowSense::eq, 1.0);
  for (auto& row : link) ir.add_row(std::move(row), RowSense::eq, 0.0);
  const double slack = 1e-9 * (1.0 + std::max(std::abs(ylo), std::abs(yhi)));
  const int y = ir.add_variable("y0", ylo - slack, yhi + slack);
  out.insert(out.begin(), {y, 1.0});
  ir.add_row(std::move(out), RowSense::eq, 0.0);
  ir.output_var = y;
  ir.objective = {{y, 1.0}};
  return ir;
}

namespace {

ProblemIR fullspace_ann(const FeedForwardNetwork& net, const Box& box, std::size_t output) {
  net.validate();
  for (const auto& layer : net.layers) {
    if (layer.activation == Activation::relu) {
      fail(ErrorKind::unsupported, "ReLU layers are encoded by the MILP path, not the full-space NLP");
    }
  }
  if (output >= net.output_dim()) fail(ErrorKind::dimension, "encode_fullspace_nlp: output index out of range");
  const BigMBounds bounds = compute_bigm_bounds(net, box);
  ProblemIR ir;
  std::vector<std::vector<int>> vars{add_inputs(ir, box)};
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const bool last = l + 1 == net.layers.size();
    std::vector<int> layer_vars;
    for (std::size_t r = 0; r < bounds.post[l].size(); ++r) {
      const Interval iv = bounds.post[l][r];
      layer_vars.push_back(ir.add_variable(last ? idx("y", r) : idx("h", l, r), iv.lo, iv.hi));
    }
    vars.push_back(std::move(layer_vars));
  }
  const Box all = ir.box();
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const auto& layer = net.layers[l];
    const auto& in = vars[l];
    const auto& out = vars[l + 1];
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      const int z = out[static_cast<std::size_t>(r)];
      if (layer.activation == Activation::identity) {
        std::vector<LinearTerm> row{{z, 1.0}};
        for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
          row.push_back({in[static_cast<std::size_t>(c)], -layer.weights(r, c)});
        }
        ir.add_row(std::move(row), RowSense::eq, layer.bias[r]);
        continue;
      }
      ExprGraph g(all.size(), all);
      std::vector<Expr> prev;
      for (int v : in) prev.push_back(g.variable(static_cast<std::size_t>(v)));
      std::vector<double> w(static_cast<std::size_t>(layer.weights.cols()));
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) w[static_cast<std::size_t>(c)] = layer.weights(r, c);
      const Expr act = g.tanh(g.affine(prev, w, layer.bias[r]));
      const Expr zv = g.variable(static_cast<std::size_t>(z));
      const Expr terms[2] = {zv, act};
      const double coef[2] = {1.0, -1.0};
      g.add_output(g.affine(terms, coef, 0.0));
      ir.nonlinear.push_back(GraphConstraint{std::move(g), RowSense::eq, 0.0, kGraphRowTol});
    }
  }
  ir.output_var = vars.back()[output];
  ir.objective = {{ir.output_var, 1.0}};
  return ir;
}

ProblemIR fullspace_gp(const GaussianProcessModel& gp, const Box& box, Quantity quantity) {
  const std::size_t n = gp.input_dim();
  const std::size_t N = gp.num_points();
  const double sf2 = gp.signal_variance();
  ProblemIR ir;
  const std::vector<int> xs = add_inputs(ir, box);
  std::vector<Interval> kiv;
  std::vector<int> ks;
  for (std::size_t i = 0; i < N; ++i) {
    Interval u = Interval::point(0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double w = gp.lengthscales()[static_cast<Eigen::Index>(j)];
      const double c = gp.inputs()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      u = u + (w * w) * sqr(Interval(box.lower[j] - c, box.upper[j] - c));
    }
    const Interval k(sf2 * std::exp(-0.5 * u.hi), sf2 * std::exp(-0.5 * u.lo));
    kiv.push_back(k);
    ks.push_back(ir.add_variable(idx("k", i), k.lo, k.hi));
  }
  int y = -1;
  std::vector<int> vs;
  if (quantity == Quantity::gp_variance) {
    const Eigen::MatrixXd& L = gp.cholesky();
    std::vector<Interval> viv;
    for (std::size_t i = 0; i < N; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      Interval s = kiv[i];
      for (std::size_t j = 0; j < i; ++j) s = s - L(ii, static_cast<Eigen::Index>(j)) * viv[j];
      s = (1.0 / L(ii, ii)) * s;
      viv.push_back(s);
      vs.push_back(ir.add_variable(idx("v", i), s.lo, s.hi));
    }
    Interval var = Interval::point(sf2);
    for (const auto& v : viv) var = var - sqr(v);
    y = ir.add_variable("y0", std::max(var.lo, -1e-9), std::min(var.hi, sf2) + 1e-12);
    for (std::size_t i = 0; i < N; ++i) {
      std::vector<LinearTerm> row{{ks[i], -1.0}};
      for (std::size_t j = 0; j <= i; ++j) {
        row.push_back({vs[j], L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
      }
      ir.add_row(std::move(row), RowSense::eq, 0.0);
    }
  } else {
    Interval m = Interval::point(gp.prior_mean());
    std::vector<LinearTerm> row;
    for (std::size_t i = 0; i < N; ++i) {
      const double a = gp.alpha()[static_cast<Eigen::Index>(i)];
      m = m + a * kiv[i];
      row.push_back({ks[i], -a});
    }
    const double slack = 1e-9 * (1.0 + std::max(std::abs(m.lo), std::abs(m.hi)));
    y = ir.add_variable("y0", m.lo - slack, m.hi + slack);
    row.insert(row.begin(), {y, 1.0});
    ir.add_row(std::move(row), RowSense::eq, gp.prior_mean());
  }
  const Box all = ir.box();
  std::vector<double> w(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double l = gp.lengthscales()[static_cast<Eigen::Index>(j)];
    w[j] = l * l;
  }
  for (std::size_t i = 0; i < N; ++i) {
    ExprGraph g(all.size(), all);
    std::vector<Expr> in;
    for (int v : xs) in.push_back(g.variable(static_cast<std::size_t>(v)));
    std::vector<double> c(n);
    for (std::size_t j = 0; j < n; ++j) c[j] = gp.inputs()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    const Expr terms[2] = {g.variable(static_cast<std::size_t>(ks[i])), g.se_kernel(in, c, w)};
    const double coef[2] = {1.0, -sf2};
    g.add_output(g.affine(terms, coef, 0.0));
    ir.nonlinear.push_back(GraphConstraint{std::move(g), RowSense::eq, 0.0, kGraphRowTol});
  }
  if (quantity == Quantity::gp_variance) {
    ExprGraph g(all.size(), all);
    std::vector<Expr> terms{g.variable(static_cast<std::size_t>(y))};
    std::vector<double> coef{1.0};
    for (int v : vs) {
      terms.push_back(g.square(g.variable(static_cast<std::size_t>(v))));
      coef.push_back(1.0);
    }
    g.add_output(g.affine(terms, coef, 0.0));
    ir.nonlinear.push_back(GraphConstraint{std::move(g), RowSense::eq, sf2, kGraphRowTol});
  }
  ir.output_var = y;
  ir.objective = {{y, 1.0}};
  return ir;
}

}  // namespace

ProblemIR encode_fullspace_nlp(const TrainedModel& model, const Box& box, Quantity quantity,
                               std::size_t output) {
  check_box(box, model.input_dim(), "encode_fullspace_nlp");
  switch (model.kind()) {
    case ModelKind::ann:
      if (quantity != Quantity::output) fail(ErrorKind::unsupported, "network models only expose their outputs");
      return fullspace_ann(std::get<FeedForwardNetwork>(model.model), box, output);
    case ModelKind::gp:
      if (quantity == Quantity::expected_improvement) {
        fail(ErrorKind::unsupported, "expected improvement has no full-space encoding");
      }
      return fullspace_gp(std::get<GaussianProcessModel>(model.model), box, quantity);
    default:
      fail(ErrorKind::unsupported, std::string("full-space NLP is not defined for ") + to_string(model.kind()) +
                                       " models; use the MILP encoding");
  }
}

ProblemIR encode_fullspace(const TrainedModel& model, const Box& box, Quantity quantity, std::size_t output) {
  switch (model.kind()) {
    case ModelKind::ann: {
      const auto& net = std::get<FeedForwardNetwork>(model.model);
      const bool relu = std::any_of(net.layers.begin(), net.layers.end(),
                                    [](const DenseLayer& l) { return l.activation == Activation::relu; });
      const bool tanh_layer = std::any_of(net.layers.begin(), net.layers.end(),
                                          [](const DenseLayer& l) { return l.activation == Activation::tanh; });
      if (relu && tanh_layer) fail(ErrorKind::unsupported, "networks mixing ReLU and tanh layers have no full-space encoding");
      if (!tanh_layer) return encode_relu_milp(net, box, output);
      return encode_fullspace_nlp(model, box, quantity, output);
    }
    case ModelKind::gp: return encode_fullspace_nlp(model, box, quantity, output);
    case ModelKind::tree_ensemble: return encode_tree_milp(std::get<TreeEnsembleModel>(model.model), box);
    case ModelKind::crs: {
      ConvexRegionSurrogateModel crs = std::get<ConvexRegionSurrogateModel>(model.model);
      crs.input_box = box;
      return encode_crs_milp(crs);
    }
  }
  fail(ErrorKind::internal, "encode_fullspace: unknown model kind");
}

std::vector<LinearConstraint> hull_validity_rows(const Dataset& data, std::span<const int> x_vars,
                                                 int first_lambda) {
  data.validate();
  if (x_vars.size() != data.dim()) fail(ErrorKind::dimension, "hull validity: variable count differs from data dimension");
  std::vector<LinearConstraint> rows;
  LinearConstraint sum{{}, RowSense::eq, 1.0};
  for (std::size_t i = 0; i < data.size(); ++i) sum.terms.push_back({first_lambda + static_cast<int>(i), 1.0});
  rows.push_back(std::move(sum));
  for (std::size_t j = 0; j < data.dim(); ++j) {
    LinearConstraint row{{{x_vars[j], 1.0}}, RowSense::eq, 0.0};
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double v = data.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (v != 0.0) row.terms.push_back({first_lambda + static_cast<int>(i), -v});
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<int> encode_hull_validity(ProblemIR& ir, const Dataset& data, std::span<const int> x_vars) {
  data.validate();
  const int first = static_cast<int>(ir.num_vars());
  std::vector<int> lambdas;
  for (std::size_t i = 0; i < data.size(); ++i) lambdas.push_back(ir.add_variable(idx("w", i), 0.0, 1.0));
  for (auto& row : hull_validity_rows(data, x_vars, first)) ir.linear.push_back(std::move(row));
  return lambdas;
}

std::vector<int> encode_hull_validity(HybridProblem& problem, const Dataset& data, std::span<const int> x_vars) {
  data.validate();
  const int first = static_cast<int>(problem.box.size());
  std::vector<int> lambdas;
  for (std::size_t i = 0; i < data.size(); ++i) {
    problem.box.lower.push_back(0.0);
    problem.box.upper.push_back(1.0);
    lambdas.push_back(first + static_cast<int>(i));
  }
  problem.objective = problem.objective.widened(problem.box);
  for (auto& c : problem.constraints) c.graph = c.graph.widened(problem.box);
  for (auto& row : hull_validity_rows(data, x_vars, first)) problem.linear.push_back(std::move(row));
  return lambdas;
}

void encode_distance_penalty(HybridProblem& problem, const Dataset& data, std::span<const int> x_vars,
                             double rho, double tau, std::span<const double> weights) {
  if (rho == 0.0) return;
  ExprGraph& g = problem.objective;
  std::vector<Expr> in;
  for (int v : x_vars) in.push_back(g.variable(static_cast<std::size_t>(v)));
  const Expr pen = embed_distance_penalty(g, data, in, rho, tau, weights);
  g.set_outputs({g.add(g.outputs().at(0), pen)});
}

std::vector<double> complete_fullspace(const ProblemIR& ir, std::span<const double> x) {
  return complete_equalities(ir, ir.input_vars, x);
}

}  // namespace mlembed
