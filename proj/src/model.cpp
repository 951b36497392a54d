#include "mlembed/model.hpp"

#include <cmath>
#include <limits>

#include "mlembed/error.hpp"
#include "mlembed/lp.hpp"

namespace mlembed {

namespace {

void check_dim(std::span<const double> x, std::size_t expected, const char* what) {
  if (x.size() != expected) {
    fail(ErrorKind::dimension, std::string(what) + ": expected input of dimension " +
                                   std::to_string(expected) + ", got " + std::to_string(x.size()));
  }
}

double apply(Activation a, double v) {
  switch (a) {
    case Activation::identity: return v;
    case Activation::tanh: return std::tanh(v);
    case Activation::relu: return v > 0.0 ? v : 0.0;
  }
  return v;
}

}  // namespace

const char* to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
  }
  return "identity";
}

Activation parse_activation(const std::string& name) {
  if (name == "identity" || name == "linear") return Activation::identity;
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  fail(ErrorKind::parse, "unknown activation '" + name + "'");
}

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::ann: return "ann";
    case ModelKind::gp: return "gp";
    case ModelKind::tree_ensemble: return "tree_ensemble";
    case ModelKind::crs: return "crs";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------

std::size_t FeedForwardNetwork::input_dim() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weights.cols());
}

std::size_t FeedForwardNetwork::output_dim() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.back().weights.rows());
}

std::size_t FeedForwardNetwork::hidden_neurons() const {
  std::size_t count = 0;
  for (std::size_t k = 0; k + 1 < layers.size(); ++k) count += layers[k].weights.rows();
  return count;
}

void FeedForwardNetwork::validate() const {
  if (layers.empty()) fail(ErrorKind::validation, "network has no layers");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& L = layers[k];
    if (L.weights.rows() == 0 || L.weights.cols() == 0) {
      fail(ErrorKind::dimension, "layer " + std::to_string(k) + " has an empty weight matrix");
    }
    if (L.bias.size() != L.weights.rows()) {
      fail(ErrorKind::dimension, "layer " + std::to_string(k) + ": bias length " +
                                     std::to_string(L.bias.size()) + " != rows " +
                                     std::to_string(L.weights.rows()));
    }
    if (k > 0 && L.weights.cols() != layers[k - 1].weights.rows()) {
      fail(ErrorKind::dimension, "layer " + std::to_string(k) + ": weight columns " +
                                     std::to_string(L.weights.cols()) +
                                     " do not match previous layer width " +
                                     std::to_string(layers[k - 1].weights.rows()));
    }
    if (!L.weights.allFinite() || !L.bias.allFinite()) {
      fail(ErrorKind::validation, "layer " + std::to_string(k) + " has non-finite parameters");
    }
  }
  if (layers.back().activation != Activation::identity) {
    fail(ErrorKind::validation, "last layer activation must be identity");
  }
  if (input_box.size() != input_dim()) {
    fail(ErrorKind::dimension, "input box dimension does not match network input");
  }
  input_box.validate("network input box");
}

Eigen::VectorXd FeedForwardNetwork::evaluate(std::span<const double> x) const {
  check_dim(x, input_dim(), "eval_ann");
  Eigen::VectorXd z = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  for (const auto& L : layers) {
    Eigen::VectorXd a = L.weights * z + L.bias;
    for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = apply(L.activation, a[i]);
    z = std::move(a);
  }
  return z;
}

// ---------------------------------------------------------------------------

GaussianProcessModel::GaussianProcessModel(Eigen::MatrixXd inputs, Eigen::VectorXd targets,
                                           Eigen::VectorXd lengthscales, double signal_variance,
                                           double noise_variance, double prior_mean,
                                           Box input_box)
    : inputs_(std::move(inputs)),
      targets_(std::move(targets)),
      lengthscales_(std::move(lengthscales)),
      signal_variance_(signal_variance),
      noise_variance_(noise_variance),
      prior_mean_(prior_mean),
      input_box_(std::move(input_box)) {
  factorize();
}

double GaussianProcessModel::squared_distance(std::span<const double> a, std::size_t row) const {
  double r2 = 0.0;
  for (Eigen::Index j = 0; j < inputs_.cols(); ++j) {
    const double w = lengthscales_[j];
    const double diff = a[j] - inputs_(static_cast<Eigen::Index>(row), j);
    r2 += w * w * diff * diff;
  }
  return r2;
}

double GaussianProcessModel::kernel(std::span<const double> a, std::span<const double> b) const {
  double r2 = 0.0;
  for (Eigen::Index j = 0; j < lengthscales_.size(); ++j) {
    const double w = lengthscales_[j];
    const double diff = a[j] - b[j];
    r2 += w * w * diff * diff;
  }
  return signal_variance_ * std::exp(-0.5 * r2);
}

void GaussianProcessModel::factorize() {
  const Eigen::Index n = inputs_.rows();
  const Eigen::Index d = inputs_.cols();
  if (n < 1) fail(ErrorKind::validation, "GP needs at least one training point");
  if (targets_.size() != n) {
    fail(ErrorKind::dimension, "GP: " + std::to_string(n) + " inputs but " +
                                   std::to_string(targets_.size()) + " targets");
  }
  if (lengthscales_.size() != d) {
    fail(ErrorKind::dimension, "GP: lengthscale count does not match input dimension");
  }
  if (input_box_.size() != static_cast<std::size_t>(d)) {
    fail(ErrorKind::dimension, "GP: input box dimension does not match inputs");
  }
  input_box_.validate("GP input box");
  if (!inputs_.allFinite() || !targets_.allFinite()) {
    fail(ErrorKind::validation, "GP: non-finite training data");
  }
  for (Eigen::Index j = 0; j < d; ++j) {
    if (!(lengthscales_[j] > 0.0) || !std::isfinite(lengthscales_[j])) {
      fail(ErrorKind::validation, "GP: lengthscales must be positive and finite");
    }
  }
  if (!(signal_variance_ > 0.0) || !std::isfinite(signal_variance_)) {
    fail(ErrorKind::validation, "GP: signal variance must be positive");
  }
  if (!(noise_variance_ >= 0.0) || !std::isfinite(noise_variance_)) {
    fail(ErrorKind::validation, "GP: noise variance must be nonnegative");
  }
  if (!std::isfinite(prior_mean_)) fail(ErrorKind::validation, "GP: prior mean must be finite");

  // Exactly repeated inputs without noise make K structurally singular.
  if (noise_variance_ == 0.0) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index k = i + 1; k < n; ++k) {
        if (inputs_.row(i) == inputs_.row(k)) {
          fail(ErrorKind::validation, "kernel matrix singular: training inputs " +
                                          std::to_string(i) + " and " + std::to_string(k) +
                                          " coincide with zero noise variance");
        }
      }
    }
  }

  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k <= i; ++k) {
      const Eigen::VectorXd a = inputs_.row(i);
      const Eigen::VectorXd b = inputs_.row(k);
      const double v = kernel(std::span<const double>(a.data(), d), std::span<const double>(b.data(), d));
      K(i, k) = v;
      K(k, i) = v;
    }
    K(i, i) += noise_variance_;
  }

  jitter_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success) {
    jitter_ = 1e-10 * K.trace() / static_cast<double>(n);
    K.diagonal().array() += jitter_;
    llt.compute(K);
    if (llt.info() != Eigen::Success) {
      fail(ErrorKind::validation, "kernel matrix singular: Cholesky failed after jitter");
    }
  }
  chol_ = llt.matrixL();

  const Eigen::VectorXd rhs = targets_.array() - prior_mean_;
  alpha_ = llt.solve(rhs);
  for (int refine = 0; refine < 2; ++refine) {
    const Eigen::VectorXd r = rhs - K * alpha_;
    alpha_ += llt.solve(r);
  }
  const double scale = std::max(rhs.norm(), std::numeric_limits<double>::min());
  const double residual = (K * alpha_ - rhs).norm() / scale;
  if (!(residual <= 1e-8) && rhs.norm() > 0.0) {
    fail(ErrorKind::validation, "kernel matrix ill-conditioned: weight residual " +
                                    std::to_string(residual));
  }
}

GpPrediction GaussianProcessModel::predict(std::span<const double> x) const {
  check_dim(x, input_dim(), "eval_gp");
  const Eigen::Index n = inputs_.rows();
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k[i] = signal_variance_ * std::exp(-0.5 * squared_distance(x, static_cast<std::size_t>(i)));
  }
  GpPrediction p;
  p.mean = prior_mean_ + k.dot(alpha_);
  const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(k);
  double var = signal_variance_ - v.squaredNorm();
  if (var < -1e-8) {
    fail(ErrorKind::numeric, "eval_gp: posterior variance " + std::to_string(var) +
                                 " below -1e-8 (numerical breakdown)");
  }
  p.variance = var < 0.0 ? 0.0 : var;
  return p;
}

GaussianProcessModel GaussianProcessModel::with_data(Eigen::MatrixXd inputs,
                                                     Eigen::VectorXd targets) const {
  return GaussianProcessModel(std::move(inputs), std::move(targets), lengthscales_,
                              signal_variance_, noise_variance_, prior_mean_, input_box_);
}

// ---------------------------------------------------------------------------

int DecisionTree::leaf_index(std::span<const double> x) const {
  int node = 0;
  while (!nodes[static_cast<std::size_t>(node)].is_leaf()) {
    const TreeNode& n = nodes[static_cast<std::size_t>(node)];
    node = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return node;
}

void TreeEnsembleModel::validate() const {
  if (trees.empty()) fail(ErrorKind::validation, "tree ensemble has no trees");
  if (input_box.size() != input_dim) {
    fail(ErrorKind::dimension, "tree ensemble: input box dimension mismatch");
  }
  input_box.validate("tree ensemble input box");
  for (std::size_t t = 0; t < trees.size(); ++t) {
    const auto& nodes = trees[t].nodes;
    const std::string where = "invalid tree topology in tree " + std::to_string(t) + ": ";
    if (nodes.empty()) fail(ErrorKind::validation, where + "no nodes");
    const int count = static_cast<int>(nodes.size());
    std::vector<int> parents(nodes.size(), 0);
    for (int i = 0; i < count; ++i) {
      const TreeNode& n = nodes[static_cast<std::size_t>(i)];
      if (n.is_leaf()) {
        if (!std::isfinite(n.value)) fail(ErrorKind::validation, where + "non-finite leaf value");
        continue;
      }
      if (static_cast<std::size_t>(n.feature) >= input_dim) {
        fail(ErrorKind::validation, where + "feature index " + std::to_string(n.feature) +
                                        " out of range at node " + std::to_string(i));
      }
      if (!std::isfinite(n.threshold)) fail(ErrorKind::validation, where + "non-finite threshold");
      for (int child : {n.left, n.right}) {
        if (child < 0 || child >= count) {
          fail(ErrorKind::validation, where + "child index " + std::to_string(child) +
                                          " out of range at node " + std::to_string(i));
        }
        if (child == 0) fail(ErrorKind::validation, where + "edge into the root");
        ++parents[static_cast<std::size_t>(child)];
      }
    }
    for (int i = 1; i < count; ++i) {
      if (parents[static_cast<std::size_t>(i)] != 1) {
        fail(ErrorKind::validation, where + "node " + std::to_string(i) + " has " +
                                        std::to_string(parents[static_cast<std::size_t>(i)]) +
                                        " parents");
      }
    }
    // With one parent per non-root node, reachability from the root rules
    // out detached cycles.
    std::vector<char> seen(nodes.size(), 0);
    std::vector<int> stack{0};
    int visited = 0;
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      if (seen[static_cast<std::size_t>(i)]) fail(ErrorKind::validation, where + "cycle detected");
      seen[static_cast<std::size_t>(i)] = 1;
      ++visited;
      const TreeNode& n = nodes[static_cast<std::size_t>(i)];
      if (!n.is_leaf()) {
        stack.push_back(n.left);
        stack.push_back(n.right);
      }
    }
    if (visited != count) fail(ErrorKind::validation, where + "unreachable nodes");
  }
}

double TreeEnsembleModel::evaluate(std::span<const double> x) const {
  check_dim(x, input_dim, "eval_tree_ensemble");
  double sum = 0.0;
  for (const auto& tree : trees) {
    sum += tree.nodes[static_cast<std::size_t>(tree.leaf_index(x))].value;
  }
  return sum / static_cast<double>(trees.size());
}

// ---------------------------------------------------------------------------

bool ConvexRegion::contains(std::span<const double> x, double tol) const {
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::VectorXd slack = A * xv - d;
  return slack.size() == 0 || slack.maxCoeff() <= tol;
}

std::vector<std::string> ConvexRegionSurrogateModel::validate(std::size_t overlap_check_limit) {
  std::vector<std::string> warnings;
  if (regions.empty()) fail(ErrorKind::validation, "convex region surrogate has no regions");
  if (input_box.size() != input_dim) fail(ErrorKind::dimension, "CRS: input box dimension mismatch");
  input_box.validate("CRS input box");
  const auto n = static_cast<Eigen::Index>(input_dim);
  const double inf = std::numeric_limits<double>::infinity();

  for (std::size_t r = 0; r < regions.size(); ++r) {
    ConvexRegion& reg = regions[r];
    const std::string where = "CRS region " + std::to_string(r) + ": ";
    if (reg.A.cols() != n || reg.d.size() != reg.A.rows() || reg.c.size() != n) {
      fail(ErrorKind::dimension, where + "inconsistent A/d/c dimensions");
    }
    if (!reg.A.allFinite() || !reg.d.allFinite() || !reg.c.allFinite() || !std::isfinite(reg.e)) {
      fail(ErrorKind::validation, where + "non-finite coefficients");
    }
    LpModel lp;
    lp.A = reg.A;
    lp.sense.assign(static_cast<std::size_t>(reg.A.rows()), RowSense::le);
    lp.rhs = reg.d;
    lp.lower.assign(input_dim, -inf);
    lp.upper.assign(input_dim, inf);
    reg.bounds = Box(std::vector<double>(input_dim), std::vector<double>(input_dim));
    for (Eigen::Index j = 0; j < n; ++j) {
      for (double sign : {1.0, -1.0}) {
        lp.cost = Eigen::VectorXd::Zero(n);
        lp.cost[j] = sign;
        const LpSolution sol = solve_lp(lp);
        if (sol.status == LpStatus::infeasible) fail(ErrorKind::validation, where + "empty polytope");
        if (sol.status == LpStatus::unbounded) fail(ErrorKind::validation, where + "unbounded polytope");
        if (sol.status != LpStatus::optimal) fail(ErrorKind::numeric, where + "LP breakdown in validation");
        if (sign > 0) {
          reg.bounds.lower[static_cast<std::size_t>(j)] = sol.objective;
        } else {
          reg.bounds.upper[static_cast<std::size_t>(j)] = -sol.objective;
        }
      }
    }
  }

  if (regions.size() > overlap_check_limit) {
    warnings.push_back("CRS: " + std::to_string(regions.size()) +
                       " regions exceed the overlap-check limit; pairwise overlap not checked");
    return warnings;
  }
  // Interiors of r and s intersect iff some x keeps a positive margin t on
  // every normalized halfspace of both.
  for (std::size_t r = 0; r < regions.size(); ++r) {
    for (std::size_t s = r + 1; s < regions.size(); ++s) {
      const ConvexRegion& P = regions[r];
      const ConvexRegion& Q = regions[s];
      const Eigen::Index rows = P.A.rows() + Q.A.rows();
      LpModel lp;
      lp.A = Eigen::MatrixXd::Zero(rows, n + 1);
      lp.rhs.resize(rows);
      lp.A.topLeftCorner(P.A.rows(), n) = P.A;
      lp.A.bottomLeftCorner(Q.A.rows(), n) = Q.A;
      lp.rhs << P.d, Q.d;
      for (Eigen::Index i = 0; i < rows; ++i) {
        lp.A(i, n) = std::max(lp.A.row(i).head(n).norm(), 1e-300);
      }
      lp.sense.assign(static_cast<std::size_t>(rows), RowSense::le);
      lp.cost = Eigen::VectorXd::Zero(n + 1);
      lp.cost[n] = -1.0;
      lp.lower.assign(static_cast<std::size_t>(n + 1), -inf);
      lp.upper.assign(static_cast<std::size_t>(n + 1), inf);
      lp.lower[static_cast<std::size_t>(n)] = 0.0;
      lp.upper[static_cast<std::size_t>(n)] = 1.0;
      const LpSolution sol = solve_lp(lp);
      if (sol.status == LpStatus::optimal && -sol.objective > 1e-9) {
        warnings.push_back("CRS: regions " + std::to_string(r) + " and " + std::to_string(s) +
                           " have overlapping interiors; evaluation uses the lowest index");
      }
    }
  }
  return warnings;
}

std::optional<std::size_t> ConvexRegionSurrogateModel::region_of(std::span<const double> x) const {
  for (std::size_t r = 0; r < regions.size(); ++r) {
    if (regions[r].contains(x)) return r;
  }
  return std::nullopt;
}

double ConvexRegionSurrogateModel::evaluate(std::span<const double> x) const {
  check_dim(x, input_dim, "eval_crs");
  const auto r = region_of(x);
  if (!r) fail(ErrorKind::domain, "eval_crs: point lies in no region (out of domain)");
  const ConvexRegion& reg = regions[*r];
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  return reg.c.dot(xv) + reg.e;
}

// ---------------------------------------------------------------------------

std::size_t TrainedModel::input_dim() const {
  return std::visit(
      [](const auto& m) -> std::size_t {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, FeedForwardNetwork> || std::is_same_v<T, GaussianProcessModel>) {
          return m.input_dim();
        } else {
          return m.input_dim;
        }
      },
      model);
}

std::size_t TrainedModel::output_dim() const {
  if (const auto* net = std::get_if<FeedForwardNetwork>(&model)) return net->output_dim();
  return 1;
}

const Box& TrainedModel::input_box() const {
  return std::visit(
      [](const auto& m) -> const Box& {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GaussianProcessModel>) {
          return m.input_box();
        } else {
          return m.input_box;
        }
      },
      model);
}

std::vector<double> TrainedModel::evaluate(std::span<const double> x) const {
  switch (kind()) {
    case ModelKind::ann: {
      const Eigen::VectorXd y = std::get<FeedForwardNetwork>(model).evaluate(x);
      return {y.data(), y.data() + y.size()};
    }
    case ModelKind::gp: {
      const GpPrediction p = std::get<GaussianProcessModel>(model).predict(x);
      return {p.mean, p.variance};
    }
    case ModelKind::tree_ensemble:
      return {std::get<TreeEnsembleModel>(model).evaluate(x)};
    case ModelKind::crs:
      return {std::get<ConvexRegionSurrogateModel>(model).evaluate(x)};
  }
  return {};
}

void Dataset::validate() const {
  if (inputs.rows() < 1) fail(ErrorKind::validation, "dataset needs at least one point");
  if (!inputs.allFinite()) fail(ErrorKind::validation, "dataset has non-finite inputs");
  if (targets) {
    if (targets->rows() != inputs.rows()) fail(ErrorKind::dimension, "dataset target row count mismatch");
    if (!targets->allFinite()) fail(ErrorKind::validation, "dataset has non-finite targets");
  }
}

}  // namespace mlembed
