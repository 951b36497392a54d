#include "mlembed/expr_graph.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "mlembed/error.hpp"

namespace mlembed {

const char* to_string(Op op) {
  switch (op) {
    case Op::constant: return "constant";
    case Op::variable: return "variable";
    case Op::negate: return "negate";
    case Op::add: return "add";
    case Op::subtract: return "subtract";
    case Op::multiply: return "multiply";
    case Op::divide: return "divide";
    case Op::square: return "square";
    case Op::sqrt: return "sqrt";
    case Op::exp: return "exp";
    case Op::log: return "log";
    case Op::tanh: return "tanh";
    case Op::erf: return "erf";
    case Op::max0: return "max0";
    case Op::affine: return "affine";
    case Op::se_kernel: return "se_kernel";
  }
  return "?";
}

namespace {

double node_value(const ExprNode& n, const std::vector<double>& v, std::span<const double> x,
                  EvalFlags* flags) {
  auto A = [&] { return v[static_cast<std::size_t>(n.a)]; };
  auto B = [&] { return v[static_cast<std::size_t>(n.b)]; };
  switch (n.op) {
    case Op::constant: return n.value;
    case Op::variable: return x[static_cast<std::size_t>(n.var)];
    case Op::negate: return -A();
    case Op::add: return A() + B();
    case Op::subtract: return A() - B();
    case Op::multiply: return A() * B();
    case Op::divide: {
      const double den = B();
      if (den == 0.0) fail(ErrorKind::numeric, "division by zero in expression graph");
      return A() / den;
    }
    case Op::square: return A() * A();
    case Op::sqrt: {
      double arg = A();
      if (arg < 0.0) {
        if (flags) flags->sqrt_floored = true;
        arg = 0.0;
      }
      return std::sqrt(arg);
    }
    case Op::exp: return std::exp(A());
    case Op::log: return std::log(A());
    case Op::tanh: return std::tanh(A());
    case Op::erf: return std::erf(A());
    case Op::max0: return A() > 0.0 ? A() : 0.0;
    case Op::affine: {
      double s = n.value;
      for (std::size_t k = 0; k < n.terms.size(); ++k) {
        s += n.weights[k] * v[static_cast<std::size_t>(n.terms[k])];
      }
      return s;
    }
    case Op::se_kernel: {
      double u = 0.0;
      for (std::size_t k = 0; k < n.terms.size(); ++k) {
        const double diff = v[static_cast<std::size_t>(n.terms[k])] - n.centers[k];
        u += n.weights[k] * diff * diff;
      }
      return std::exp(-0.5 * u);
    }
  }
  return 0.0;
}

bool is_constant(const ExprNode& n) { return n.op == Op::constant; }

}  // namespace

ExprGraph::ExprGraph(std::size_t num_vars, Box box) : num_vars_(num_vars), box_(std::move(box)) {
  if (box_.size() != num_vars_) fail(ErrorKind::dimension, "ExprGraph: box dimension mismatch");
}

void ExprGraph::check(Expr e) const {
  if (e.id < 0 || static_cast<std::size_t>(e.id) >= nodes_.size()) {
    fail(ErrorKind::internal, "ExprGraph: operand does not reference an earlier node");
  }
}

Expr ExprGraph::push(ExprNode node) {
  nodes_.push_back(std::move(node));
  return Expr{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Expr ExprGraph::fold_or_push(ExprNode node) {
  bool all_const = true;
  if (node.a >= 0 && !is_constant(nodes_[static_cast<std::size_t>(node.a)])) all_const = false;
  if (node.b >= 0 && !is_constant(nodes_[static_cast<std::size_t>(node.b)])) all_const = false;
  for (auto t : node.terms) {
    if (!is_constant(nodes_[static_cast<std::size_t>(t)])) all_const = false;
  }
  if (!all_const) return push(std::move(node));
  std::vector<double> vals(nodes_.size(), 0.0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (is_constant(nodes_[i])) vals[i] = nodes_[i].value;
  }
  const double v = node_value(node, vals, {}, nullptr);
  if (!std::isfinite(v)) fail(ErrorKind::numeric, "non-finite constant while folding expression");
  return constant(v);
}

Expr ExprGraph::constant(double v) {
  if (!std::isfinite(v)) fail(ErrorKind::numeric, "non-finite graph constant");
  ExprNode n;
  n.op = Op::constant;
  n.value = v;
  return push(std::move(n));
}

Expr ExprGraph::variable(std::size_t index) {
  if (index >= num_vars_) fail(ErrorKind::dimension, "ExprGraph: variable index out of range");
  ExprNode n;
  n.op = Op::variable;
  n.var = static_cast<std::int32_t>(index);
  return push(std::move(n));
}

#define MLEMBED_UNARY(NAME, OP)  \
  Expr ExprGraph::NAME(Expr a) { \
    check(a);                    \
    ExprNode n;                  \
    n.op = OP;                   \
    n.a = a.id;                  \
    return fold_or_push(std::move(n)); \
  }

#define MLEMBED_BINARY(NAME, OP)         \
  Expr ExprGraph::NAME(Expr a, Expr b) { \
    check(a);                            \
    check(b);                            \
    ExprNode n;                          \
    n.op = OP;                           \
    n.a = a.id;                          \
    n.b = b.id;                          \
    return fold_or_push(std::move(n));   \
  }

MLEMBED_UNARY(negate, Op::negate)
MLEMBED_UNARY(square, Op::square)
MLEMBED_UNARY(sqrt, Op::sqrt)
MLEMBED_UNARY(exp, Op::exp)
MLEMBED_UNARY(log, Op::log)
MLEMBED_UNARY(tanh, Op::tanh)
MLEMBED_UNARY(erf, Op::erf)
MLEMBED_UNARY(max0, Op::max0)
MLEMBED_BINARY(add, Op::add)
MLEMBED_BINARY(subtract, Op::subtract)
MLEMBED_BINARY(multiply, Op::multiply)
MLEMBED_BINARY(divide, Op::divide)

#undef MLEMBED_UNARY
#undef MLEMBED_BINARY

Expr ExprGraph::affine(std::span<const Expr> terms, std::span<const double> weights, double offset) {
  if (terms.size() != weights.size()) fail(ErrorKind::dimension, "affine: terms/weights length mismatch");
  ExprNode n;
  n.op = Op::affine;
  n.value = offset;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    check(terms[k]);
    if (!std::isfinite(weights[k])) fail(ErrorKind::numeric, "affine: non-finite weight");
    const ExprNode& t = nodes_[static_cast<std::size_t>(terms[k].id)];
    if (t.op == Op::constant) {
      n.value += weights[k] * t.value;
    } else if (weights[k] != 0.0) {
      n.terms.push_back(terms[k].id);
      n.weights.push_back(weights[k]);
    }
  }
  if (n.terms.empty()) return constant(n.value);
  if (n.terms.size() == 1 && n.weights[0] == 1.0 && n.value == 0.0) return Expr{n.terms[0]};
  return push(std::move(n));
}

Expr ExprGraph::scale(Expr a, double factor, double offset) {
  const double w[1] = {factor};
  const Expr t[1] = {a};
  return affine(t, w, offset);
}

Expr ExprGraph::se_kernel(std::span<const Expr> inputs, std::span<const double> centers,
                          std::span<const double> weights) {
  if (inputs.size() != centers.size() || inputs.size() != weights.size() || inputs.empty()) {
    fail(ErrorKind::dimension, "se_kernel: inputs/centers/weights length mismatch");
  }
  ExprNode n;
  n.op = Op::se_kernel;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    check(inputs[k]);
    if (!(weights[k] >= 0.0) || !std::isfinite(weights[k]) || !std::isfinite(centers[k])) {
      fail(ErrorKind::numeric, "se_kernel: weights must be finite and nonnegative");
    }
    n.terms.push_back(inputs[k].id);
    n.centers.push_back(centers[k]);
    n.weights.push_back(weights[k]);
  }
  return fold_or_push(std::move(n));
}

void ExprGraph::add_output(Expr e) {
  check(e);
  outputs_.push_back(e);
}

void ExprGraph::set_outputs(std::vector<Expr> outs) {
  for (auto e : outs) check(e);
  outputs_ = std::move(outs);
}

std::vector<Expr> ExprGraph::import(const ExprGraph& other) {
  if (other.num_vars_ != num_vars_) fail(ErrorKind::dimension, "import: variable spaces differ");
  std::vector<std::int32_t> map(other.nodes_.size(), -1);
  for (std::size_t i = 0; i < other.nodes_.size(); ++i) {
    ExprNode n = other.nodes_[i];
    if (n.a >= 0) n.a = map[static_cast<std::size_t>(n.a)];
    if (n.b >= 0) n.b = map[static_cast<std::size_t>(n.b)];
    for (auto& t : n.terms) t = map[static_cast<std::size_t>(t)];
    map[i] = push(std::move(n)).id;
  }
  std::vector<Expr> outs;
  for (auto e : other.outputs_) outs.push_back(Expr{map[static_cast<std::size_t>(e.id)]});
  return outs;
}

ExprGraph ExprGraph::widened(const Box& box) const {
  if (box.size() < num_vars_) fail(ErrorKind::dimension, "widened: box smaller than variable space");
  ExprGraph g = *this;
  g.num_vars_ = box.size();
  g.box_ = box;
  return g;
}

std::vector<double> ExprGraph::evaluate(std::span<const double> x, std::vector<double>& scratch,
                                        EvalFlags* flags) const {
  if (x.size() != num_vars_) fail(ErrorKind::dimension, "eval_graph: point dimension mismatch");
  if (flags && !box_.contains(x, 1e-12)) flags->outside_box = true;
  scratch.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const double v = node_value(nodes_[i], scratch, x, flags);
    if (!std::isfinite(v)) {
      fail(ErrorKind::numeric, std::string("non-finite intermediate at node ") + std::to_string(i) +
                                   " (" + to_string(nodes_[i].op) + ")");
    }
    scratch[i] = v;
  }
  std::vector<double> out;
  out.reserve(outputs_.size());
  for (auto e : outputs_) out.push_back(scratch[static_cast<std::size_t>(e.id)]);
  return out;
}

std::vector<double> ExprGraph::evaluate(std::span<const double> x, EvalFlags* flags) const {
  std::vector<double> scratch;
  return evaluate(x, scratch, flags);
}

double ExprGraph::value(std::span<const double> x, std::size_t output) const {
  if (output >= outputs_.size()) fail(ErrorKind::dimension, "graph output index out of range");
  std::vector<double> scratch;
  evaluate(x, scratch);
  return scratch[static_cast<std::size_t>(outputs_[output].id)];
}

double ExprGraph::value_and_gradient(std::span<const double> x, std::vector<double>& grad,
                                     std::size_t output) const {
  if (output >= outputs_.size()) fail(ErrorKind::dimension, "graph output index out of range");
  std::vector<double> v;
  evaluate(x, v);
  const std::size_t n = num_vars_;
  std::vector<double> tan(nodes_.size() * n, 0.0);
  auto T = [&](std::int32_t id) { return tan.data() + static_cast<std::size_t>(id) * n; };
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const ExprNode& nd = nodes_[i];
    double* t = tan.data() + i * n;
    auto unary = [&](double d) {
      const double* ta = T(nd.a);
      for (std::size_t j = 0; j < n; ++j) t[j] = d * ta[j];
    };
    const double a = nd.a >= 0 ? v[static_cast<std::size_t>(nd.a)] : 0.0;
    const double b = nd.b >= 0 ? v[static_cast<std::size_t>(nd.b)] : 0.0;
    switch (nd.op) {
      case Op::constant: break;
      case Op::variable: t[static_cast<std::size_t>(nd.var)] = 1.0; break;
      case Op::negate: unary(-1.0); break;
      case Op::add:
      case Op::subtract: {
        const double s = nd.op == Op::add ? 1.0 : -1.0;
        const double* ta = T(nd.a);
        const double* tb = T(nd.b);
        for (std::size_t j = 0; j < n; ++j) t[j] = ta[j] + s * tb[j];
        break;
      }
      case Op::multiply: {
        const double* ta = T(nd.a);
        const double* tb = T(nd.b);
        for (std::size_t j = 0; j < n; ++j) t[j] = ta[j] * b + a * tb[j];
        break;
      }
      case Op::divide: {
        const double* ta = T(nd.a);
        const double* tb = T(nd.b);
        for (std::size_t j = 0; j < n; ++j) t[j] = (ta[j] * b - a * tb[j]) / (b * b);
        break;
      }
      case Op::square: unary(2.0 * a); break;
      case Op::sqrt: unary(a > 0.0 ? 0.5 / std::sqrt(a) : 0.0); break;
      case Op::exp: unary(v[i]); break;
      case Op::log: unary(1.0 / a); break;
      case Op::tanh: unary(1.0 - v[i] * v[i]); break;
      case Op::erf: unary(2.0 / std::sqrt(std::numbers::pi) * std::exp(-a * a)); break;
      case Op::max0: unary(a > 0.0 ? 1.0 : 0.0); break;
      case Op::affine:
        for (std::size_t k = 0; k < nd.terms.size(); ++k) {
          const double* tk = T(nd.terms[k]);
          for (std::size_t j = 0; j < n; ++j) t[j] += nd.weights[k] * tk[j];
        }
        break;
      case Op::se_kernel:
        for (std::size_t k = 0; k < nd.terms.size(); ++k) {
          const double diff = v[static_cast<std::size_t>(nd.terms[k])] - nd.centers[k];
          const double d = -v[i] * nd.weights[k] * diff;
          const double* tk = T(nd.terms[k]);
          for (std::size_t j = 0; j < n; ++j) t[j] += d * tk[j];
        }
        break;
    }
  }
  const std::size_t out = static_cast<std::size_t>(outputs_[output].id);
  grad.assign(tan.begin() + static_cast<std::ptrdiff_t>(out * n),
              tan.begin() + static_cast<std::ptrdiff_t>((out + 1) * n));
  return v[out];
}

std::vector<double> ExprGraph::gradient(std::span<const double> x, std::size_t output) const {
  std::vector<double> g;
  value_and_gradient(x, g, output);
  return g;
}

std::vector<bool> ExprGraph::used_variables() const {
  std::vector<bool> used(num_vars_, false);
  for (const auto& n : nodes_) {
    if (n.op == Op::variable) used[static_cast<std::size_t>(n.var)] = true;
  }
  return used;
}

std::vector<bool> ExprGraph::nonlinear_variables() const {
  const std::size_t n = num_vars_;
  std::vector<std::vector<bool>> deps(nodes_.size(), std::vector<bool>(n, false));
  std::vector<bool> result(n, false);
  auto merge_into = [&](std::vector<bool>& dst, std::int32_t src) {
    const auto& s = deps[static_cast<std::size_t>(src)];
    for (std::size_t j = 0; j < n; ++j) dst[j] = dst[j] || s[j];
  };
  auto mark = [&](std::int32_t src) {
    if (src < 0) return;
    const auto& s = deps[static_cast<std::size_t>(src)];
    for (std::size_t j = 0; j < n; ++j) result[j] = result[j] || s[j];
  };
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const ExprNode& nd = nodes_[i];
    if (nd.op == Op::variable) deps[i][static_cast<std::size_t>(nd.var)] = true;
    if (nd.a >= 0) merge_into(deps[i], nd.a);
    if (nd.b >= 0) merge_into(deps[i], nd.b);
    for (auto t : nd.terms) merge_into(deps[i], t);

    switch (nd.op) {
      case Op::constant:
      case Op::variable:
      case Op::negate:
      case Op::add:
      case Op::subtract:
      case Op::affine:
        break;
      case Op::multiply:
        if (!is_constant(nodes_[static_cast<std::size_t>(nd.a)]) &&
            !is_constant(nodes_[static_cast<std::size_t>(nd.b)])) {
          mark(nd.a);
          mark(nd.b);
        }
        break;
      case Op::divide:
        if (!is_constant(nodes_[static_cast<std::size_t>(nd.b)])) {
          mark(nd.a);
          mark(nd.b);
        }
        break;
      default:
        mark(nd.a);
        for (auto t : nd.terms) mark(t);
        break;
    }
  }
  return result;
}

std::string ExprGraph::to_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "graph vars=" << num_vars_ << " nodes=" << nodes_.size() << "\n";
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const ExprNode& n = nodes_[i];
    os << "n" << i << " = " << to_string(n.op);
    switch (n.op) {
      case Op::constant: os << " " << n.value; break;
      case Op::variable: os << " x" << n.var; break;
      case Op::affine:
        os << " " << n.value;
        for (std::size_t k = 0; k < n.terms.size(); ++k) os << " " << n.weights[k] << "*n" << n.terms[k];
        break;
      case Op::se_kernel:
        for (std::size_t k = 0; k < n.terms.size(); ++k) {
          os << " " << n.weights[k] << "*(n" << n.terms[k] << "-" << n.centers[k] << ")^2";
        }
        break;
      default:
        if (n.a >= 0) os << " n" << n.a;
        if (n.b >= 0) os << " n" << n.b;
        break;
    }
    os << "\n";
  }
  os << "outputs";
  for (auto e : outputs_) os << " n" << e.id;
  os << "\n";
  return os.str();
}

}  // namespace mlembed
