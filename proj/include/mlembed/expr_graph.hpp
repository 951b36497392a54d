#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mlembed/box.hpp"

namespace mlembed {

enum class Op : std::uint8_t {
  constant,
  variable,
  negate,
  add,
  subtract,
  multiply,
  divide,
  square,
  sqrt,
  exp,
  log,
  tanh,
  erf,
  max0,
  affine,     // offset + sum_k weights[k] * terms[k]
  se_kernel,  // exp(-0.5 * sum_k weights[k] * (terms[k] - centers[k])^2)
};

const char* to_string(Op op);

/// Handle to a node inside one ExprGraph.
struct Expr {
  std::int32_t id = -1;
  bool valid() const { return id >= 0; }
  friend bool operator==(Expr, Expr) = default;
};

struct ExprNode {
  Op op = Op::constant;
  std::int32_t a = -1;  // first operand
  std::int32_t b = -1;  // second operand
  double value = 0.0;   // constant value or affine offset
  std::int32_t var = -1;
  std::vector<std::int32_t> terms;
  std::vector<double> weights;
  std::vector<double> centers;
};

/// Flags raised by a sweep; evaluation still returns values.
struct EvalFlags {
  bool outside_box = false;
  bool sqrt_floored = false;
};

/// Directed acyclic computation graph over `num_vars` decision variables.
/// Nodes are stored in topological order (operands always precede their
/// users). Graphs are built through the member functions below and treated
/// as immutable afterwards.
class ExprGraph {
 public:
  ExprGraph() = default;
  ExprGraph(std::size_t num_vars, Box box);

  std::size_t num_vars() const { return num_vars_; }
  const Box& box() const { return box_; }
  const std::vector<ExprNode>& nodes() const { return nodes_; }
  const std::vector<Expr>& outputs() const { return outputs_; }
  std::size_t size() const { return nodes_.size(); }
  const ExprNode& node(Expr e) const { return nodes_[static_cast<std::size_t>(e.id)]; }

  // -- building ---------------------------------------------------------
  Expr constant(double v);
  Expr variable(std::size_t index);
  Expr negate(Expr a);
  Expr add(Expr a, Expr b);
  Expr subtract(Expr a, Expr b);
  Expr multiply(Expr a, Expr b);
  Expr divide(Expr a, Expr b);
  Expr square(Expr a);
  Expr sqrt(Expr a);
  Expr exp(Expr a);
  Expr log(Expr a);
  Expr tanh(Expr a);
  Expr erf(Expr a);
  Expr max0(Expr a);
  Expr affine(std::span<const Expr> terms, std::span<const double> weights, double offset);
  Expr scale(Expr a, double factor, double offset = 0.0);
  Expr se_kernel(std::span<const Expr> inputs, std::span<const double> centers,
                 std::span<const double> weights);

  void add_output(Expr e);
  void set_outputs(std::vector<Expr> outs);

  /// Appends all nodes of `other` (same variable space) and returns the
  /// images of its outputs in this graph.
  std::vector<Expr> import(const ExprGraph& other);

  /// Copy over a larger variable space; the first num_vars() variables keep
  /// their indices.
  ExprGraph widened(const Box& box) const;

  // -- evaluation ---------------------------------------------------------
  /// One topological sweep; `scratch` receives every node value.
  std::vector<double> evaluate(std::span<const double> x, std::vector<double>& scratch,
                               EvalFlags* flags = nullptr) const;
  std::vector<double> evaluate(std::span<const double> x, EvalFlags* flags = nullptr) const;
  /// Value of output `output`.
  double value(std::span<const double> x, std::size_t output = 0) const;

  /// Forward-mode gradient of output `output`; kink convention max0'(0) = 0.
  std::vector<double> gradient(std::span<const double> x, std::size_t output = 0) const;
  double value_and_gradient(std::span<const double> x, std::vector<double>& grad,
                            std::size_t output = 0) const;

  /// Variables that feed, directly or indirectly, into a nonlinear node.
  std::vector<bool> nonlinear_variables() const;
  /// Variables referenced at all.
  std::vector<bool> used_variables() const;

  /// Plain-text node listing for debugging.
  std::string to_text() const;

 private:
  Expr push(ExprNode node);
  Expr fold_or_push(ExprNode node);
  void check(Expr e) const;

  std::size_t num_vars_ = 0;
  Box box_;
  std::vector<ExprNode> nodes_;
  std::vector<Expr> outputs_;
};

}  // namespace mlembed
