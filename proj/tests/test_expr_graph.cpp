#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "mlembed/embed.hpp"
#include "mlembed/error.hpp"
#include "mlembed/expr_graph.hpp"

using namespace mlembed;

namespace {

TrainedModel single_neuron(double w, double b, Activation act, Box box) {
  FeedForwardNetwork net;
  DenseLayer L;
  L.weights = Eigen::MatrixXd::Constant(1, 1, w);
  L.bias = Eigen::VectorXd::Constant(1, b);
  L.activation = act;
  net.layers.push_back(L);
  net.input_box = std::move(box);
  TrainedModel m;
  m.model = net;
  return m;
}

}  // namespace

TEST_CASE("reduced-space examples") {
  const TrainedModel id = testing::load("identity_1d");
  const ExprGraph g = embed_reduced_space(id);
  CHECK(g.size() == 1);
  CHECK(g.nodes()[0].op == Op::variable);
  CHECK(g.value(std::vector<double>{0.25}) == 0.25);

  const ExprGraph gp = embed_reduced_space(testing::load("gp_n1"));
  CHECK(gp.value(std::vector<double>{1.0}) == doctest::Approx(0.6065306597126334).epsilon(1e-14));

  const TrainedModel relu = single_neuron(1.0, -1.0, Activation::relu, Box({-3.0}, {3.0}));
  const ExprGraph rg = embed_reduced_space(relu);
  bool has_max0 = false;
  for (const auto& n : rg.nodes()) has_max0 = has_max0 || n.op == Op::max0;
  CHECK(has_max0);
  CHECK(rg.value(std::vector<double>{2.0}) == 1.0);
}

TEST_CASE("discontinuous models have no reduced-space graph") {
  for (const char* name : {"trees_2d", "crs_2d"}) {
    try {
      (void)embed_reduced_space(testing::load(name));
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::unsupported);
      CHECK(std::string(e.what()) == "discontinuous model has no reduced-space graph");
    }
  }
}

TEST_CASE("evaluation examples") {
  Box b({-2.0}, {2.0});
  ExprGraph t(1, b);
  t.add_output(t.tanh(t.variable(0)));
  CHECK(t.value(std::vector<double>{0.0}) == 0.0);
  CHECK(t.gradient(std::vector<double>{0.0})[0] == 1.0);

  ExprGraph ex(1, b);
  const Expr x = ex.variable(0);
  ex.add_output(ex.multiply(ex.exp(x), x));
  CHECK(ex.value(std::vector<double>{1.0}) == doctest::Approx(2.718281828459045).epsilon(1e-15));

  ExprGraph d(1, b);
  d.add_output(d.divide(d.constant(1.0), d.variable(0)));
  CHECK_THROWS_AS(d.value(std::vector<double>{0.0}), Error);

  ExprGraph r(1, b);
  r.add_output(r.max0(r.variable(0)));
  CHECK(r.gradient(std::vector<double>{-1.0})[0] == 0.0);
  CHECK(r.gradient(std::vector<double>{0.0})[0] == 0.0);

  const ExprGraph gp = embed_reduced_space(testing::load("gp_n1"));
  CHECK(gp.gradient(std::vector<double>{1.0})[0] == doctest::Approx(-0.6065306597126334).epsilon(1e-14));
}

TEST_CASE("sqrt is floored and flagged") {
  Box b({-1.0}, {1.0});
  ExprGraph g(1, b);
  g.add_output(g.sqrt(g.variable(0)));
  EvalFlags flags;
  std::vector<double> scratch;
  const auto out = g.evaluate(std::vector<double>{-0.5}, scratch, &flags);
  CHECK(out[0] == 0.0);
  CHECK(flags.sqrt_floored);
  EvalFlags outside;
  (void)g.evaluate(std::vector<double>{2.0}, scratch, &outside);
  CHECK(outside.outside_box);
}

TEST_CASE("graph sizes") {
  for (const char* name : {"tanh_1_8_1", "tanh_2_4_1", "relu_1_6_1", "relu_2_4_4_1"}) {
    const TrainedModel m = testing::load(name);
    const auto& net = std::get<FeedForwardNetwork>(m.model);
    std::size_t expect = net.input_dim();
    for (const auto& L : net.layers) {
      expect += static_cast<std::size_t>(L.weights.rows()) * (L.activation == Activation::identity ? 1 : 2);
    }
    CHECK(embed_reduced_space(m).size() == expect);
  }
  for (const char* name : {"gp_n3", "gp_n10_1d", "gp_n10_2d"}) {
    const TrainedModel m = testing::load(name);
    const auto& gp = std::get<GaussianProcessModel>(m.model);
    CHECK(embed_reduced_space(m).size() == gp.input_dim() + gp.num_points() + 1);
  }
}

TEST_CASE("reduced-space fidelity") {
  const char* names[] = {"identity_1d", "relu_shift", "tanh_1_8_1", "tanh_2_4_1", "relu_1_6_1",
                         "relu_2_4_4_1", "gp_n1",  "gp_n3",      "gp_n10_1d",  "gp_n10_2d"};
  testing::Rng rng(3);
  for (const char* name : names) {
    const TrainedModel m = testing::load(name);
    EmbedOptions mean;
    EmbedOptions var;
    var.quantity = Quantity::gp_variance;
    EmbedOptions generic;
    generic.kernel_form = KernelForm::generic;
    const ExprGraph g = embed_reduced_space(m, mean);
    const bool is_gp = m.kind() == ModelKind::gp;
    const ExprGraph gv = is_gp ? embed_reduced_space(m, var) : g;
    const ExprGraph gg = is_gp ? embed_reduced_space(m, generic) : g;
    double worst = 0.0;
    for (int s = 0; s < 1000; ++s) {
      const auto x = rng.point(m.input_box());
      const auto ref = m.evaluate(x);
      worst = std::max(worst, std::abs(g.value(x) - ref[0]) / (1 + std::abs(ref[0])));
      if (is_gp) {
        worst = std::max(worst, std::abs(gv.value(x) - ref[1]) / (1 + std::abs(ref[1])));
        worst = std::max(worst, std::abs(gg.value(x) - ref[0]) / (1 + std::abs(ref[0])));
      }
    }
    INFO(name);
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("forward gradients match central differences") {
  testing::Rng rng(21);
  for (int k = 0; k < 100; ++k) {
    const ExprGraph g = testing::random_smooth_graph(rng);
    CHECK(testing::gradient_error(g, rng.point(g.box())) <= 1e-5);
  }
}

TEST_CASE("nonlinear and used variables") {
  Box b({0, 0, 0}, {1, 1, 1});
  ExprGraph g(3, b);
  const Expr t[2] = {g.variable(0), g.tanh(g.variable(1))};
  const double w[2] = {1.0, 2.0};
  g.add_output(g.affine(t, w, 0.0));
  const auto nl = g.nonlinear_variables();
  const auto used = g.used_variables();
  CHECK(!nl[0]);
  CHECK(nl[1]);
  CHECK(!nl[2]);
  CHECK(used[0]);
  CHECK(!used[2]);
  CHECK(g.to_text().find("tanh") != std::string::npos);
}

TEST_CASE("graph construction errors") {
  Box b({0}, {1});
  ExprGraph g(1, b);
  CHECK_THROWS_AS(g.variable(1), Error);
  CHECK_THROWS_AS(g.constant(INFINITY), Error);
  const Expr x = g.variable(0);
  CHECK_THROWS_AS(g.affine(std::vector<Expr>{x}, std::vector<double>{1.0, 2.0}, 0.0), Error);
  CHECK_THROWS_AS(g.tanh(Expr{7}), Error);
}

TEST_CASE("distance penalty") {
  Dataset d;
  d.inputs = Eigen::MatrixXd::Zero(1, 2);
  Box b({-2, -2}, {2, 2});
  const std::vector<double> w{1.0, 1.0};
  ExprGraph g(2, b);
  const std::vector<Expr> in{g.variable(0), g.variable(1)};
  g.add_output(embed_distance_penalty(g, d, in, 1.0, 1e-2, w));
  const double v = g.value(std::vector<double>{0.6, 0.8});
  CHECK(std::abs(v - 1.0) <= 1e-3);

  Dataset three;
  three.inputs.resize(3, 2);
  three.inputs << 0, 0, 1, 0, 0, 1;
  ExprGraph h(2, b);
  const std::vector<Expr> hin{h.variable(0), h.variable(1)};
  h.add_output(embed_distance_penalty(h, three, hin, 2.0, 1e-2, w));
  CHECK(h.value(std::vector<double>{1.0, 0.0}) <= 2.0 * 1e-2 * std::log(3.0));

  ExprGraph z(2, b);
  const std::vector<Expr> zin{z.variable(0), z.variable(1)};
  z.add_output(embed_distance_penalty(z, three, zin, 0.0, 1e-2, w));
  CHECK(z.value(std::vector<double>{1.5, -1.0}) == 0.0);
}
