#include <cmath>
#include <nlohmann/json.hpp>

#include "doctest.h"
#include "helpers.hpp"
#include "mlembed/error.hpp"
#include "mlembed/model_io.hpp"

using namespace mlembed;
using nlohmann::json;

namespace {

json gp_doc(json X, json y, double noise) {
  const std::size_t d = X[0].size();
  json box = json::array();
  json ls = json::array();
  for (std::size_t i = 0; i < d; ++i) {
    box.push_back({-3.0, 3.0});
    ls.push_back(1.0);
  }
  return {{"format_version", "1"}, {"kind", "gp"}, {"input_dim", d}, {"output_dim", 1}, {"input_box", box},
          {"payload",
           {{"X", X}, {"y", y}, {"lengthscales", ls}, {"signal_variance", 1.0}, {"noise_variance", noise},
            {"prior_mean", 0.0}}}};
}

json split(int f, double c, int l, int r) {
  return {{"split", {{"feature", f}, {"threshold", c}, {"left", l}, {"right", r}}}};
}
json leaf(double v) { return {{"leaf", {{"value", v}}}}; }

json tree_doc(json trees, std::size_t dim) {
  json box = json::array();
  for (std::size_t i = 0; i < dim; ++i) box.push_back({-1.0, 1.0});
  return {{"format_version", "1"}, {"kind", "tree_ensemble"}, {"input_dim", dim}, {"output_dim", 1},
          {"input_box", box}, {"payload", trees}};
}

json interval_region(double lo, double hi, double c, double e) {
  return {{"A", {{1.0}, {-1.0}}}, {"d", {hi, -lo}}, {"c", {c}}, {"e", e}};
}

json crs_doc(json regions, double lo, double hi) {
  return {{"format_version", "1"}, {"kind", "crs"}, {"input_dim", 1}, {"output_dim", 1},
          {"input_box", {{lo, hi}}}, {"payload", regions}};
}

// Random tree of the given depth stored breadth first.
json random_tree(testing::Rng& rng, int depth, std::size_t dim) {
  json nodes = json::array();
  const int internal = (1 << depth) - 1;
  const int total = (1 << (depth + 1)) - 1;
  for (int i = 0; i < total; ++i) {
    if (i < internal) {
      nodes.push_back(split(rng.integer(0, static_cast<int>(dim) - 1), rng.uniform(-1, 1), 2 * i + 1, 2 * i + 2));
    } else {
      nodes.push_back(leaf(rng.uniform(-5, 5)));
    }
  }
  return nodes;
}

double traverse(const json& tree, std::span<const double> x) {
  std::size_t at = 0;
  while (tree[at].contains("split")) {
    const auto& s = tree[at]["split"];
    at = x[s["feature"].get<std::size_t>()] <= s["threshold"].get<double>() ? s["left"].get<std::size_t>()
                                                                           : s["right"].get<std::size_t>();
  }
  return tree[at]["leaf"]["value"].get<double>();
}

}  // namespace

TEST_CASE("load examples") {
  const TrainedModel id = testing::load("identity_1d");
  CHECK(id.kind() == ModelKind::ann);
  CHECK(std::get<FeedForwardNetwork>(id.model).hidden_layers() == 0);

  try {
    (void)load_model(gp_doc({{0.5}, {0.5}}, {1.0, 2.0}, 0.0).dump());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::validation);
    CHECK(std::string(e.what()).find("kernel matrix singular") != std::string::npos);
  }

  try {
    (void)load_model(tree_doc({{split(0, 0.0, 1, 7), leaf(1.0)}}, 1).dump());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::validation);
    CHECK(std::string(e.what()).find("child index") != std::string::npos);
  }

  CHECK_THROWS_AS(load_model("{not json"), Error);
  json bad = gp_doc({{0.0}}, {1.0}, 0.0);
  bad["format_version"] = "2";
  CHECK_THROWS_AS(load_model(bad.dump()), Error);
}

TEST_CASE("network evaluation examples") {
  FeedForwardNetwork id;
  id.layers.push_back({Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2), Activation::identity});
  id.input_box = Box({-1, -1}, {1, 1});
  const std::vector<double> x{0.3, -0.7};
  const auto y = id.evaluate(x);
  CHECK(y[0] == 0.3);
  CHECK(y[1] == -0.7);
  CHECK_THROWS_AS(id.evaluate(std::vector<double>{1.0}), Error);

  FeedForwardNetwork relu;
  relu.layers.push_back({Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::VectorXd::Constant(1, -1.0), Activation::relu});
  relu.layers.push_back({Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::VectorXd::Zero(1), Activation::identity});
  relu.input_box = Box({-2}, {2});
  CHECK(relu.evaluate(std::vector<double>{0.5})[0] == 0.0);

  testing::Rng rng(5);
  FeedForwardNetwork t;
  Eigen::MatrixXd W1(3, 2);
  Eigen::MatrixXd W2(1, 3);
  for (int i = 0; i < 6; ++i) W1.data()[i] = rng.uniform(-2, 2);
  for (int i = 0; i < 3; ++i) W2.data()[i] = rng.uniform(-2, 2);
  t.layers.push_back({W1, Eigen::VectorXd::Zero(3), Activation::tanh});
  t.layers.push_back({W2, Eigen::VectorXd::Zero(1), Activation::identity});
  t.input_box = Box({-1, -1}, {1, 1});
  CHECK(t.evaluate(std::vector<double>{0.0, 0.0})[0] == 0.0);
}

TEST_CASE("identity networks equal their matrix product") {
  testing::Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    FeedForwardNetwork net;
    Eigen::Index in = 3;
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(in, in);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(in);
    for (int k = 0; k < 3; ++k) {
      const Eigen::Index out = rng.integer(1, 4);
      Eigen::MatrixXd W(out, in);
      Eigen::VectorXd b(out);
      for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = rng.uniform(-1, 1);
      for (Eigen::Index i = 0; i < out; ++i) b[i] = rng.uniform(-1, 1);
      net.layers.push_back({W, b, Activation::identity});
      c = W * c + b;
      M = W * M;
      in = out;
    }
    net.input_box = Box({-1, -1, -1}, {1, 1, 1});
    const auto x = rng.point(net.input_box);
    const Eigen::VectorXd ref = M * Eigen::Map<const Eigen::VectorXd>(x.data(), 3) + c;
    const auto y = net.evaluate(x);
    for (Eigen::Index i = 0; i < ref.size(); ++i) CHECK(std::abs(y[i] - ref[i]) <= 1e-12);
  }
}

TEST_CASE("GP closed form") {
  const TrainedModel m = testing::load("gp_n1");
  const auto& gp = std::get<GaussianProcessModel>(m.model);
  const auto p = gp.predict(std::vector<double>{1.0});
  CHECK(std::abs(p.mean - 0.6065306597126334) <= 1e-12);
  CHECK(std::abs(p.variance - 0.6321205588285577) <= 1e-12);
  const auto at = gp.predict(std::vector<double>{0.0});
  CHECK(std::abs(at.mean - 1.0) <= 1e-4);
  CHECK(std::abs(at.variance) <= 1e-6);
  CHECK_THROWS_AS(gp.predict(std::vector<double>{1.0, 2.0}), Error);
}

TEST_CASE("GP invariants") {
  testing::Rng rng(17);
  for (const char* name : {"gp_n3", "gp_n10_1d", "gp_n10_2d"}) {
    const TrainedModel m = testing::load(name);
    const auto& gp = std::get<GaussianProcessModel>(m.model);
    INFO(name);
    if (gp.noise_variance() <= 1e-10) {
      for (std::size_t i = 0; i < gp.num_points(); ++i) {
        const Eigen::VectorXd xi = gp.inputs().row(static_cast<Eigen::Index>(i));
        const auto p = gp.predict(std::span<const double>(xi.data(), gp.input_dim()));
        CHECK(std::abs(p.mean - gp.targets()[static_cast<Eigen::Index>(i)]) <= 1e-4);
        CHECK(p.variance <= 1e-6);
      }
    }
    for (int s = 0; s < 1000; ++s) CHECK(gp.predict(rng.point(gp.input_box())).variance >= 0.0);
  }

  // Far field: weighted distance r >= 10 from every training input.
  const TrainedModel m = testing::load("gp_n3");
  const auto& gp = std::get<GaussianProcessModel>(m.model);
  std::vector<double> far(gp.input_dim(), 0.0);
  for (double t = 1.0;; t += 1.0) {
    far.assign(gp.input_dim(), t);
    double rmin = INFINITY;
    for (std::size_t i = 0; i < gp.num_points(); ++i) rmin = std::min(rmin, gp.squared_distance(far, i));
    if (rmin >= 100.0) break;
  }
  const double bound = gp.signal_variance() * std::exp(-50.0) * gp.alpha().lpNorm<1>();
  CHECK(std::abs(gp.mean(far) - gp.prior_mean()) <= bound);
}

TEST_CASE("tree ensemble examples") {
  const TrainedModel one = load_model(tree_doc({{split(0, 0.0, 1, 2), leaf(-1.0), leaf(1.0)}}, 1).dump());
  CHECK(one.evaluate(std::vector<double>{0.0})[0] == -1.0);
  CHECK(one.evaluate(std::vector<double>{1e-9})[0] == 1.0);
  const TrainedModel consts = load_model(tree_doc({{leaf(2.0)}, {leaf(4.0)}}, 1).dump());
  CHECK(consts.evaluate(std::vector<double>{0.3})[0] == 3.0);
}

TEST_CASE("tree ensemble matches independent traversal") {
  testing::Rng rng(50);
  json trees = json::array();
  for (int t = 0; t < 50; ++t) trees.push_back(random_tree(rng, rng.integer(1, 4), 3));
  const json doc = tree_doc(trees, 3);
  const TrainedModel m = load_model(doc.dump());
  for (int s = 0; s < 1000; ++s) {
    const auto x = rng.point(m.input_box());
    double sum = 0.0;
    for (const auto& t : trees) sum += traverse(t, x);
    CHECK(std::abs(m.evaluate(x)[0] - sum / 50.0) <= 1e-12);
  }
}

TEST_CASE("tree output is constant on leaf cells") {
  const TrainedModel m = testing::load("trees_2d");
  const auto& ens = std::get<TreeEnsembleModel>(m.model);
  testing::Rng rng(9);
  int same_cell = 0;
  for (int s = 0; s < 2000; ++s) {
    const auto a = rng.point(m.input_box());
    const auto b = rng.point(m.input_box());
    bool same = true;
    for (const auto& t : ens.trees) same = same && t.leaf_index(a) == t.leaf_index(b);
    if (same) {
      ++same_cell;
      CHECK(m.evaluate(a)[0] == m.evaluate(b)[0]);
    }
  }
  CHECK(same_cell > 0);
}

TEST_CASE("convex region examples") {
  const TrainedModel one = load_model(crs_doc({interval_region(0, 1, 2, 1)}, 0, 1).dump());
  CHECK(one.evaluate(std::vector<double>{0.5})[0] == 2.0);

  const TrainedModel two =
      load_model(crs_doc({interval_region(0, 1, 1, 0), interval_region(1, 2, -1, 2)}, 0, 2).dump());
  const auto& crs = std::get<ConvexRegionSurrogateModel>(two.model);
  CHECK(crs.region_of(std::vector<double>{1.0}) == std::optional<std::size_t>(0));
  CHECK(two.evaluate(std::vector<double>{1.0})[0] == 1.0);
  try {
    (void)two.evaluate(std::vector<double>{3.0});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::domain);
  }

  json unbounded = crs_doc({{{"A", {{1.0}}}, {"d", {1.0}}, {"c", {1.0}}, {"e", 0.0}}}, 0, 1);
  CHECK_THROWS_AS(load_model(unbounded.dump()), Error);
  json overlap = crs_doc({interval_region(0, 1.5, 1, 0), interval_region(1, 2, -1, 2)}, 0, 2);
  CHECK(!load_model(overlap.dump()).warnings.empty());
}

TEST_CASE("dump and reload preserve predictions") {
  testing::Rng rng(4);
  for (const char* name : {"tanh_2_4_1", "relu_2_4_4_1", "gp_n10_2d", "trees_2d", "crs_2d"}) {
    const TrainedModel m = testing::load(name);
    const TrainedModel back = load_model(dump_model(m));
    CHECK(back.kind() == m.kind());
    for (int s = 0; s < 50; ++s) {
      const auto x = rng.point(m.input_box());
      CHECK(back.evaluate(x) == m.evaluate(x));
    }
  }
}

TEST_CASE("points files") {
  const auto pts = parse_points("0.5 1\n\n-2 3e-1\n", 2);
  REQUIRE(pts.size() == 2);
  CHECK(pts[1][1] == 0.3);
  try {
    (void)parse_points("1 2\na b\n", 2);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_points("1 2 3\n", 2), Error);
}
