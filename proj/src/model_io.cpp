#include "mlembed/model_io.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "mlembed/error.hpp"

namespace mlembed {

using nlohmann::json;

namespace {

Eigen::VectorXd to_vector(const json& j, const std::string& what) {
  if (!j.is_array()) fail(ErrorKind::parse, what + ": expected an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(ErrorKind::parse, what + ": expected numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd to_matrix(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) fail(ErrorKind::parse, what + ": expected a non-empty 2-D array");
  const std::size_t rows = j.size();
  if (!j[0].is_array()) fail(ErrorKind::parse, what + ": expected a 2-D array");
  const std::size_t cols = j[0].size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      fail(ErrorKind::dimension, what + ": ragged row " + std::to_string(r));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) fail(ErrorKind::parse, what + ": expected numbers");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

json from_vector(const Eigen::VectorXd& v) {
  json j = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

json from_matrix(const Eigen::MatrixXd& m) {
  json j = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(std::move(row));
  }
  return j;
}

const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    fail(ErrorKind::parse, where + ": missing field '" + key + "'");
  }
  return j.at(key);
}

Box parse_box(const json& j) {
  if (!j.is_array()) fail(ErrorKind::parse, "input_box: expected [[lo,hi],...]");
  Box box;
  for (const auto& pair : j) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number()) {
      fail(ErrorKind::parse, "input_box: each entry must be [lo, hi]");
    }
    box.lower.push_back(pair[0].get<double>());
    box.upper.push_back(pair[1].get<double>());
  }
  return box;
}

FeedForwardNetwork parse_ann(const json& payload, Box box) {
  if (!payload.is_array()) fail(ErrorKind::parse, "ann payload: expected a list of layers");
  FeedForwardNetwork net;
  net.input_box = std::move(box);
  for (std::size_t k = 0; k < payload.size(); ++k) {
    const std::string where = "ann layer " + std::to_string(k);
    const json& layer = payload[k];
    DenseLayer L;
    L.weights = to_matrix(require(layer, "weights", where), where + " weights");
    L.bias = to_vector(require(layer, "bias", where), where + " bias");
    L.activation = parse_activation(require(layer, "activation", where).get<std::string>());
    net.layers.push_back(std::move(L));
  }
  net.validate();
  return net;
}

GaussianProcessModel parse_gp(const json& payload, Box box) {
  const std::string where = "gp payload";
  Eigen::MatrixXd X = to_matrix(require(payload, "X", where), "gp X");
  Eigen::VectorXd y = to_vector(require(payload, "y", where), "gp y");
  Eigen::VectorXd w = to_vector(require(payload, "lengthscales", where), "gp lengthscales");
  const double sf2 = payload.value("signal_variance", 1.0);
  const double sn2 = payload.value("noise_variance", 0.0);
  const double m0 = payload.value("prior_mean", 0.0);
  return GaussianProcessModel(std::move(X), std::move(y), std::move(w), sf2, sn2, m0, std::move(box));
}

TreeEnsembleModel parse_trees(const json& payload, std::size_t input_dim, Box box) {
  if (!payload.is_array()) fail(ErrorKind::parse, "tree payload: expected a list of trees");
  TreeEnsembleModel ens;
  ens.input_dim = input_dim;
  ens.input_box = std::move(box);
  for (std::size_t t = 0; t < payload.size(); ++t) {
    const json& tree = payload[t];
    if (!tree.is_array()) fail(ErrorKind::parse, "tree " + std::to_string(t) + ": expected a node list");
    DecisionTree dt;
    for (std::size_t i = 0; i < tree.size(); ++i) {
      const json& node = tree[i];
      const std::string where = "tree " + std::to_string(t) + " node " + std::to_string(i);
      if (node.contains("leaf")) {
        dt.nodes.push_back(TreeNode::leaf(require(node["leaf"], "value", where).get<double>()));
      } else if (node.contains("split")) {
        const json& s = node["split"];
        dt.nodes.push_back(TreeNode::split(require(s, "feature", where).get<int>(),
                                           require(s, "threshold", where).get<double>(),
                                           require(s, "left", where).get<int>(),
                                           require(s, "right", where).get<int>()));
      } else {
        fail(ErrorKind::parse, where + ": expected 'split' or 'leaf'");
      }
    }
    ens.trees.push_back(std::move(dt));
  }
  ens.validate();
  return ens;
}

ConvexRegionSurrogateModel parse_crs(const json& payload, std::size_t input_dim, Box box,
                                     std::vector<std::string>& warnings) {
  const json& regions = payload.is_object() ? require(payload, "regions", "crs payload") : payload;
  if (!regions.is_array()) fail(ErrorKind::parse, "crs payload: expected a list of regions");
  ConvexRegionSurrogateModel crs;
  crs.input_dim = input_dim;
  crs.input_box = std::move(box);
  for (std::size_t r = 0; r < regions.size(); ++r) {
    const std::string where = "crs region " + std::to_string(r);
    ConvexRegion reg;
    reg.A = to_matrix(require(regions[r], "A", where), where + " A");
    reg.d = to_vector(require(regions[r], "d", where), where + " d");
    reg.c = to_vector(require(regions[r], "c", where), where + " c");
    reg.e = require(regions[r], "e", where).get<double>();
    crs.regions.push_back(std::move(reg));
  }
  auto w = crs.validate();
  warnings.insert(warnings.end(), w.begin(), w.end());
  return crs;
}

}  // namespace

TrainedModel load_model(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string("model document: ") + e.what());
  }
  try {
    const std::string version = require(doc, "format_version", "model document").get<std::string>();
    if (version != "1") fail(ErrorKind::parse, "unsupported format_version '" + version + "'");
    const std::string kind = require(doc, "kind", "model document").get<std::string>();
    const auto input_dim = require(doc, "input_dim", "model document").get<std::size_t>();
    const auto output_dim = require(doc, "output_dim", "model document").get<std::size_t>();
    Box box = parse_box(require(doc, "input_box", "model document"));
    if (box.size() != input_dim) {
      fail(ErrorKind::dimension, "input_box has " + std::to_string(box.size()) +
                                     " entries but input_dim is " + std::to_string(input_dim));
    }
    const json& payload = require(doc, "payload", "model document");

    TrainedModel model;
    model.name = doc.value("name", std::string{});
    model.format_version = version;
    if (kind == "ann") {
      model.model = parse_ann(payload, std::move(box));
    } else if (kind == "gp") {
      model.model = parse_gp(payload, std::move(box));
    } else if (kind == "tree_ensemble") {
      model.model = parse_trees(payload, input_dim, std::move(box));
    } else if (kind == "crs") {
      model.model = parse_crs(payload, input_dim, std::move(box), model.warnings);
    } else {
      fail(ErrorKind::parse, "unknown model kind '" + kind + "'");
    }
    if (model.input_dim() != input_dim) {
      fail(ErrorKind::dimension, "payload input dimension " + std::to_string(model.input_dim()) +
                                     " does not match input_dim " + std::to_string(input_dim));
    }
    if (model.output_dim() != output_dim) {
      fail(ErrorKind::dimension, "payload output dimension " + std::to_string(model.output_dim()) +
                                     " does not match output_dim " + std::to_string(output_dim));
    }
    return model;
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string("model document: ") + e.what());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::config, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TrainedModel load_model_file(const std::filesystem::path& path) {
  return load_model(read_text_file(path));
}

std::string dump_model(const TrainedModel& model) {
  json doc;
  doc["format_version"] = model.format_version;
  doc["kind"] = to_string(model.kind());
  if (!model.name.empty()) doc["name"] = model.name;
  doc["input_dim"] = model.input_dim();
  doc["output_dim"] = model.output_dim();
  json box = json::array();
  const Box& b = model.input_box();
  for (std::size_t i = 0; i < b.size(); ++i) box.push_back({b.lower[i], b.upper[i]});
  doc["input_box"] = box;

  json payload;
  switch (model.kind()) {
    case ModelKind::ann:
      payload = json::array();
      for (const auto& L : std::get<FeedForwardNetwork>(model.model).layers) {
        payload.push_back({{"weights", from_matrix(L.weights)},
                           {"bias", from_vector(L.bias)},
                           {"activation", to_string(L.activation)}});
      }
      break;
    case ModelKind::gp: {
      const auto& gp = std::get<GaussianProcessModel>(model.model);
      payload = {{"X", from_matrix(gp.inputs())},
                 {"y", from_vector(gp.targets())},
                 {"lengthscales", from_vector(gp.lengthscales())},
                 {"signal_variance", gp.signal_variance()},
                 {"noise_variance", gp.noise_variance()},
                 {"prior_mean", gp.prior_mean()}};
      break;
    }
    case ModelKind::tree_ensemble:
      payload = json::array();
      for (const auto& tree : std::get<TreeEnsembleModel>(model.model).trees) {
        json nodes = json::array();
        for (const auto& n : tree.nodes) {
          if (n.is_leaf()) {
            nodes.push_back({{"leaf", {{"value", n.value}}}});
          } else {
            nodes.push_back({{"split", {{"feature", n.feature},
                                        {"threshold", n.threshold},
                                        {"left", n.left},
                                        {"right", n.right}}}});
          }
        }
        payload.push_back(std::move(nodes));
      }
      break;
    case ModelKind::crs:
      payload = json::array();
      for (const auto& r : std::get<ConvexRegionSurrogateModel>(model.model).regions) {
        payload.push_back({{"A", from_matrix(r.A)}, {"d", from_vector(r.d)},
                           {"c", from_vector(r.c)}, {"e", r.e}});
      }
      break;
  }
  doc["payload"] = std::move(payload);
  return doc.dump(2) + "\n";
}

std::vector<std::vector<double>> parse_points(std::string_view text, std::size_t dim) {
  std::vector<std::vector<double>> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line.front() == '#') continue;
    std::istringstream ls(line);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) {
        fail(ErrorKind::parse, "points file row " + std::to_string(lineno) +
                                   ": malformed number '" + tok + "'");
      }
      row.push_back(v);
    }
    if (row.size() != dim) {
      fail(ErrorKind::dimension, "points file row " + std::to_string(lineno) + ": expected " +
                                     std::to_string(dim) + " values, got " +
                                     std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace mlembed
