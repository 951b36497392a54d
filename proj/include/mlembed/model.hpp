#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mlembed/box.hpp"

namespace mlembed {

// ---------------------------------------------------------------------------
// Feed-forward networks
// ---------------------------------------------------------------------------

enum class Activation { identity, tanh, relu };

const char* to_string(Activation a);
Activation parse_activation(const std::string& name);

/// One dense layer: z_out = act(weights * z_in + bias). Rows of `weights`
/// are the neurons of the next layer.
struct DenseLayer {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
  Activation activation = Activation::identity;
};

struct FeedForwardNetwork {
  std::vector<DenseLayer> layers;
  Box input_box;

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t hidden_layers() const { return layers.empty() ? 0 : layers.size() - 1; }
  std::size_t hidden_neurons() const;

  void validate() const;
  Eigen::VectorXd evaluate(std::span<const double> x) const;
};

// ---------------------------------------------------------------------------
// Gaussian processes
// ---------------------------------------------------------------------------

struct GpPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Gaussian process posterior with a squared-exponential kernel
///   k(x, x') = signal_variance * exp(-0.5 * sum_i w_i^2 (x_i - x'_i)^2)
/// where w = `lengthscales` are the distance weighting factors.
/// The Cholesky factor and weight vector are computed on construction.
class GaussianProcessModel {
 public:
  GaussianProcessModel() = default;
  GaussianProcessModel(Eigen::MatrixXd inputs, Eigen::VectorXd targets,
                       Eigen::VectorXd lengthscales, double signal_variance,
                       double noise_variance, double prior_mean, Box input_box);

  std::size_t input_dim() const { return static_cast<std::size_t>(inputs_.cols()); }
  std::size_t num_points() const { return static_cast<std::size_t>(inputs_.rows()); }

  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const Eigen::VectorXd& targets() const { return targets_; }
  const Eigen::VectorXd& lengthscales() const { return lengthscales_; }
  double signal_variance() const { return signal_variance_; }
  double noise_variance() const { return noise_variance_; }
  double prior_mean() const { return prior_mean_; }
  const Box& input_box() const { return input_box_; }

  /// Lower-triangular Cholesky factor of K + noise*I (+ jitter, if applied).
  const Eigen::MatrixXd& cholesky() const { return chol_; }
  /// (K + noise*I)^-1 (y - m0).
  const Eigen::VectorXd& alpha() const { return alpha_; }
  /// Diagonal jitter added after a failed first factorization (0 if none).
  double jitter() const { return jitter_; }

  double kernel(std::span<const double> a, std::span<const double> b) const;
  double squared_distance(std::span<const double> a, std::size_t row) const;

  GpPrediction predict(std::span<const double> x) const;
  double mean(std::span<const double> x) const { return predict(x).mean; }

  /// Same hyperparameters, new data; refactors the cache.
  GaussianProcessModel with_data(Eigen::MatrixXd inputs, Eigen::VectorXd targets) const;

 private:
  void factorize();

  Eigen::MatrixXd inputs_;
  Eigen::VectorXd targets_;
  Eigen::VectorXd lengthscales_;
  double signal_variance_ = 1.0;
  double noise_variance_ = 0.0;
  double prior_mean_ = 0.0;
  Box input_box_;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd alpha_;
  double jitter_ = 0.0;
};

// ---------------------------------------------------------------------------
// Tree ensembles
// ---------------------------------------------------------------------------

/// Internal nodes send x[feature] <= threshold to `left`, otherwise `right`.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
  static TreeNode leaf(double v) { return TreeNode{-1, 0.0, -1, -1, v}; }
  static TreeNode split(int f, double c, int l, int r) { return TreeNode{f, c, l, r, 0.0}; }
};

/// Node 0 is the root.
struct DecisionTree {
  std::vector<TreeNode> nodes;

  int leaf_index(std::span<const double> x) const;
};

struct TreeEnsembleModel {
  std::vector<DecisionTree> trees;
  std::size_t input_dim = 0;
  Box input_box;

  void validate() const;
  double evaluate(std::span<const double> x) const;
};

// ---------------------------------------------------------------------------
// Convex region surrogates
// ---------------------------------------------------------------------------

struct ConvexRegion {
  Eigen::MatrixXd A;  // halfspaces A x <= d
  Eigen::VectorXd d;
  Eigen::VectorXd c;  // output c'x + e
  double e = 0.0;
  Box bounds;         // bounding box, filled in by validation

  bool contains(std::span<const double> x, double tol = 1e-9) const;
};

struct ConvexRegionSurrogateModel {
  std::vector<ConvexRegion> regions;
  std::size_t input_dim = 0;
  Box input_box;

  /// Certifies each polytope nonempty and bounded, records bounding boxes, and
  /// checks pairwise interior overlap for up to `overlap_check_limit` regions.
  /// Returns warnings (overlaps, skipped checks).
  std::vector<std::string> validate(std::size_t overlap_check_limit = 64);

  std::optional<std::size_t> region_of(std::span<const double> x) const;
  double evaluate(std::span<const double> x) const;
};

// ---------------------------------------------------------------------------
// Tagged union + datasets
// ---------------------------------------------------------------------------

enum class ModelKind { ann, gp, tree_ensemble, crs };

const char* to_string(ModelKind kind);

struct TrainedModel {
  std::string name;
  std::string format_version = "1";
  std::variant<FeedForwardNetwork, GaussianProcessModel, TreeEnsembleModel,
               ConvexRegionSurrogateModel>
      model;
  std::vector<std::string> warnings;

  ModelKind kind() const { return static_cast<ModelKind>(model.index()); }
  std::size_t input_dim() const;
  std::size_t output_dim() const;
  const Box& input_box() const;

  /// Reference evaluation. GP models return {mean, variance}.
  std::vector<double> evaluate(std::span<const double> x) const;
};

struct Dataset {
  Eigen::MatrixXd inputs;                 // M x n_d
  std::optional<Eigen::MatrixXd> targets; // M x n_t

  std::size_t size() const { return static_cast<std::size_t>(inputs.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(inputs.cols()); }
  void validate() const;
};

}  // namespace mlembed
