#pragma once

#include <span>
#include <vector>

#include "mlembed/embed.hpp"
#include "mlembed/interval.hpp"
#include "mlembed/model.hpp"
#include "mlembed/problem.hpp"

namespace mlembed {

/// Pre-activation interval of every neuron, layer by layer (the last entry is
/// the output layer), from interval propagation of the input box.
struct BigMBounds {
  std::vector<std::vector<Interval>> pre;
  std::vector<std::vector<Interval>> post;
};

BigMBounds compute_bigm_bounds(const FeedForwardNetwork& net, const Box& box);

/// Big-M MILP of a ReLU network (identity hidden layers allowed); objective
/// is network output `output`, minimized.
ProblemIR encode_relu_milp(const FeedForwardNetwork& net, const Box& box, std::size_t output = 0);

/// Split-binary MILP of a tree ensemble; objective is the ensemble mean.
ProblemIR encode_tree_milp(const TreeEnsembleModel& ens, const Box& box);

/// Hull reformulation of a validated convex region surrogate.
ProblemIR encode_crs_milp(const ConvexRegionSurrogateModel& crs);

/// Lifted NLP for tanh networks and GP mean/variance. The GP quantity is
/// chosen by `quantity` (output and gp_mean both select the mean).
ProblemIR encode_fullspace_nlp(const TrainedModel& model, const Box& box,
                               Quantity quantity = Quantity::output, std::size_t output = 0);

/// Full-space formulation of any model: MILP for ReLU / tree / region
/// models, NLP for tanh networks and GPs.
ProblemIR encode_fullspace(const TrainedModel& model, const Box& box,
                           Quantity quantity = Quantity::output, std::size_t output = 0);

/// Convex-combination rows: sum(lambda) = 1, x = sum lambda_i data_i.
std::vector<LinearConstraint> hull_validity_rows(const Dataset& data, std::span<const int> x_vars,
                                                 int first_lambda);

/// Adds M weights in [0,1] and the hull rows; returns the weight indices.
std::vector<int> encode_hull_validity(ProblemIR& ir, const Dataset& data, std::span<const int> x_vars);
std::vector<int> encode_hull_validity(HybridProblem& problem, const Dataset& data,
                                      std::span<const int> x_vars);

/// objective += rho * softmin of squared weighted distances to the data.
void encode_distance_penalty(HybridProblem& problem, const Dataset& data, std::span<const int> x_vars,
                             double rho, double tau, std::span<const double> weights);

/// Values of every non-input variable when the inputs are fixed to `x` in a
/// full-space NLP (Newton over the equality rows).
std::vector<double> complete_fullspace(const ProblemIR& ir, std::span<const double> x);

}  // namespace mlembed
