#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mlembed/bayesopt.hpp"
#include "mlembed/embed.hpp"
#include "mlembed/model.hpp"

namespace mlembed {

enum class Formulation { reduced, fullspace };
enum class Validity { none, hull, penalty };

const char* to_string(Formulation f);
const char* to_string(Validity v);

/// Options shared by the batch commands.
struct RunConfig {
  Formulation formulation = Formulation::reduced;
  bool maximize = false;
  Quantity quantity = Quantity::output;
  std::size_t output = 0;
  Validity validity = Validity::none;
  double rho = 1.0;
  double tau = 0.01;
  std::optional<Dataset> data;  // validity data; GP training inputs when absent
  double abs_gap = 1e-6;
  double rel_gap = 1e-6;
  long node_limit = 200000;
  std::size_t grid = 0;         // grid oracle points per dimension (0 = off)
  int threads = 1;
  std::uint64_t seed = 0;
};

struct SolveReport {
  Formulation formulation = Formulation::reduced;
  std::string solver;           // "milp" or "global"
  std::string status;
  bool has_solution = false;
  double optimum = 0.0;         // objective in the requested sense
  std::vector<double> x;        // model inputs
  double bound = 0.0;           // dual bound in the requested sense
  double abs_gap = 0.0;
  double rel_gap = 0.0;
  long nodes = 0;
  double seconds = 0.0;
  std::size_t variables = 0;
  std::size_t binaries = 0;
  std::vector<std::string> warnings;
  // Filled when grid > 0 and no validity option is active.
  bool has_grid = false;
  double grid_optimum = 0.0;
  std::vector<double> grid_x;
};

/// Checks option combinations against the model; throws ErrorKind::config.
void check_config(const TrainedModel& model, const RunConfig& config);

/// Builds the chosen formulation and runs the matching solver.
SolveReport solve_model(const TrainedModel& model, const RunConfig& config);

struct CompareReport {
  SolveReport reduced;
  SolveReport fullspace;
  double difference = 0.0;
};

CompareReport compare_formulations(const TrainedModel& model, RunConfig config);

/// LP-file text of the full-space MILP (hull validity rows included when set).
std::string formulate_lp(const TrainedModel& model, const RunConfig& config);

/// Scalar objective seen by the optimizer for one model: selected output
/// (ANN), mean or variance (GP), prediction (trees, regions).
double model_objective(const TrainedModel& model, std::span<const double> x, const RunConfig& config);

}  // namespace mlembed
