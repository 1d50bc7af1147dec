#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "hermnet/data.hpp"
#include "hermnet/esn.hpp"

namespace hermnet {

/// Box-bounded mixed integer/real search space.
struct SearchSpace {
  struct Dim {
    double lower = 0.0;
    double upper = 1.0;
    bool integer = false;
  };

  std::vector<Dim> dims;

  int size() const { return static_cast<int>(dims.size()); }
  void validate() const;
  /// Rounds integer dimensions and clamps to bounds.
  Eigen::VectorXd materialize(const Eigen::VectorXd& position) const;
};

/// Hybrid swarm parameters: inertia decays linearly w_start -> w_end; c1
/// weighs the gravitational acceleration, c2 the global-best pull;
/// G(t) = g0 exp(-alpha t / T).
struct MpsogsaParams {
  double w_start = 0.9;
  double w_end = 0.4;
  double c1 = 1.0;
  double c2 = 1.0;
  double g0 = 1.0;
  double alpha = 20.0;
};

struct MinimizeResult {
  Eigen::VectorXd best_position;  // integer dims rounded
  double best_fitness = 0.0;
  std::vector<double> history;  // global best per iteration, non-increasing
};

using FitnessFn = std::function<double(const Eigen::VectorXd&)>;

/// MPSOGSA minimization. Fitness must be pure; non-finite values are
/// penalized with +inf and the run continues. Evaluations within a
/// generation may run on `threads` workers; results merge by particle index,
/// so the outcome is schedule-independent.
MinimizeResult minimize(const SearchSpace& space, const FitnessFn& fitness, int iterations,
                        int population, uint64_t seed, const MpsogsaParams& params = {},
                        int threads = 1);

/// One generation snapshot from an ESN hyperparameter evolution.
struct GenerationRecord {
  int generation = 0;
  double best_fitness = 0.0;            // global best so far
  double generation_best_fitness = 0.0; // best candidate of this generation
  Eigen::VectorXd generation_best_position;
  Eigen::MatrixXd generation_best_states;  // top-layer states window
};

struct EvolveResult {
  DeepEsnConfig best_config;
  double best_val_rmse = 0.0;
  std::vector<double> history;
  std::vector<GenerationRecord> generations;
};

/// Evolves (depth, width) of a DeepESN by validation RMSE on a chronological
/// split. Particle 0 starts at the template's own (depth, width). Snapshots
/// keep a bounded window of the generation-best candidate's top-layer states.
EvolveResult evolve_esn(const Eigen::MatrixXd& series, const ChronoSplit& split,
                        const DeepEsnConfig& template_config, int min_depth, int max_depth,
                        int min_width, int max_width, int generations, int population,
                        uint64_t seed, int snapshot_window = 200, int threads = 1);

/// Validation RMSE of a candidate (depth, width) under the template config;
/// the fitness evolve_esn minimizes. Non-finite on training failure.
double esn_validation_rmse(const Eigen::MatrixXd& series, const ChronoSplit& split,
                           const DeepEsnConfig& template_config, int depth, int width,
                           Eigen::MatrixXd* states_window = nullptr, int snapshot_window = 200);

}  // namespace hermnet
