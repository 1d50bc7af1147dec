#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "hermnet/activations.hpp"

namespace hermnet {

/// Feedforward stack x_l = act(W_l x_{l-1} + b_l).
struct LayeredNet {
  struct Layer {
    Eigen::MatrixXd weights;
    Eigen::VectorXd bias;
  };

  std::vector<Layer> layers;
  ActivationFn activation = ActivationFn::tanh_fn();

  int depth() const { return static_cast<int>(layers.size()); }
  int input_dim() const;
  void validate() const;  // adjacent dimensions must chain, entries finite
};

/// All layer states x_0..x_L for an input.
std::vector<Eigen::VectorXd> forward(const LayeredNet& net, const Eigen::VectorXd& x0);

/// diag(act'(W x + b)) W for one layer.
Eigen::MatrixXd layer_jacobian(const LayeredNet& net, const Eigen::VectorXd& x, int layer);

enum class Regime { Stable, EdgeOfChaos, Chaotic };

std::string to_string(Regime regime);

struct CriticalityReport {
  double lyapunov = 0.0;
  std::vector<std::vector<double>> per_layer_log_spectra;  // rank-paired time averages
  Regime regime = Regime::Stable;
  double edge_tolerance = 1e-2;

  nlohmann::json to_json() const;
};

struct LyapunovOptions {
  double edge_tolerance = 1e-2;
  /// Rectangular layers have no eigenvalues; opt in to singular values instead.
  bool singular_value_fallback = false;
};

/// Largest time-averaged log magnitude of layer Jacobian eigenvalues along a
/// trajectory. Magnitudes are sorted per step and averaged per rank; the
/// exponent is the max over layers and ranks, classified against the
/// tolerance band around zero.
CriticalityReport lyapunov(const LayeredNet& net, const std::vector<Eigen::VectorXd>& trajectory,
                           const LyapunovOptions& options = {});

/// Binary recurrence matrix: entry (i,j) is one iff |x_i - x_j| < threshold.
struct RecurrencePlot {
  int size = 0;
  std::vector<uint8_t> matrix;  // row-major size*size
  double threshold = 0.0;
  double recurrence_rate = 0.0;

  uint8_t at(int i, int j) const { return matrix[static_cast<size_t>(i) * size + j]; }
};

RecurrencePlot recurrence_plot(const std::vector<Eigen::VectorXd>& states, double epsilon);

/// Threshold rule: fraction of the maximum pairwise distance; smallest
/// positive double when all states coincide.
double epsilon_from_fraction(const std::vector<Eigen::VectorXd>& states, double fraction);

/// Binary PGM (P5), recurrent points black. Byte-exact for identical plots.
void write_pgm(const RecurrencePlot& plot, const std::filesystem::path& path);
/// CSV of 0/1 rows.
void write_recurrence_csv(const RecurrencePlot& plot, const std::filesystem::path& path);

/// Row-major matrix rows as a state list (helper for reservoir trajectories).
std::vector<Eigen::VectorXd> matrix_rows(const Eigen::MatrixXd& states);

}  // namespace hermnet
