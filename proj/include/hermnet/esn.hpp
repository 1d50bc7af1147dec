#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "hermnet/activations.hpp"

namespace hermnet {

/// Stacked-reservoir configuration. spectral_radius < 1 is the echo-state
/// precondition; larger values are accepted so the contrapositive can be
/// probed, but fading memory is not guaranteed there.
struct DeepEsnConfig {
  std::vector<int> layer_sizes = {100};
  int input_dim = 1;
  double spectral_radius = 0.9;
  double input_scaling = 1.0;
  double leak_rate = 1.0;
  int washout = 100;
  double ridge_lambda = 1e-8;
  ActivationFn activation = ActivationFn::tanh_fn();
  uint64_t seed = 0;

  int num_layers() const { return static_cast<int>(layer_sizes.size()); }
  void validate() const;

  static DeepEsnConfig uniform(int depth, int width);

  nlohmann::json to_json() const;
  static DeepEsnConfig from_json(const nlohmann::json& j);
};

/// Untrained reservoir stack: input map, per-layer recurrent matrices, and
/// the inter-layer maps feeding each deeper layer.
struct EsnReservoir {
  DeepEsnConfig config;
  Eigen::MatrixXd input_weights;             // layer_sizes[0] x input_dim
  std::vector<Eigen::MatrixXd> recurrent;    // one square matrix per layer
  std::vector<Eigen::MatrixXd> inter_layer;  // layer_sizes[l] x layer_sizes[l-1], l >= 1
};

/// Deterministic build from the seed: sparse uniform(-1,1) matrices (density
/// 0.1), recurrent parts rescaled to the exact target spectral radius.
EsnReservoir build_esn(const DeepEsnConfig& config);

double spectral_radius_of(const Eigen::MatrixXd& m);

/// Leaky-integrated state trajectories per layer, with the first `washout`
/// steps dropped: x(n) = (1-a) x(n-1) + a act(W_in u(n) + W x(n-1)).
/// Layer l > 0 is driven by layer l-1's current state. Rows are time steps.
/// States start at zero unless `initial` supplies one vector per layer.
std::vector<Eigen::MatrixXd> run_states(const EsnReservoir& reservoir,
                                        const Eigen::MatrixXd& inputs,
                                        const std::vector<Eigen::VectorXd>* initial = nullptr);

/// Per-layer states stacked column-wise into one feature matrix.
Eigen::MatrixXd collect_features(const std::vector<Eigen::MatrixXd>& layer_states);

/// Ridge readout over [features, 1]: solves (S^T S + lambda I) W = S^T Y.
/// Throws std::runtime_error when lambda = 0 meets a singular system.
Eigen::MatrixXd fit_readout(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets,
                            double ridge_lambda);

struct TrainedEsn {
  EsnReservoir reservoir;
  Eigen::MatrixXd readout;  // (total state dim + 1) x output dim
  double train_rmse = 0.0;
};

/// One-step-ahead teacher-forced training: reservoir runs over series rows
/// [0, T-1), post-washout states regress onto the next row.
TrainedEsn train_esn(const DeepEsnConfig& config, const Eigen::MatrixXd& series);

/// Teacher-forced one-step-ahead predictions over a series. Row k of the
/// result predicts series row washout+1+k; length T-1-washout.
Eigen::MatrixXd predict(const TrainedEsn& model, const Eigen::MatrixXd& series);

/// First observed row index covered by predict()'s output.
inline int prediction_offset(const TrainedEsn& model) {
  return model.reservoir.config.washout + 1;
}

struct AnomalyFlag {
  int time_index = 0;
  double predicted = 0.0;
  double observed = 0.0;
  double error = 0.0;
  double threshold = 0.0;
};

/// Flags exactly the indices where |predicted - observed| > threshold.
std::vector<AnomalyFlag> flag_anomalies(const Eigen::VectorXd& predicted,
                                        const Eigen::VectorXd& observed, double threshold);

/// Versioned JSON descriptor plus a little-endian double sidecar.
void save_esn(const TrainedEsn& model, const std::filesystem::path& json_path,
              const std::filesystem::path& matrix_path);
TrainedEsn load_esn(const std::filesystem::path& json_path);

}  // namespace hermnet
