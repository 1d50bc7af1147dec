#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hermnet/activations.hpp"
#include "hermnet/data.hpp"

namespace hermnet {

enum class LossKind { CrossEntropy, SquaredError };

struct MlpConfig {
  std::vector<int> hidden_widths = {16, 16};
  ActivationFn activation = ActivationFn::sigmoid();
  double learning_rate = 0.1;
  int batch_size = 32;
  int epochs = 50;
  uint64_t seed = 0;
  LossKind loss = LossKind::CrossEntropy;
  int probe_size = 32;  // fixed batch used for hidden-state snapshots

  void validate() const;
};

struct TrainingTrace {
  std::vector<double> epoch_loss;  // full-dataset loss at each epoch end
  std::vector<Eigen::VectorXd> hidden_snapshots;  // last hidden layer over the probe batch
  double final_accuracy = 0.0;
  int diverged_epoch = -1;  // >= 0 when the loss left the finite range

  bool diverged() const { return diverged_epoch >= 0; }
};

/// Mini-batch SGD; hidden layers use the configured activation, the output
/// layer is linear (softmax under cross-entropy). Weights start Gaussian
/// with variance 1/fan-in. Deterministic for a given seed.
TrainingTrace train_mlp(const MlpConfig& config, const Dataset& data);

/// Max relative difference between analytic and central finite-difference
/// gradients over all parameters on a small batch.
double gradient_check(const MlpConfig& config, const Dataset& data, int batch = 8,
                      double fd_step = 1e-5);

struct SweepEntry {
  std::string id;
  double param_value = 0.0;
  MlpConfig config;
};

struct SweepRow {
  std::string id;
  double param_value = 0.0;
  double final_loss = 0.0;
  int epochs_to_threshold = -1;  // -1 when the threshold was never reached
  bool diverged = false;
};

/// Runs every config and reports epochs-to-threshold against 110% of the best
/// final loss in the sweep. Each run's RNG comes from (its seed, its id), so
/// parallel and serial execution give identical rows.
std::vector<SweepRow> sweep(const std::vector<SweepEntry>& entries, const Dataset& data,
                            int threads = 1);

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows);
void write_trace_csv(const std::filesystem::path& path, const TrainingTrace& trace);

}  // namespace hermnet
