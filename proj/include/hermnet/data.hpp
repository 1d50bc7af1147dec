#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hermnet {

struct MackeyGlassParams {
  double tau = 17.0;
  double beta = 0.2;
  double gamma = 0.1;
  double n = 10.0;
  double dt = 0.1;
};

/// Delay-differential series x' = beta x(t-tau)/(1 + x(t-tau)^n) - gamma x,
/// integrated with fixed-step RK4 and linear interpolation of the delayed
/// term. The constant initial history is drawn from the seed.
Eigen::VectorXd mackey_glass(int length, const MackeyGlassParams& params = {}, uint64_t seed = 0);

struct MultivariateSeries {
  Eigen::MatrixXd values;  // T x D, finite entries only
  std::vector<std::string> columns;
  std::vector<int> rejected_rows;  // 0-based data-row indices that failed to parse
};

struct CsvOptions {
  /// -1 auto-detect (non-numeric first row), 0 none, 1 present.
  int header = -1;
  char delimiter = ',';
};

MultivariateSeries load_csv_series(const std::filesystem::path& path, const CsvOptions& options = {});

void write_csv_series(const std::filesystem::path& path, const Eigen::MatrixXd& values,
                      const std::vector<std::string>& columns = {});

/// Contiguous train/validation/test ranges over [0, T).
struct ChronoSplit {
  int total = 0;
  int train_end = 0;  // train = [0, train_end)
  int val_end = 0;    // validation = [train_end, val_end), test = [val_end, total)

  int train_size() const { return train_end; }
  int val_size() const { return val_end - train_end; }
  int test_size() const { return total - val_end; }
};

/// Boundaries at floor(T * cumulative ratio); ratios must sum to one.
ChronoSplit chrono_split(int total, double train_ratio, double val_ratio, double test_ratio);

struct MetricReport {
  double mae = 0.0;
  double rmse = 0.0;
  double mape = 0.0;
  int mape_excluded = 0;  // near-zero observations skipped by the guard
};

MetricReport metrics(const Eigen::VectorXd& predicted, const Eigen::VectorXd& observed);
MetricReport metrics(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& observed);

/// Per-column normalization stats; fit on the train range only.
struct ColumnStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;
};

ColumnStats train_column_stats(const Eigen::MatrixXd& values, const ChronoSplit& split);
Eigen::MatrixXd normalize_columns(const Eigen::MatrixXd& values, const ColumnStats& stats);

/// Labeled dense dataset for the MLP experiments.
struct Dataset {
  Eigen::MatrixXd features;  // n x d
  Eigen::VectorXi labels;    // classification targets
  Eigen::MatrixXd targets;   // regression targets (optional)
  int num_classes = 0;
};

/// Gaussian class blobs on a circle.
Dataset make_blobs(int samples, int classes, double spread, uint64_t seed);
/// Interleaved half-circles, two classes.
Dataset make_moons(int samples, double noise, uint64_t seed);

struct IdxDataset {
  int image_rows = 0;
  int image_cols = 0;
  Eigen::MatrixXd images;  // n x (rows*cols), scaled to [0,1]
  Eigen::VectorXi labels;
};

/// IDX container (big-endian, magic 0x803 for images / 0x801 for labels),
/// optional mean-pooling by an integer factor.
IdxDataset load_idx(const std::filesystem::path& images_path,
                    const std::filesystem::path& labels_path, int downsample = 1);

/// Writes images back to the IDX container, quantizing to bytes.
void write_idx(const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path, const IdxDataset& data);

Dataset idx_to_dataset(const IdxDataset& data);

}  // namespace hermnet
