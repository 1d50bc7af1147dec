#include "hermnet/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "hermnet/rng.hpp"

namespace hermnet {

namespace {

// delayed-term lookup with linear interpolation over the stored trajectory;
// times before the start fall back to the constant initial history
double delayed_value(const std::vector<double>& history, double t_index, double initial) {
  if (t_index <= 0.0) return initial;
  const auto lo = static_cast<size_t>(std::floor(t_index));
  if (lo + 1 >= history.size()) return history.back();
  const double frac = t_index - static_cast<double>(lo);
  return (1.0 - frac) * history[lo] + frac * history[lo + 1];
}

}  // namespace

Eigen::VectorXd mackey_glass(int length, const MackeyGlassParams& params, uint64_t seed) {
  if (length < 1) throw std::invalid_argument("mackey_glass: length must be positive");
  if (!(params.dt > 0.0) || !(params.tau >= 0.0))
    throw std::invalid_argument("mackey_glass: dt must be positive and tau non-negative");
  if (static_cast<double>(length) <= params.tau / params.dt)
    throw std::invalid_argument("mackey_glass: length must exceed tau/dt");

  Rng rng(mix_seed(seed, 0x6d61636b65ull));
  const double initial = rng.uniform(0.8, 1.4);
  const double delay_steps = params.tau / params.dt;

  auto rhs = [&params](double x, double x_delayed) {
    return params.beta * x_delayed / (1.0 + std::pow(x_delayed, params.n)) - params.gamma * x;
  };

  std::vector<double> x;
  x.reserve(static_cast<size_t>(length));
  x.push_back(initial);
  for (int i = 1; i < length; ++i) {
    const double t = static_cast<double>(i - 1);
    const double xi = x.back();
    // RK4 with the delayed term interpolated at the three stage times
    const double d0 = delayed_value(x, t - delay_steps, initial);
    const double dh = delayed_value(x, t + 0.5 - delay_steps, initial);
    const double d1 = delayed_value(x, t + 1.0 - delay_steps, initial);
    const double k1 = rhs(xi, d0);
    const double k2 = rhs(xi + 0.5 * params.dt * k1, dh);
    const double k3 = rhs(xi + 0.5 * params.dt * k2, dh);
    const double k4 = rhs(xi + params.dt * k3, d1);
    x.push_back(xi + params.dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
  }
  return Eigen::Map<Eigen::VectorXd>(x.data(), length);
}

MultivariateSeries load_csv_series(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("load_csv_series: cannot open '" + path.string() + "'");

  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.empty()) throw std::invalid_argument("load_csv_series: empty file");

  auto split_cells = [&options](const std::string& text) {
    std::vector<std::string> cells;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, options.delimiter)) cells.push_back(cell);
    if (!text.empty() && text.back() == options.delimiter) cells.emplace_back();
    return cells;
  };
  auto parse_cell = [](const std::string& cell, double& out) {
    if (cell.empty()) return false;
    size_t pos = 0;
    try {
      out = std::stod(cell, &pos);
    } catch (const std::exception&) {
      return false;
    }
    while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) ++pos;
    return pos == cell.size();
  };

  bool has_header = options.header == 1;
  if (options.header == -1) {
    double ignored;
    has_header = false;
    for (const auto& cell : split_cells(lines.front()))
      if (!parse_cell(cell, ignored)) {
        has_header = true;
        break;
      }
  }

  MultivariateSeries series;
  size_t first_data = 0;
  size_t width = 0;
  if (has_header) {
    series.columns = split_cells(lines.front());
    width = series.columns.size();
    first_data = 1;
    if (lines.size() == 1) throw std::invalid_argument("load_csv_series: header but no data rows");
  }

  std::vector<std::vector<double>> rows;
  for (size_t i = first_data; i < lines.size(); ++i) {
    const auto cells = split_cells(lines[i]);
    if (width == 0) {
      width = cells.size();
      if (has_header && width != series.columns.size())
        throw std::invalid_argument("load_csv_series: header/data width mismatch");
    }
    const int data_index = static_cast<int>(i - first_data);
    if (cells.size() != width) {
      series.rejected_rows.push_back(data_index);
      continue;
    }
    std::vector<double> row(width);
    bool ok = true;
    for (size_t c = 0; c < width; ++c)
      if (!parse_cell(cells[c], row[c]) || !std::isfinite(row[c])) {
        ok = false;
        break;
      }
    if (!ok) {
      series.rejected_rows.push_back(data_index);
      continue;
    }
    rows.push_back(std::move(row));
  }
  if (has_header && series.columns.size() != width)
    throw std::invalid_argument("load_csv_series: header/data width mismatch");
  if (rows.empty()) throw std::invalid_argument("load_csv_series: no parseable data rows");

  if (series.columns.empty())
    for (size_t c = 0; c < width; ++c) series.columns.push_back("c" + std::to_string(c));

  series.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (size_t r = 0; r < rows.size(); ++r)
    for (size_t c = 0; c < width; ++c)
      series.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return series;
}

void write_csv_series(const std::filesystem::path& path, const Eigen::MatrixXd& values,
                      const std::vector<std::string>& columns) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv_series: cannot open '" + path.string() + "'");
  out.precision(17);
  if (!columns.empty()) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      if (c) out << ',';
      out << columns[static_cast<size_t>(c)];
    }
    out << '\n';
  }
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      if (c) out << ',';
      out << values(r, c);
    }
    out << '\n';
  }
}

ChronoSplit chrono_split(int total, double train_ratio, double val_ratio, double test_ratio) {
  if (total < 1) throw std::invalid_argument("chrono_split: empty series");
  if (!(train_ratio > 0.0 && val_ratio > 0.0 && test_ratio > 0.0))
    throw std::invalid_argument("chrono_split: ratios must be positive");
  if (std::abs(train_ratio + val_ratio + test_ratio - 1.0) > 1e-9)
    throw std::invalid_argument("chrono_split: ratios must sum to one");
  ChronoSplit split;
  split.total = total;
  split.train_end = static_cast<int>(std::floor(total * train_ratio));
  split.val_end = static_cast<int>(std::floor(total * (train_ratio + val_ratio)));
  return split;
}

MetricReport metrics(const Eigen::VectorXd& predicted, const Eigen::VectorXd& observed) {
  if (predicted.size() != observed.size() || predicted.size() == 0)
    throw std::invalid_argument("metrics: inputs must have equal positive length");
  const Eigen::VectorXd err = predicted - observed;
  MetricReport report;
  report.mae = err.array().abs().mean();
  report.rmse = std::sqrt(err.array().square().mean());
  const double delta = 1e-8 * observed.array().abs().maxCoeff();
  double mape_sum = 0.0;
  int mape_count = 0;
  for (Eigen::Index i = 0; i < observed.size(); ++i) {
    if (std::abs(observed(i)) > delta) {
      mape_sum += std::abs(err(i)) / std::abs(observed(i));
      ++mape_count;
    } else {
      ++report.mape_excluded;
    }
  }
  report.mape = mape_count > 0 ? mape_sum / mape_count : 0.0;
  return report;
}

MetricReport metrics(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& observed) {
  if (predicted.rows() != observed.rows() || predicted.cols() != observed.cols())
    throw std::invalid_argument("metrics: shape mismatch");
  Eigen::VectorXd p = Eigen::Map<const Eigen::VectorXd>(predicted.data(), predicted.size());
  Eigen::VectorXd o = Eigen::Map<const Eigen::VectorXd>(observed.data(), observed.size());
  return metrics(p, o);
}

ColumnStats train_column_stats(const Eigen::MatrixXd& values, const ChronoSplit& split) {
  if (split.total != values.rows())
    throw std::invalid_argument("train_column_stats: split does not match series length");
  if (split.train_size() < 2)
    throw std::invalid_argument("train_column_stats: train range too short");
  const auto train = values.topRows(split.train_size());
  ColumnStats stats;
  stats.mean = train.colwise().mean();
  Eigen::MatrixXd centered = train.rowwise() - stats.mean.transpose();
  stats.stddev = (centered.array().square().colwise().mean()).sqrt();
  for (Eigen::Index c = 0; c < stats.stddev.size(); ++c)
    if (stats.stddev(c) < 1e-12) stats.stddev(c) = 1.0;  // constant column
  return stats;
}

Eigen::MatrixXd normalize_columns(const Eigen::MatrixXd& values, const ColumnStats& stats) {
  Eigen::MatrixXd out = values.rowwise() - stats.mean.transpose();
  out.array().rowwise() /= stats.stddev.transpose().array();
  return out;
}

Dataset make_blobs(int samples, int classes, double spread, uint64_t seed) {
  if (samples < classes || classes < 2)
    throw std::invalid_argument("make_blobs: need at least one sample per class and two classes");
  Rng rng(mix_seed(seed, 0x626c6f62ull));
  Dataset data;
  data.num_classes = classes;
  data.features.resize(samples, 2);
  data.labels.resize(samples);
  const double radius = 2.0;
  for (int i = 0; i < samples; ++i) {
    const int cls = i % classes;
    const double angle = 2.0 * M_PI * cls / classes;
    data.features(i, 0) = radius * std::cos(angle) + spread * rng.normal();
    data.features(i, 1) = radius * std::sin(angle) + spread * rng.normal();
    data.labels(i) = cls;
  }
  return data;
}

Dataset make_moons(int samples, double noise, uint64_t seed) {
  if (samples < 2) throw std::invalid_argument("make_moons: need at least two samples");
  Rng rng(mix_seed(seed, 0x6d6f6f6eull));
  Dataset data;
  data.num_classes = 2;
  data.features.resize(samples, 2);
  data.labels.resize(samples);
  for (int i = 0; i < samples; ++i) {
    const int cls = i % 2;
    const double t = M_PI * rng.uniform();
    double x = std::cos(t);
    double y = std::sin(t);
    if (cls == 1) {
      x = 1.0 - x;
      y = 0.5 - y;
    }
    data.features(i, 0) = x + noise * rng.normal();
    data.features(i, 1) = y + noise * rng.normal();
    data.labels(i) = cls;
  }
  return data;
}

namespace {

uint32_t read_be32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::invalid_argument("idx: truncated header");
  return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) | (uint32_t(b[2]) << 8) | uint32_t(b[3]);
}

void write_be32(std::ostream& out, uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

IdxDataset load_idx(const std::filesystem::path& images_path,
                    const std::filesystem::path& labels_path, int downsample) {
  if (downsample < 1) throw std::invalid_argument("load_idx: downsample factor must be >= 1");
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw std::invalid_argument("load_idx: cannot open '" + images_path.string() + "'");
  std::ifstream lbl(labels_path, std::ios::binary);
  if (!lbl) throw std::invalid_argument("load_idx: cannot open '" + labels_path.string() + "'");

  if (read_be32(img) != 0x00000803u)
    throw std::invalid_argument("load_idx: bad image magic number");
  const int count = static_cast<int>(read_be32(img));
  const int rows = static_cast<int>(read_be32(img));
  const int cols = static_cast<int>(read_be32(img));

  if (read_be32(lbl) != 0x00000801u)
    throw std::invalid_argument("load_idx: bad label magic number");
  const int label_count = static_cast<int>(read_be32(lbl));
  if (label_count != count)
    throw std::invalid_argument("load_idx: image/label count mismatch");

  if (rows % downsample != 0 || cols % downsample != 0)
    throw std::invalid_argument("load_idx: downsample must divide the image size");

  std::vector<unsigned char> pixels(static_cast<size_t>(count) * rows * cols);
  img.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (img.gcount() != static_cast<std::streamsize>(pixels.size()))
    throw std::invalid_argument("load_idx: truncated image payload");

  std::vector<unsigned char> labels(static_cast<size_t>(count));
  lbl.read(reinterpret_cast<char*>(labels.data()), count);
  if (lbl.gcount() != static_cast<std::streamsize>(count))
    throw std::invalid_argument("load_idx: truncated label payload");

  IdxDataset data;
  data.image_rows = rows / downsample;
  data.image_cols = cols / downsample;
  data.images.resize(count, data.image_rows * data.image_cols);
  data.labels.resize(count);
  const double pool = static_cast<double>(downsample) * downsample;
  for (int i = 0; i < count; ++i) {
    data.labels(i) = labels[static_cast<size_t>(i)];
    for (int r = 0; r < data.image_rows; ++r) {
      for (int c = 0; c < data.image_cols; ++c) {
        double sum = 0.0;
        for (int dr = 0; dr < downsample; ++dr)
          for (int dc = 0; dc < downsample; ++dc) {
            const size_t idx = static_cast<size_t>(i) * rows * cols +
                               static_cast<size_t>(r * downsample + dr) * cols +
                               static_cast<size_t>(c * downsample + dc);
            sum += pixels[idx];
          }
        data.images(i, r * data.image_cols + c) = sum / pool / 255.0;
      }
    }
  }
  return data;
}

void write_idx(const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path, const IdxDataset& data) {
  const int count = static_cast<int>(data.images.rows());
  std::ofstream img(images_path, std::ios::binary);
  if (!img) throw std::runtime_error("write_idx: cannot open '" + images_path.string() + "'");
  write_be32(img, 0x00000803u);
  write_be32(img, static_cast<uint32_t>(count));
  write_be32(img, static_cast<uint32_t>(data.image_rows));
  write_be32(img, static_cast<uint32_t>(data.image_cols));
  for (int i = 0; i < count; ++i)
    for (int p = 0; p < data.images.cols(); ++p) {
      const double v = std::clamp(data.images(i, p), 0.0, 1.0);
      img.put(static_cast<char>(std::lround(v * 255.0)));
    }

  std::ofstream lbl(labels_path, std::ios::binary);
  if (!lbl) throw std::runtime_error("write_idx: cannot open '" + labels_path.string() + "'");
  write_be32(lbl, 0x00000801u);
  write_be32(lbl, static_cast<uint32_t>(count));
  for (int i = 0; i < count; ++i) lbl.put(static_cast<char>(data.labels(i)));
}

Dataset idx_to_dataset(const IdxDataset& data) {
  Dataset out;
  out.features = data.images;
  out.labels = data.labels;
  out.num_classes = data.labels.size() > 0 ? data.labels.maxCoeff() + 1 : 0;
  return out;
}

}  // namespace hermnet
