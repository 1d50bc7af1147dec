#include "hermnet/mlp.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <stdexcept>

#include "hermnet/checksum.hpp"
#include "hermnet/rng.hpp"

namespace hermnet {

void MlpConfig::validate() const {
  for (int w : hidden_widths)
    if (w < 1) throw std::invalid_argument("MlpConfig: hidden widths must be positive");
  // zero is allowed so a frozen net can serve as a baseline trace
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("MlpConfig: learning rate must be non-negative");
  if (batch_size < 1) throw std::invalid_argument("MlpConfig: batch size must be at least 1");
  if (epochs < 0) throw std::invalid_argument("MlpConfig: epochs must be non-negative");
}

namespace {

struct Net {
  std::vector<Eigen::MatrixXd> weights;  // out x in
  std::vector<Eigen::VectorXd> biases;

  int depth() const { return static_cast<int>(weights.size()); }
};

struct ForwardPass {
  std::vector<Eigen::MatrixXd> pre;   // pre-activations per layer, rows = samples
  std::vector<Eigen::MatrixXd> post;  // post[0] is the input batch
};

int output_dim(const MlpConfig& config, const Dataset& data) {
  if (config.loss == LossKind::CrossEntropy) {
    if (data.num_classes < 2)
      throw std::invalid_argument("train_mlp: cross-entropy needs at least two classes");
    return data.num_classes;
  }
  if (data.targets.rows() != data.features.rows())
    throw std::invalid_argument("train_mlp: squared error needs aligned targets");
  return static_cast<int>(data.targets.cols());
}

Net init_net(const MlpConfig& config, int input_dim, int out_dim, Rng& rng) {
  std::vector<int> dims;
  dims.push_back(input_dim);
  for (int w : config.hidden_widths) dims.push_back(w);
  dims.push_back(out_dim);

  Net net;
  for (size_t l = 1; l < dims.size(); ++l) {
    const int fan_in = dims[l - 1];
    const double sigma = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Eigen::MatrixXd w(dims[l], fan_in);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = sigma * rng.normal();
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(Eigen::VectorXd::Zero(dims[l]));
  }
  return net;
}

ForwardPass forward_batch(const Net& net, const MlpConfig& config, const Eigen::MatrixXd& batch) {
  ForwardPass fp;
  fp.post.push_back(batch);
  for (int l = 0; l < net.depth(); ++l) {
    Eigen::MatrixXd z = fp.post.back() * net.weights[static_cast<size_t>(l)].transpose();
    z.rowwise() += net.biases[static_cast<size_t>(l)].transpose();
    fp.pre.push_back(z);
    if (l + 1 < net.depth())
      fp.post.push_back(z.unaryExpr([&config](double v) { return config.activation.eval(v); }));
    else
      fp.post.push_back(z);  // linear output layer
  }
  return fp;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd p = z;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    const double m = p.row(r).maxCoeff();
    p.row(r) = (p.row(r).array() - m).exp();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

double batch_loss(const MlpConfig& config, const Eigen::MatrixXd& output,
                  const Eigen::VectorXi& labels, const Eigen::MatrixXd& targets) {
  if (config.loss == LossKind::CrossEntropy) {
    const Eigen::MatrixXd p = softmax_rows(output);
    double loss = 0.0;
    for (Eigen::Index r = 0; r < p.rows(); ++r)
      loss -= std::log(std::max(p(r, labels(r)), 1e-300));
    return loss / static_cast<double>(p.rows());
  }
  return 0.5 * (output - targets).array().square().rowwise().sum().mean();
}

// gradient of the batch loss at the output pre-activation
Eigen::MatrixXd output_delta(const MlpConfig& config, const Eigen::MatrixXd& output,
                             const Eigen::VectorXi& labels, const Eigen::MatrixXd& targets) {
  const double scale = 1.0 / static_cast<double>(output.rows());
  if (config.loss == LossKind::CrossEntropy) {
    Eigen::MatrixXd delta = softmax_rows(output);
    for (Eigen::Index r = 0; r < delta.rows(); ++r) delta(r, labels(r)) -= 1.0;
    return delta * scale;
  }
  return (output - targets) * scale;
}

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

Gradients backward_batch(const Net& net, const MlpConfig& config, const ForwardPass& fp,
                         const Eigen::VectorXi& labels, const Eigen::MatrixXd& targets) {
  Gradients grads;
  grads.weights.resize(static_cast<size_t>(net.depth()));
  grads.biases.resize(static_cast<size_t>(net.depth()));

  Eigen::MatrixXd delta = output_delta(config, fp.post.back(), labels, targets);
  for (int l = net.depth() - 1; l >= 0; --l) {
    grads.weights[static_cast<size_t>(l)] = delta.transpose() * fp.post[static_cast<size_t>(l)];
    grads.biases[static_cast<size_t>(l)] = delta.colwise().sum().transpose();
    if (l > 0) {
      Eigen::MatrixXd dh = delta * net.weights[static_cast<size_t>(l)];
      const Eigen::MatrixXd& z = fp.pre[static_cast<size_t>(l - 1)];
      delta = dh.cwiseProduct(
          z.unaryExpr([&config](double v) { return config.activation.deriv(v); }));
    }
  }
  return grads;
}

double dataset_loss(const Net& net, const MlpConfig& config, const Dataset& data) {
  const ForwardPass fp = forward_batch(net, config, data.features);
  return batch_loss(config, fp.post.back(), data.labels, data.targets);
}

}  // namespace

TrainingTrace train_mlp(const MlpConfig& config, const Dataset& data) {
  config.validate();
  const int n = static_cast<int>(data.features.rows());
  if (n < 1) throw std::invalid_argument("train_mlp: empty dataset");
  const int out_dim = output_dim(config, data);

  Rng rng(mix_seed(config.seed, 0x6d6c70ull));
  Net net = init_net(config, static_cast<int>(data.features.cols()), out_dim, rng);

  const int probe = std::min(config.probe_size, n);
  const Eigen::MatrixXd probe_batch = data.features.topRows(probe);

  TrainingTrace trace;
  std::vector<int> order(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (int start = 0; start < n; start += config.batch_size) {
      const int count = std::min(config.batch_size, n - start);
      Eigen::MatrixXd batch(count, data.features.cols());
      Eigen::VectorXi labels(count);
      Eigen::MatrixXd targets(count, config.loss == LossKind::SquaredError ? out_dim : 0);
      for (int i = 0; i < count; ++i) {
        const int idx = order[static_cast<size_t>(start + i)];
        batch.row(i) = data.features.row(idx);
        if (config.loss == LossKind::CrossEntropy) labels(i) = data.labels(idx);
        else targets.row(i) = data.targets.row(idx);
      }
      const ForwardPass fp = forward_batch(net, config, batch);
      const Gradients grads = backward_batch(net, config, fp, labels, targets);
      for (int l = 0; l < net.depth(); ++l) {
        net.weights[static_cast<size_t>(l)] -= config.learning_rate * grads.weights[static_cast<size_t>(l)];
        net.biases[static_cast<size_t>(l)] -= config.learning_rate * grads.biases[static_cast<size_t>(l)];
      }
    }

    const double loss = dataset_loss(net, config, data);
    if (!std::isfinite(loss)) {
      trace.diverged_epoch = epoch;
      return trace;
    }
    trace.epoch_loss.push_back(loss);
    if (!config.hidden_widths.empty()) {
      const ForwardPass fp = forward_batch(net, config, probe_batch);
      const Eigen::MatrixXd& hidden = fp.post[fp.post.size() - 2];
      trace.hidden_snapshots.emplace_back(
          Eigen::Map<const Eigen::VectorXd>(hidden.data(), hidden.size()));
    }
  }

  if (config.loss == LossKind::CrossEntropy && config.epochs > 0) {
    const ForwardPass fp = forward_batch(net, config, data.features);
    int correct = 0;
    for (int i = 0; i < n; ++i) {
      Eigen::Index arg;
      fp.post.back().row(i).maxCoeff(&arg);
      if (static_cast<int>(arg) == data.labels(i)) ++correct;
    }
    trace.final_accuracy = static_cast<double>(correct) / n;
  }
  return trace;
}

double gradient_check(const MlpConfig& config, const Dataset& data, int batch, double fd_step) {
  config.validate();
  const int out_dim = output_dim(config, data);
  const int count = std::min<int>(batch, static_cast<int>(data.features.rows()));

  Rng rng(mix_seed(config.seed, 0x6d6c70ull));
  Net net = init_net(config, static_cast<int>(data.features.cols()), out_dim, rng);

  const Eigen::MatrixXd features = data.features.topRows(count);
  const Eigen::VectorXi labels =
      config.loss == LossKind::CrossEntropy ? data.labels.head(count) : Eigen::VectorXi();
  const Eigen::MatrixXd targets =
      config.loss == LossKind::SquaredError ? data.targets.topRows(count) : Eigen::MatrixXd();

  const ForwardPass fp = forward_batch(net, config, features);
  const Gradients grads = backward_batch(net, config, fp, labels, targets);

  auto loss_at = [&]() {
    const ForwardPass f = forward_batch(net, config, features);
    return batch_loss(config, f.post.back(), labels, targets);
  };

  double max_rel = 0.0;
  auto check_param = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + fd_step;
    const double hi = loss_at();
    param = saved - fd_step;
    const double lo = loss_at();
    param = saved;
    const double numeric = (hi - lo) / (2.0 * fd_step);
    const double scale = std::max({1e-8, std::abs(analytic), std::abs(numeric)});
    max_rel = std::max(max_rel, std::abs(analytic - numeric) / scale);
  };

  for (int l = 0; l < net.depth(); ++l) {
    auto& w = net.weights[static_cast<size_t>(l)];
    const auto& gw = grads.weights[static_cast<size_t>(l)];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) check_param(w(r, c), gw(r, c));
    auto& b = net.biases[static_cast<size_t>(l)];
    const auto& gb = grads.biases[static_cast<size_t>(l)];
    for (Eigen::Index r = 0; r < b.size(); ++r) check_param(b(r), gb(r));
  }
  return max_rel;
}

std::vector<SweepRow> sweep(const std::vector<SweepEntry>& entries, const Dataset& data,
                            int threads) {
  std::vector<TrainingTrace> traces(entries.size());
  auto run_one = [&](size_t i) {
    MlpConfig cfg = entries[i].config;
    cfg.seed = mix_seed(cfg.seed, fnv1a64(entries[i].id));
    traces[i] = train_mlp(cfg, data);
  };
  if (threads <= 1) {
    for (size_t i = 0; i < entries.size(); ++i) run_one(i);
  } else {
    std::vector<std::future<void>> workers;
    std::atomic<size_t> next{0};
    for (int t = 0; t < threads; ++t)
      workers.push_back(std::async(std::launch::async, [&]() {
        for (size_t i = next.fetch_add(1); i < entries.size(); i = next.fetch_add(1)) run_one(i);
      }));
    for (auto& w : workers) w.get();
  }

  double best_final = std::numeric_limits<double>::infinity();
  for (const auto& t : traces)
    if (!t.diverged() && !t.epoch_loss.empty())
      best_final = std::min(best_final, t.epoch_loss.back());
  const double threshold = 1.1 * best_final;

  std::vector<SweepRow> rows;
  rows.reserve(entries.size());
  for (size_t i = 0; i < entries.size(); ++i) {
    SweepRow row;
    row.id = entries[i].id;
    row.param_value = entries[i].param_value;
    row.diverged = traces[i].diverged();
    if (!row.diverged && !traces[i].epoch_loss.empty()) {
      row.final_loss = traces[i].epoch_loss.back();
      for (size_t e = 0; e < traces[i].epoch_loss.size(); ++e)
        if (traces[i].epoch_loss[e] <= threshold) {
          row.epochs_to_threshold = static_cast<int>(e) + 1;
          break;
        }
    } else {
      row.final_loss = std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_sweep_csv: cannot open '" + path.string() + "'");
  out.precision(17);
  out << "config_id,param_value,final_loss,epochs_to_threshold,diverged\n";
  for (const auto& r : rows)
    out << r.id << ',' << r.param_value << ',' << r.final_loss << ',' << r.epochs_to_threshold
        << ',' << (r.diverged ? 1 : 0) << '\n';
}

void write_trace_csv(const std::filesystem::path& path, const TrainingTrace& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trace_csv: cannot open '" + path.string() + "'");
  out.precision(17);
  out << "epoch,loss\n";
  for (size_t e = 0; e < trace.epoch_loss.size(); ++e)
    out << (e + 1) << ',' << trace.epoch_loss[e] << '\n';
}

}  // namespace hermnet
