#include "hermnet/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace hermnet {

int LayeredNet::input_dim() const {
  if (layers.empty()) throw std::invalid_argument("LayeredNet: no layers");
  return static_cast<int>(layers.front().weights.cols());
}

void LayeredNet::validate() const {
  if (layers.empty()) throw std::invalid_argument("LayeredNet: no layers");
  for (size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.bias.size() != layer.weights.rows())
      throw std::invalid_argument("LayeredNet: bias length must match weight rows");
    if (l > 0 && layers[l].weights.cols() != layers[l - 1].weights.rows())
      throw std::invalid_argument("LayeredNet: adjacent layer dimensions do not chain");
    if (!layer.weights.allFinite() || !layer.bias.allFinite())
      throw std::invalid_argument("LayeredNet: non-finite entries");
  }
}

std::vector<Eigen::VectorXd> forward(const LayeredNet& net, const Eigen::VectorXd& x0) {
  net.validate();
  if (x0.size() != net.layers.front().weights.cols())
    throw std::invalid_argument("forward: input dimension mismatch");
  std::vector<Eigen::VectorXd> states;
  states.reserve(net.layers.size() + 1);
  states.push_back(x0);
  Eigen::VectorXd x = x0;
  for (const auto& layer : net.layers) {
    Eigen::VectorXd pre = layer.weights * x + layer.bias;
    x = pre.unaryExpr([&net](double v) { return net.activation.eval(v); });
    states.push_back(x);
  }
  return states;
}

Eigen::MatrixXd layer_jacobian(const LayeredNet& net, const Eigen::VectorXd& x, int layer) {
  if (layer < 0 || layer >= net.depth())
    throw std::invalid_argument("layer_jacobian: layer index out of range");
  const auto& lyr = net.layers[static_cast<size_t>(layer)];
  if (x.size() != lyr.weights.cols())
    throw std::invalid_argument("layer_jacobian: state dimension mismatch");
  const Eigen::VectorXd pre = lyr.weights * x + lyr.bias;
  const Eigen::VectorXd gain =
      pre.unaryExpr([&net](double v) { return net.activation.deriv(v); });
  return gain.asDiagonal() * lyr.weights;
}

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::Stable: return "stable";
    case Regime::EdgeOfChaos: return "edge-of-chaos";
    case Regime::Chaotic: return "chaotic";
  }
  return "unknown";
}

CriticalityReport lyapunov(const LayeredNet& net, const std::vector<Eigen::VectorXd>& trajectory,
                           const LyapunovOptions& options) {
  net.validate();
  if (trajectory.empty()) throw std::invalid_argument("lyapunov: empty trajectory");

  CriticalityReport report;
  report.edge_tolerance = options.edge_tolerance;
  report.per_layer_log_spectra.resize(static_cast<size_t>(net.depth()));

  double best = -std::numeric_limits<double>::infinity();
  for (int l = 0; l < net.depth(); ++l) {
    const auto& layer = net.layers[static_cast<size_t>(l)];
    const bool square = layer.weights.rows() == layer.weights.cols();
    if (!square && !options.singular_value_fallback)
      throw std::invalid_argument(
          "lyapunov: rectangular layer has no eigenvalues; enable the singular-value fallback");

    const int count = square ? static_cast<int>(layer.weights.rows())
                             : static_cast<int>(std::min(layer.weights.rows(), layer.weights.cols()));
    std::vector<double> rank_sum(static_cast<size_t>(count), 0.0);
    for (const auto& state : trajectory) {
      const Eigen::MatrixXd jac = layer_jacobian(net, state, l);
      std::vector<double> mags(static_cast<size_t>(count));
      if (square) {
        Eigen::EigenSolver<Eigen::MatrixXd> solver(jac, false);
        for (int k = 0; k < count; ++k) mags[static_cast<size_t>(k)] = std::abs(solver.eigenvalues()(k));
      } else {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
        for (int k = 0; k < count; ++k) mags[static_cast<size_t>(k)] = svd.singularValues()(k);
      }
      std::sort(mags.begin(), mags.end(), std::greater<>());
      for (int k = 0; k < count; ++k) rank_sum[static_cast<size_t>(k)] += std::log(mags[static_cast<size_t>(k)]);
    }
    auto& spectra = report.per_layer_log_spectra[static_cast<size_t>(l)];
    spectra.resize(static_cast<size_t>(count));
    for (int k = 0; k < count; ++k) {
      spectra[static_cast<size_t>(k)] = rank_sum[static_cast<size_t>(k)] / static_cast<double>(trajectory.size());
      best = std::max(best, spectra[static_cast<size_t>(k)]);
    }
  }

  report.lyapunov = best;
  if (best < -options.edge_tolerance)
    report.regime = Regime::Stable;
  else if (best > options.edge_tolerance)
    report.regime = Regime::Chaotic;
  else
    report.regime = Regime::EdgeOfChaos;
  return report;
}

nlohmann::json CriticalityReport::to_json() const {
  return nlohmann::json{{"lambda", lyapunov},
                        {"regime", to_string(regime)},
                        {"edge_tolerance", edge_tolerance},
                        {"per_layer", per_layer_log_spectra}};
}

RecurrencePlot recurrence_plot(const std::vector<Eigen::VectorXd>& states, double epsilon) {
  if (states.empty()) throw std::invalid_argument("recurrence_plot: empty state list");
  if (!(epsilon > 0.0)) throw std::invalid_argument("recurrence_plot: epsilon must be positive");
  const int n = static_cast<int>(states.size());
  for (const auto& s : states)
    if (s.size() != states.front().size())
      throw std::invalid_argument("recurrence_plot: states must share a dimension");

  RecurrencePlot plot;
  plot.size = n;
  plot.threshold = epsilon;
  plot.matrix.assign(static_cast<size_t>(n) * n, 0);
  size_t ones = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const double d = (states[static_cast<size_t>(i)] - states[static_cast<size_t>(j)]).norm();
      const uint8_t hit = d < epsilon ? 1 : 0;
      plot.matrix[static_cast<size_t>(i) * n + j] = hit;
      plot.matrix[static_cast<size_t>(j) * n + i] = hit;
      ones += hit ? (i == j ? 1u : 2u) : 0u;
    }
  }
  plot.recurrence_rate = static_cast<double>(ones) / (static_cast<double>(n) * n);
  return plot;
}

double epsilon_from_fraction(const std::vector<Eigen::VectorXd>& states, double fraction) {
  if (states.size() < 2) throw std::invalid_argument("epsilon_from_fraction: need at least two states");
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw std::invalid_argument("epsilon_from_fraction: fraction must be in (0, 1]");
  double max_dist = 0.0;
  for (size_t i = 0; i < states.size(); ++i)
    for (size_t j = i + 1; j < states.size(); ++j)
      max_dist = std::max(max_dist, (states[i] - states[j]).norm());
  if (max_dist == 0.0) return std::numeric_limits<double>::min();
  return fraction * max_dist;
}

void write_pgm(const RecurrencePlot& plot, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_pgm: cannot open " + path.string());
  out << "P5\n" << plot.size << " " << plot.size << "\n255\n";
  // recurrent points render black
  for (uint8_t v : plot.matrix) out.put(v ? '\0' : static_cast<char>(255));
}

void write_recurrence_csv(const RecurrencePlot& plot, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_recurrence_csv: cannot open " + path.string());
  for (int i = 0; i < plot.size; ++i) {
    for (int j = 0; j < plot.size; ++j) {
      if (j) out << ',';
      out << static_cast<int>(plot.at(i, j));
    }
    out << '\n';
  }
}

std::vector<Eigen::VectorXd> matrix_rows(const Eigen::MatrixXd& states) {
  std::vector<Eigen::VectorXd> rows;
  rows.reserve(static_cast<size_t>(states.rows()));
  for (Eigen::Index i = 0; i < states.rows(); ++i) rows.push_back(states.row(i).transpose());
  return rows;
}

}  // namespace hermnet
