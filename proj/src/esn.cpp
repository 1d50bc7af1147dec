#include "hermnet/esn.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "hermnet/rng.hpp"

namespace hermnet {

void DeepEsnConfig::validate() const {
  if (layer_sizes.empty()) throw std::invalid_argument("DeepEsnConfig: need at least one layer");
  for (int s : layer_sizes)
    if (s < 1) throw std::invalid_argument("DeepEsnConfig: layer sizes must be positive");
  if (input_dim < 1) throw std::invalid_argument("DeepEsnConfig: input_dim must be positive");
  if (!(spectral_radius > 0.0) || !std::isfinite(spectral_radius))
    throw std::invalid_argument("DeepEsnConfig: spectral_radius must be positive and finite");
  if (!(leak_rate > 0.0 && leak_rate <= 1.0))
    throw std::invalid_argument("DeepEsnConfig: leak_rate must be in (0, 1]");
  if (washout < 0) throw std::invalid_argument("DeepEsnConfig: washout must be non-negative");
  if (ridge_lambda < 0.0) throw std::invalid_argument("DeepEsnConfig: ridge_lambda must be >= 0");
  if (!std::isfinite(input_scaling))
    throw std::invalid_argument("DeepEsnConfig: input_scaling must be finite");
}

DeepEsnConfig DeepEsnConfig::uniform(int depth, int width) {
  if (depth < 1 || width < 1)
    throw std::invalid_argument("DeepEsnConfig::uniform: depth and width must be positive");
  DeepEsnConfig cfg;
  cfg.layer_sizes.assign(static_cast<size_t>(depth), width);
  return cfg;
}

nlohmann::json DeepEsnConfig::to_json() const {
  nlohmann::json j{{"layer_sizes", layer_sizes},
                   {"input_dim", input_dim},
                   {"spectral_radius", spectral_radius},
                   {"input_scaling", input_scaling},
                   {"leak_rate", leak_rate},
                   {"washout", washout},
                   {"ridge_lambda", ridge_lambda},
                   {"seed", seed}};
  if (activation.kind() == ActKind::Hp)
    j["activation"] = activation.spectrum().to_json();
  else if (activation.kind() == ActKind::Rbf)
    j["activation"] = "rbf:c=" + std::to_string(activation.rbf_center()) +
                      ",s=" + std::to_string(activation.rbf_scale());
  else
    j["activation"] = to_string(activation.kind());
  return j;
}

DeepEsnConfig DeepEsnConfig::from_json(const nlohmann::json& j) {
  DeepEsnConfig cfg;
  cfg.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
  cfg.input_dim = j.at("input_dim").get<int>();
  cfg.spectral_radius = j.at("spectral_radius").get<double>();
  cfg.input_scaling = j.at("input_scaling").get<double>();
  cfg.leak_rate = j.at("leak_rate").get<double>();
  cfg.washout = j.at("washout").get<int>();
  cfg.ridge_lambda = j.at("ridge_lambda").get<double>();
  cfg.seed = j.at("seed").get<uint64_t>();
  const auto& act = j.at("activation");
  cfg.activation = act.is_object() ? ActivationFn::hp(HermiteSpectrum::from_json(act))
                                   : parse_activation(act.get<std::string>());
  cfg.validate();
  return cfg;
}

double spectral_radius_of(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("spectral_radius_of: matrix not square");
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

namespace {

// sparse uniform(-1,1), redrawn until the matrix is usable for rescaling
Eigen::MatrixXd random_sparse(Rng& rng, int rows, int cols, double density) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double keep = rng.uniform();
      const double value = rng.uniform(-1.0, 1.0);
      m(r, c) = keep < density ? value : 0.0;
    }
  return m;
}

Eigen::MatrixXd random_recurrent(Rng& rng, int size, double density, double target_radius) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Eigen::MatrixXd m = random_sparse(rng, size, size, density);
    const double radius = spectral_radius_of(m);
    if (radius > 1e-9) return m * (target_radius / radius);
  }
  throw std::runtime_error("build_esn: could not draw a reservoir with nonzero spectral radius");
}

}  // namespace

EsnReservoir build_esn(const DeepEsnConfig& config) {
  config.validate();
  constexpr double kDensity = 0.1;
  EsnReservoir res;
  res.config = config;

  Rng input_rng(mix_seed(config.seed, 1));
  res.input_weights =
      config.input_scaling * random_sparse(input_rng, config.layer_sizes[0], config.input_dim, 1.0);

  for (int l = 0; l < config.num_layers(); ++l) {
    Rng layer_rng(mix_seed(config.seed, 100 + static_cast<uint64_t>(l)));
    res.recurrent.push_back(random_recurrent(layer_rng, config.layer_sizes[static_cast<size_t>(l)],
                                             kDensity, config.spectral_radius));
    if (l > 0) {
      Rng inter_rng(mix_seed(config.seed, 200 + static_cast<uint64_t>(l)));
      res.inter_layer.push_back(random_sparse(inter_rng, config.layer_sizes[static_cast<size_t>(l)],
                                              config.layer_sizes[static_cast<size_t>(l - 1)],
                                              kDensity));
    }
  }
  return res;
}

std::vector<Eigen::MatrixXd> run_states(const EsnReservoir& reservoir,
                                        const Eigen::MatrixXd& inputs,
                                        const std::vector<Eigen::VectorXd>* initial) {
  const auto& cfg = reservoir.config;
  if (inputs.cols() != cfg.input_dim)
    throw std::invalid_argument("run_states: input dimension mismatch");
  const int steps = static_cast<int>(inputs.rows());
  if (steps <= cfg.washout)
    throw std::invalid_argument("run_states: series not longer than washout");

  const int layers = cfg.num_layers();
  std::vector<Eigen::VectorXd> state(static_cast<size_t>(layers));
  for (int l = 0; l < layers; ++l)
    state[static_cast<size_t>(l)] = Eigen::VectorXd::Zero(cfg.layer_sizes[static_cast<size_t>(l)]);
  if (initial != nullptr) {
    if (initial->size() != static_cast<size_t>(layers))
      throw std::invalid_argument("run_states: need one initial state per layer");
    for (int l = 0; l < layers; ++l) {
      if ((*initial)[static_cast<size_t>(l)].size() != cfg.layer_sizes[static_cast<size_t>(l)])
        throw std::invalid_argument("run_states: initial state dimension mismatch");
      state[static_cast<size_t>(l)] = (*initial)[static_cast<size_t>(l)];
    }
  }

  std::vector<Eigen::MatrixXd> trajectories(static_cast<size_t>(layers));
  for (int l = 0; l < layers; ++l)
    trajectories[static_cast<size_t>(l)].resize(steps - cfg.washout,
                                                cfg.layer_sizes[static_cast<size_t>(l)]);

  const double a = cfg.leak_rate;
  for (int n = 0; n < steps; ++n) {
    for (int l = 0; l < layers; ++l) {
      Eigen::VectorXd pre = reservoir.recurrent[static_cast<size_t>(l)] * state[static_cast<size_t>(l)];
      if (l == 0)
        pre += reservoir.input_weights * inputs.row(n).transpose();
      else
        pre += reservoir.inter_layer[static_cast<size_t>(l - 1)] * state[static_cast<size_t>(l - 1)];
      const Eigen::VectorXd activated =
          pre.unaryExpr([&cfg](double v) { return cfg.activation.eval(v); });
      state[static_cast<size_t>(l)] = (1.0 - a) * state[static_cast<size_t>(l)] + a * activated;
      if (n >= cfg.washout)
        trajectories[static_cast<size_t>(l)].row(n - cfg.washout) = state[static_cast<size_t>(l)].transpose();
    }
  }
  return trajectories;
}

Eigen::MatrixXd collect_features(const std::vector<Eigen::MatrixXd>& layer_states) {
  if (layer_states.empty()) throw std::invalid_argument("collect_features: no layers");
  Eigen::Index cols = 0;
  for (const auto& m : layer_states) cols += m.cols();
  Eigen::MatrixXd features(layer_states.front().rows(), cols);
  Eigen::Index offset = 0;
  for (const auto& m : layer_states) {
    features.middleCols(offset, m.cols()) = m;
    offset += m.cols();
  }
  return features;
}

Eigen::MatrixXd fit_readout(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets,
                            double ridge_lambda) {
  if (features.rows() != targets.rows())
    throw std::invalid_argument("fit_readout: features/targets row mismatch");
  if (ridge_lambda < 0.0) throw std::invalid_argument("fit_readout: negative ridge_lambda");

  Eigen::MatrixXd design(features.rows(), features.cols() + 1);
  design.leftCols(features.cols()) = features;
  design.rightCols(1).setOnes();

  const Eigen::MatrixXd gram = design.transpose() * design;
  const Eigen::MatrixXd rhs = design.transpose() * targets;
  if (ridge_lambda == 0.0) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
    if (!lu.isInvertible())
      throw std::runtime_error("fit_readout: singular normal equations at lambda = 0; raise lambda");
    return lu.solve(rhs);
  }
  Eigen::MatrixXd regularized = gram;
  regularized.diagonal().array() += ridge_lambda;
  return Eigen::LDLT<Eigen::MatrixXd>(regularized).solve(rhs);
}

TrainedEsn train_esn(const DeepEsnConfig& config, const Eigen::MatrixXd& series) {
  config.validate();
  if (series.rows() < config.washout + 3)
    throw std::invalid_argument("train_esn: series too short for the washout");

  TrainedEsn model;
  model.reservoir = build_esn(config);
  const Eigen::MatrixXd inputs = series.topRows(series.rows() - 1);
  const auto states = run_states(model.reservoir, inputs);
  const Eigen::MatrixXd features = collect_features(states);
  const Eigen::MatrixXd targets = series.bottomRows(series.rows() - 1 - config.washout);
  model.readout = fit_readout(features, targets, config.ridge_lambda);

  Eigen::MatrixXd design(features.rows(), features.cols() + 1);
  design.leftCols(features.cols()) = features;
  design.rightCols(1).setOnes();
  const Eigen::MatrixXd residual = design * model.readout - targets;
  model.train_rmse = std::sqrt(residual.array().square().mean());
  return model;
}

Eigen::MatrixXd predict(const TrainedEsn& model, const Eigen::MatrixXd& series) {
  const auto& cfg = model.reservoir.config;
  if (series.cols() != cfg.input_dim)
    throw std::invalid_argument("predict: input dimension mismatch");
  const Eigen::MatrixXd inputs = series.topRows(series.rows() - 1);
  const auto states = run_states(model.reservoir, inputs);
  const Eigen::MatrixXd features = collect_features(states);
  Eigen::MatrixXd design(features.rows(), features.cols() + 1);
  design.leftCols(features.cols()) = features;
  design.rightCols(1).setOnes();
  return design * model.readout;
}

std::vector<AnomalyFlag> flag_anomalies(const Eigen::VectorXd& predicted,
                                        const Eigen::VectorXd& observed, double threshold) {
  if (predicted.size() != observed.size())
    throw std::invalid_argument("flag_anomalies: length mismatch");
  std::vector<AnomalyFlag> flags;
  for (Eigen::Index i = 0; i < predicted.size(); ++i) {
    const double err = predicted(i) - observed(i);
    if (std::abs(err) > threshold)
      flags.push_back({static_cast<int>(i), predicted(i), observed(i), err, threshold});
  }
  return flags;
}

namespace {

void append_matrix(std::ofstream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      out.write(reinterpret_cast<const char*>(&v), sizeof(double));
    }
}

Eigen::MatrixXd read_matrix(std::ifstream& in, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      double v;
      in.read(reinterpret_cast<char*>(&v), sizeof(double));
      if (!in) throw std::runtime_error("load_esn: truncated matrix sidecar");
      m(r, c) = v;
    }
  return m;
}

nlohmann::json shape_of(const Eigen::MatrixXd& m) {
  return nlohmann::json{m.rows(), m.cols()};
}

}  // namespace

void save_esn(const TrainedEsn& model, const std::filesystem::path& json_path,
              const std::filesystem::path& matrix_path) {
  std::ofstream bin(matrix_path, std::ios::binary);
  if (!bin) throw std::runtime_error("save_esn: cannot open '" + matrix_path.string() + "'");
  nlohmann::json shapes;
  shapes["input_weights"] = shape_of(model.reservoir.input_weights);
  append_matrix(bin, model.reservoir.input_weights);
  shapes["recurrent"] = nlohmann::json::array();
  for (const auto& m : model.reservoir.recurrent) {
    shapes["recurrent"].push_back(shape_of(m));
    append_matrix(bin, m);
  }
  shapes["inter_layer"] = nlohmann::json::array();
  for (const auto& m : model.reservoir.inter_layer) {
    shapes["inter_layer"].push_back(shape_of(m));
    append_matrix(bin, m);
  }
  shapes["readout"] = shape_of(model.readout);
  append_matrix(bin, model.readout);
  bin.close();

  nlohmann::json j{{"format", "hermnet-esn"},
                   {"version", 1},
                   {"config", model.reservoir.config.to_json()},
                   {"train_rmse", model.train_rmse},
                   {"matrix_file", matrix_path.filename().string()},
                   {"shapes", shapes}};
  std::ofstream out(json_path);
  if (!out) throw std::runtime_error("save_esn: cannot open '" + json_path.string() + "'");
  out << j.dump(2) << '\n';
}

TrainedEsn load_esn(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw std::runtime_error("load_esn: cannot open '" + json_path.string() + "'");
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "hermnet-esn" || j.value("version", 0) != 1)
    throw std::runtime_error("load_esn: unsupported model file");

  TrainedEsn model;
  model.reservoir.config = DeepEsnConfig::from_json(j.at("config"));
  model.train_rmse = j.value("train_rmse", 0.0);

  std::filesystem::path matrix_path = j.at("matrix_file").get<std::string>();
  if (matrix_path.is_relative()) matrix_path = json_path.parent_path() / matrix_path;
  std::ifstream bin(matrix_path, std::ios::binary);
  if (!bin) throw std::runtime_error("load_esn: cannot open '" + matrix_path.string() + "'");

  const auto& shapes = j.at("shapes");
  auto shape = [](const nlohmann::json& s) {
    return std::pair<Eigen::Index, Eigen::Index>(s.at(0).get<Eigen::Index>(),
                                                 s.at(1).get<Eigen::Index>());
  };
  {
    const auto [r, c] = shape(shapes.at("input_weights"));
    model.reservoir.input_weights = read_matrix(bin, r, c);
  }
  for (const auto& s : shapes.at("recurrent")) {
    const auto [r, c] = shape(s);
    model.reservoir.recurrent.push_back(read_matrix(bin, r, c));
  }
  for (const auto& s : shapes.at("inter_layer")) {
    const auto [r, c] = shape(s);
    model.reservoir.inter_layer.push_back(read_matrix(bin, r, c));
  }
  {
    const auto [r, c] = shape(shapes.at("readout"));
    model.readout = read_matrix(bin, r, c);
  }
  return model;
}

}  // namespace hermnet
