#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include "hermnet/activations.hpp"
#include "hermnet/data.hpp"
#include "hermnet/dynamics.hpp"
#include "hermnet/esn.hpp"
#include "hermnet/hermite.hpp"
#include "hermnet/mlp.hpp"
#include "hermnet/optim.hpp"

namespace py = pybind11;
using namespace hermnet;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hermite activation spectra, edge-of-chaos diagnostics, and DeepESN evolution";

  // ------------------------------------------------------------- hermite
  m.def("eval_hermite", &eval_hermite, py::arg("n"), py::arg("x"));
  m.def("eval_hermite_deriv", &eval_hermite_deriv, py::arg("n"), py::arg("x"));
  m.def("hermite_at_zero", &hermite_at_zero, py::arg("n"));

  py::class_<HermiteSpectrum>(m, "HermiteSpectrum")
      .def(py::init<std::vector<double>>(), py::arg("coefficients"))
      .def_readwrite("coefficients", &HermiteSpectrum::coefficients)
      .def_property_readonly("order", &HermiteSpectrum::order)
      .def("to_json", [](const HermiteSpectrum& s) { return s.to_json().dump(2); })
      .def("__repr__", [](const HermiteSpectrum& s) {
        return "HermiteSpectrum(order=" + std::to_string(s.order()) + ")";
      });

  m.def(
      "project",
      [](const std::function<double(double)>& f, int max_order, int quad_points) {
        return quad_points > 0 ? project(f, max_order, quad_points) : project(f, max_order);
      },
      py::arg("f"), py::arg("max_order"), py::arg("quad_points") = -1);
  m.def("reconstruct", &reconstruct, py::arg("spectrum"), py::arg("x"));

  // --------------------------------------------------------- activations
  py::class_<ActivationFn>(m, "ActivationFn")
      .def_static("parse", &parse_activation, py::arg("text"))
      .def_static("hp", [](const HermiteSpectrum& s) { return ActivationFn::hp(s); })
      .def("__call__", &ActivationFn::eval, py::arg("x"))
      .def("eval", &ActivationFn::eval, py::arg("x"))
      .def("deriv", &ActivationFn::deriv, py::arg("x"))
      .def_property_readonly("name", &ActivationFn::name)
      .def_property_readonly("spectrum", &ActivationFn::spectrum)
      .def("__repr__", [](const ActivationFn& a) { return "ActivationFn(" + a.name() + ")"; });

  py::class_<HpDesignProfile>(m, "HpDesignProfile")
      .def(py::init([](double max_coeff, double min_coeff, double spacing, int num_terms) {
             HpDesignProfile p;
             p.max_coeff = max_coeff;
             p.min_coeff = min_coeff;
             p.spacing = spacing;
             p.num_terms = num_terms;
             return p;
           }),
           py::arg("max_coeff") = 0.62, py::arg("min_coeff") = 0.40, py::arg("spacing") = 0.13,
           py::arg("num_terms") = 3)
      .def_readwrite("max_coeff", &HpDesignProfile::max_coeff)
      .def_readwrite("min_coeff", &HpDesignProfile::min_coeff)
      .def_readwrite("spacing", &HpDesignProfile::spacing)
      .def_readwrite("num_terms", &HpDesignProfile::num_terms);

  m.def("synthesize_hp", &synthesize_hp, py::arg("profile"));
  m.def(
      "paper_spectrum",
      [](const std::string& name, int max_order) {
        return paper_spectrum(parse_activation(name), max_order);
      },
      py::arg("activation"), py::arg("max_order"));
  m.def(
      "verified_spectrum",
      [](const std::string& name, int max_order) {
        const auto report = verified_spectrum(parse_activation(name), max_order);
        py::dict out;
        out["quadrature"] = report.quadrature.coefficients;
        if (report.paper.has_value()) {
          out["paper"] = report.paper->coefficients;
          out["abs_diff"] = report.abs_diff;
        }
        return out;
      },
      py::arg("activation"), py::arg("max_order"));

  // ------------------------------------------------------------ dynamics
  py::enum_<Regime>(m, "Regime")
      .value("STABLE", Regime::Stable)
      .value("EDGE_OF_CHAOS", Regime::EdgeOfChaos)
      .value("CHAOTIC", Regime::Chaotic);

  py::class_<LayeredNet>(m, "LayeredNet")
      .def(py::init([](const std::vector<Eigen::MatrixXd>& weights,
                       const std::vector<Eigen::VectorXd>& biases, const ActivationFn& act) {
             if (weights.size() != biases.size())
               throw std::invalid_argument("LayeredNet: weights/biases count mismatch");
             LayeredNet net;
             net.activation = act;
             for (size_t l = 0; l < weights.size(); ++l) net.layers.push_back({weights[l], biases[l]});
             net.validate();
             return net;
           }),
           py::arg("weights"), py::arg("biases"), py::arg("activation"))
      .def_property_readonly("depth", &LayeredNet::depth);

  m.def("forward", &forward, py::arg("net"), py::arg("x0"));
  m.def("layer_jacobian", &layer_jacobian, py::arg("net"), py::arg("x"), py::arg("layer"));
  m.def(
      "lyapunov",
      [](const LayeredNet& net, const std::vector<Eigen::VectorXd>& trajectory,
         double edge_tolerance, bool singular_value_fallback) {
        LyapunovOptions opts;
        opts.edge_tolerance = edge_tolerance;
        opts.singular_value_fallback = singular_value_fallback;
        const auto report = lyapunov(net, trajectory, opts);
        py::dict out;
        out["lambda"] = report.lyapunov;
        out["regime"] = report.regime;
        out["per_layer"] = report.per_layer_log_spectra;
        return out;
      },
      py::arg("net"), py::arg("trajectory"), py::arg("edge_tolerance") = 1e-2,
      py::arg("singular_value_fallback") = false);

  py::class_<RecurrencePlot>(m, "RecurrencePlot")
      .def_readonly("size", &RecurrencePlot::size)
      .def_readonly("threshold", &RecurrencePlot::threshold)
      .def_readonly("recurrence_rate", &RecurrencePlot::recurrence_rate)
      .def("matrix",
           [](const RecurrencePlot& p) {
             Eigen::MatrixXi m(p.size, p.size);
             for (int i = 0; i < p.size; ++i)
               for (int j = 0; j < p.size; ++j) m(i, j) = p.at(i, j);
             return m;
           })
      .def("write_pgm", &write_pgm, py::arg("path"));

  m.def(
      "recurrence_plot",
      [](const Eigen::MatrixXd& states, double epsilon) {
        return recurrence_plot(matrix_rows(states), epsilon);
      },
      py::arg("states"), py::arg("epsilon"), "Rows of `states` are time steps.");
  m.def(
      "epsilon_from_fraction",
      [](const Eigen::MatrixXd& states, double fraction) {
        return epsilon_from_fraction(matrix_rows(states), fraction);
      },
      py::arg("states"), py::arg("fraction"));

  // ----------------------------------------------------------------- esn
  py::class_<DeepEsnConfig>(m, "DeepEsnConfig")
      .def(py::init([](int depth, int width, double spectral_radius, double input_scaling,
                       double leak_rate, int washout, double ridge_lambda,
                       const std::string& activation, uint64_t seed, int input_dim) {
             DeepEsnConfig cfg = DeepEsnConfig::uniform(depth, width);
             cfg.spectral_radius = spectral_radius;
             cfg.input_scaling = input_scaling;
             cfg.leak_rate = leak_rate;
             cfg.washout = washout;
             cfg.ridge_lambda = ridge_lambda;
             cfg.activation = parse_activation(activation);
             cfg.seed = seed;
             cfg.input_dim = input_dim;
             cfg.validate();
             return cfg;
           }),
           py::arg("depth") = 2, py::arg("width") = 100, py::arg("spectral_radius") = 0.9,
           py::arg("input_scaling") = 1.0, py::arg("leak_rate") = 1.0, py::arg("washout") = 100,
           py::arg("ridge_lambda") = 1e-8, py::arg("activation") = "tanh", py::arg("seed") = 0,
           py::arg("input_dim") = 1)
      .def_readwrite("layer_sizes", &DeepEsnConfig::layer_sizes)
      .def_readwrite("spectral_radius", &DeepEsnConfig::spectral_radius)
      .def_readwrite("washout", &DeepEsnConfig::washout)
      .def_readwrite("ridge_lambda", &DeepEsnConfig::ridge_lambda)
      .def_readwrite("seed", &DeepEsnConfig::seed);

  py::class_<TrainedEsn>(m, "TrainedEsn")
      .def_property_readonly("train_rmse", [](const TrainedEsn& t) { return t.train_rmse; })
      .def("save", &save_esn, py::arg("json_path"), py::arg("matrix_path"));

  m.def("train_esn", &train_esn, py::arg("config"), py::arg("series"));
  m.def("load_esn", &load_esn, py::arg("json_path"));
  m.def("predict", &predict, py::arg("model"), py::arg("series"));
  m.def("prediction_offset", &prediction_offset, py::arg("model"));
  m.def(
      "run_reservoir_states",
      [](const DeepEsnConfig& cfg, const Eigen::MatrixXd& inputs) {
        return run_states(build_esn(cfg), inputs);
      },
      py::arg("config"), py::arg("inputs"), "Per-layer post-washout state trajectories.");
  m.def(
      "flag_anomalies",
      [](const Eigen::VectorXd& predicted, const Eigen::VectorXd& observed, double threshold) {
        std::vector<py::dict> out;
        for (const auto& f : flag_anomalies(predicted, observed, threshold)) {
          py::dict d;
          d["time_index"] = f.time_index;
          d["predicted"] = f.predicted;
          d["observed"] = f.observed;
          d["error"] = f.error;
          out.push_back(d);
        }
        return out;
      },
      py::arg("predicted"), py::arg("observed"), py::arg("threshold"));

  // --------------------------------------------------------------- optim
  m.def(
      "minimize",
      [](const std::vector<std::tuple<double, double, bool>>& bounds,
         const std::function<double(const Eigen::VectorXd&)>& fitness, int iterations,
         int population, uint64_t seed) {
        SearchSpace space;
        for (const auto& [lo, hi, integer] : bounds) space.dims.push_back({lo, hi, integer});
        const auto result = minimize(space, fitness, iterations, population, seed);
        py::dict out;
        out["best_position"] = result.best_position;
        out["best_fitness"] = result.best_fitness;
        out["history"] = result.history;
        return out;
      },
      py::arg("bounds"), py::arg("fitness"), py::arg("iterations") = 100,
      py::arg("population") = 30, py::arg("seed") = 0,
      "bounds: list of (lower, upper, is_integer) per dimension");
  m.def(
      "evolve_esn",
      [](const Eigen::MatrixXd& series, double train_ratio, double val_ratio, double test_ratio,
         const DeepEsnConfig& template_config, std::pair<int, int> depth,
         std::pair<int, int> width, int generations, int population, uint64_t seed) {
        const auto split =
            chrono_split(static_cast<int>(series.rows()), train_ratio, val_ratio, test_ratio);
        const auto result =
            evolve_esn(series, split, template_config, depth.first, depth.second, width.first,
                       width.second, generations, population, seed);
        py::dict out;
        out["best_depth"] = result.best_config.num_layers();
        out["best_width"] = result.best_config.layer_sizes[0];
        out["best_val_rmse"] = result.best_val_rmse;
        out["history"] = result.history;
        std::vector<double> rates;
        for (const auto& g : result.generations) {
          if (g.generation_best_states.rows() < 2) {
            rates.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
          }
          const auto rows = matrix_rows(g.generation_best_states);
          rates.push_back(
              recurrence_plot(rows, epsilon_from_fraction(rows, 0.1)).recurrence_rate);
        }
        out["generation_recurrence_rates"] = rates;
        return out;
      },
      py::arg("series"), py::arg("train_ratio"), py::arg("val_ratio"), py::arg("test_ratio"),
      py::arg("template_config"), py::arg("depth"), py::arg("width"), py::arg("generations") = 8,
      py::arg("population") = 10, py::arg("seed") = 0);

  // ---------------------------------------------------------------- data
  m.def(
      "mackey_glass",
      [](int length, double tau, double beta, double gamma, double n, double dt, uint64_t seed) {
        MackeyGlassParams p;
        p.tau = tau;
        p.beta = beta;
        p.gamma = gamma;
        p.n = n;
        p.dt = dt;
        return mackey_glass(length, p, seed);
      },
      py::arg("length"), py::arg("tau") = 17.0, py::arg("beta") = 0.2, py::arg("gamma") = 0.1,
      py::arg("n") = 10.0, py::arg("dt") = 0.1, py::arg("seed") = 0);
  m.def(
      "chrono_split",
      [](int total, double train_ratio, double val_ratio, double test_ratio) {
        const auto s = chrono_split(total, train_ratio, val_ratio, test_ratio);
        return std::make_tuple(s.train_end, s.val_end, s.total);
      },
      py::arg("total"), py::arg("train_ratio"), py::arg("val_ratio"), py::arg("test_ratio"),
      "Returns (train_end, val_end, total) boundaries.");
  m.def(
      "metrics",
      [](const Eigen::VectorXd& predicted, const Eigen::VectorXd& observed) {
        const auto r = metrics(predicted, observed);
        py::dict out;
        out["mae"] = r.mae;
        out["rmse"] = r.rmse;
        out["mape"] = r.mape;
        out["mape_excluded"] = r.mape_excluded;
        return out;
      },
      py::arg("predicted"), py::arg("observed"));
  m.def(
      "load_csv_series",
      [](const std::filesystem::path& path) {
        const auto s = load_csv_series(path);
        return std::make_tuple(s.values, s.columns, s.rejected_rows);
      },
      py::arg("path"), "Returns (values, column_names, rejected_row_indices).");
  m.def(
      "load_idx",
      [](const std::filesystem::path& images, const std::filesystem::path& labels,
         int downsample) {
        const auto d = load_idx(images, labels, downsample);
        return std::make_tuple(d.images, d.labels, d.image_rows, d.image_cols);
      },
      py::arg("images_path"), py::arg("labels_path"), py::arg("downsample") = 1);
  m.def(
      "make_blobs",
      [](int samples, int classes, double spread, uint64_t seed) {
        const auto d = make_blobs(samples, classes, spread, seed);
        return std::make_tuple(d.features, d.labels);
      },
      py::arg("samples"), py::arg("classes") = 2, py::arg("spread") = 0.4, py::arg("seed") = 0);

  // ----------------------------------------------------------------- mlp
  m.def(
      "train_mlp",
      [](const Eigen::MatrixXd& features, const Eigen::VectorXi& labels, int num_classes,
         const std::vector<int>& hidden, const std::string& activation, double learning_rate,
         int batch, int epochs, uint64_t seed) {
        Dataset data;
        data.features = features;
        data.labels = labels;
        data.num_classes = num_classes;
        MlpConfig cfg;
        cfg.hidden_widths = hidden;
        cfg.activation = parse_activation(activation);
        cfg.learning_rate = learning_rate;
        cfg.batch_size = batch;
        cfg.epochs = epochs;
        cfg.seed = seed;
        const auto trace = train_mlp(cfg, data);
        py::dict out;
        out["epoch_loss"] = trace.epoch_loss;
        out["final_accuracy"] = trace.final_accuracy;
        out["diverged_epoch"] = trace.diverged_epoch;
        return out;
      },
      py::arg("features"), py::arg("labels"), py::arg("num_classes"),
      py::arg("hidden") = std::vector<int>{16, 16}, py::arg("activation") = "sigmoid",
      py::arg("learning_rate") = 0.2, py::arg("batch") = 32, py::arg("epochs") = 60,
      py::arg("seed") = 0);
  m.def(
      "gradient_check",
      [](const Eigen::MatrixXd& features, const Eigen::VectorXi& labels, int num_classes,
         const std::vector<int>& hidden, const std::string& activation, uint64_t seed) {
        Dataset data;
        data.features = features;
        data.labels = labels;
        data.num_classes = num_classes;
        MlpConfig cfg;
        cfg.hidden_widths = hidden;
        cfg.activation = parse_activation(activation);
        cfg.seed = seed;
        return gradient_check(cfg, data);
      },
      py::arg("features"), py::arg("labels"), py::arg("num_classes"),
      py::arg("hidden") = std::vector<int>{6, 5}, py::arg("activation") = "sigmoid",
      py::arg("seed") = 0);

  m.attr("__version__") = "0.1.0";
}
