// hermnet command-line harness: spectra, activation design, criticality
// probes, ESN training/evolution, MLP sweeps, and dataset generation.
// Every run writes a manifest (resolved config + artifact checksums) that
// the `replay` subcommand can re-execute bit for bit.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hermnet/activations.hpp"
#include "hermnet/checksum.hpp"
#include "hermnet/data.hpp"
#include "hermnet/dynamics.hpp"
#include "hermnet/esn.hpp"
#include "hermnet/hermite.hpp"
#include "hermnet/mlp.hpp"
#include "hermnet/optim.hpp"
#include "hermnet/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace hermnet;

namespace {

constexpr const char* kVersion = "0.1.0";

struct RunContext {
  fs::path output_dir;
  std::vector<std::string> artifacts;

  fs::path file(const std::string& name) {
    artifacts.push_back(name);
    return output_dir / name;
  }
};

void write_manifest(RunContext& ctx, const std::string& subcommand, const json& config) {
  json artifacts = json::object();
  for (const auto& name : ctx.artifacts)
    artifacts[name] = checksum_hex(fnv1a64_file(ctx.output_dir / name));
  const json manifest{{"tool", "hermnet"},
                      {"version", kVersion},
                      {"subcommand", subcommand},
                      {"config", config},
                      {"artifacts", artifacts}};
  std::ofstream out(ctx.output_dir / "manifest.json");
  out << manifest.dump(2) << '\n';
}

ActivationFn activation_from_config(const json& cfg) {
  const auto& a = cfg.at("activation");
  if (a.is_object()) return ActivationFn::hp(HermiteSpectrum::from_json(a));
  return parse_activation(a.get<std::string>());
}

// hp-file references get inlined so a manifest replays without the file
json activation_to_config(const std::string& text) {
  if (text.rfind("hp-file:", 0) == 0) return parse_activation(text).spectrum().to_json();
  parse_activation(text);  // validate eagerly
  return json(text);
}

std::array<double, 3> parse_split(const std::string& text) {
  std::array<double, 3> ratios{};
  std::stringstream ss(text);
  std::string item;
  int i = 0;
  while (std::getline(ss, item, ':')) {
    if (i >= 3) throw std::invalid_argument("split: expected train:val:test");
    ratios[static_cast<size_t>(i++)] = std::stod(item);
  }
  if (i != 3) throw std::invalid_argument("split: expected train:val:test");
  return ratios;
}

std::pair<int, int> parse_int_range(const std::string& text) {
  const auto pos = text.find("..");
  if (pos == std::string::npos)
    throw std::invalid_argument("range: expected lo..hi, got '" + text + "'");
  return {std::stoi(text.substr(0, pos)), std::stoi(text.substr(pos + 2))};
}

// "0,1e-6..1" -> 0 plus decade steps from 1e-6 to 1
std::vector<double> parse_lambda_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto pos = item.find("..");
    if (pos == std::string::npos) {
      values.push_back(std::stod(item));
      continue;
    }
    const double lo = std::stod(item.substr(0, pos));
    const double hi = std::stod(item.substr(pos + 2));
    if (!(lo > 0.0) || !(hi > lo))
      throw std::invalid_argument("lambda range: need 0 < lo < hi");
    for (double v = lo; v <= hi * (1.0 + 1e-12); v *= 10.0) values.push_back(v);
  }
  if (values.empty()) throw std::invalid_argument("lambda list: empty");
  return values;
}

std::vector<double> parse_value_sweep(const std::string& range, const std::string& list) {
  std::vector<double> values;
  if (!range.empty()) {
    std::stringstream ss(range);
    std::string lo, hi, step;
    std::getline(ss, lo, ':');
    std::getline(ss, hi, ':');
    std::getline(ss, step, ':');
    if (step.empty()) throw std::invalid_argument("range: expected lo:hi:step");
    const double l = std::stod(lo), h = std::stod(hi), s = std::stod(step);
    if (!(s > 0.0) || h < l) throw std::invalid_argument("range: need step > 0 and hi >= lo");
    for (double v = l; v <= h + 1e-12; v += s) values.push_back(v);
  }
  if (!list.empty()) {
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) values.push_back(std::stod(item));
  }
  if (values.empty()) throw std::invalid_argument("sweep: provide --range or --values");
  return values;
}

Eigen::MatrixXd load_series_matrix(const std::string& path) {
  const auto series = load_csv_series(path);
  if (!series.rejected_rows.empty()) {
    std::cerr << "warning: rejected " << series.rejected_rows.size() << " rows:";
    for (int r : series.rejected_rows) std::cerr << ' ' << r;
    std::cerr << '\n';
  }
  return series.values;
}

void write_metrics_file(RunContext& ctx, const std::string& format,
                        const std::vector<std::pair<std::string, MetricReport>>& reports) {
  if (format == "json") {
    json j = json::object();
    for (const auto& [name, m] : reports)
      j[name] = {{"mae", m.mae}, {"rmse", m.rmse}, {"mape", m.mape},
                 {"mape_excluded", m.mape_excluded}};
    std::ofstream out(ctx.file("metrics.json"));
    out << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(ctx.file("metrics.csv"));
  out.precision(17);
  out << "split,mae,rmse,mape,mape_excluded\n";
  for (const auto& [name, m] : reports)
    out << name << ',' << m.mae << ',' << m.rmse << ',' << m.mape << ',' << m.mape_excluded
        << '\n';
}

// ---------------------------------------------------------------- spectra

int run_spectra(const json& cfg, RunContext& ctx) {
  const ActivationFn act = activation_from_config(cfg);
  const int order = cfg.at("order").get<int>();
  const auto report = verified_spectrum(act, order);

  {
    std::ofstream out(ctx.file("spectrum.json"));
    out << report.quadrature.to_json().dump(2) << '\n';
  }
  if (report.paper.has_value()) {
    json d{{"activation", act.name()},
           {"paper", report.paper->coefficients},
           {"quadrature", report.quadrature.coefficients},
           {"abs_diff", report.abs_diff}};
    std::ofstream out(ctx.file("discrepancy.json"));
    out << d.dump(2) << '\n';
  }
  std::cout << "spectrum written; a_0 = " << report.quadrature.coefficients[0] << '\n';
  return 0;
}

// ----------------------------------------------------------------- design

int run_design(const json& cfg, RunContext& ctx) {
  HpDesignProfile profile;
  profile.max_coeff = cfg.at("max").get<double>();
  profile.min_coeff = cfg.at("min").get<double>();
  profile.spacing = cfg.at("gap").get<double>();
  profile.num_terms = cfg.at("n").get<int>();
  const std::string layout = cfg.value("layout", "consecutive");
  if (layout == "odd") profile.layout = HpLayout::OddOrders;
  else if (layout == "alt") profile.layout = HpLayout::AlternatingOrders;
  else if (layout != "consecutive") throw std::invalid_argument("design: unknown layout");

  const ActivationFn hp = synthesize_hp(profile);
  std::ofstream out(ctx.file("activation.json"));
  out << hp.spectrum().to_json().dump(2) << '\n';
  std::cout << "designed " << hp.name() << '\n';
  return 0;
}

// ------------------------------------------------------------ criticality

int run_criticality(const json& cfg, RunContext& ctx) {
  const double fraction = cfg.value("rp_fraction", 0.1);
  std::vector<Eigen::VectorXd> rp_states;
  json report_json;

  if (cfg.contains("esn_model")) {
    const auto model = load_esn(cfg.at("esn_model").get<std::string>());
    const Eigen::MatrixXd series = load_series_matrix(cfg.at("data").get<std::string>());
    const auto states = run_states(model.reservoir, series);
    const auto& top = states.back();
    const int window = std::min<int>(cfg.value("steps", 200), static_cast<int>(top.rows()));
    for (int i = 0; i < window; ++i) rp_states.push_back(top.row(i).transpose());
    report_json["source"] = "esn";
  } else {
    const int dim = cfg.value("dim", 6);
    const int depth = cfg.value("depth", 1);
    const double scale = cfg.value("scale", 1.0);
    const std::string mode = cfg.value("mode", "scaled-identity");
    const uint64_t seed = cfg.value("seed", 0ull);
    Rng rng(mix_seed(seed, 0x6372697469ull));

    LayeredNet net;
    net.activation = activation_from_config(cfg);
    for (int l = 0; l < depth; ++l) {
      Eigen::MatrixXd w;
      if (mode == "scaled-identity") {
        w = scale * Eigen::MatrixXd::Identity(dim, dim);
      } else if (mode == "orthogonal" || mode == "random") {
        Eigen::MatrixXd g(dim, dim);
        for (int r = 0; r < dim; ++r)
          for (int c = 0; c < dim; ++c) g(r, c) = rng.normal();
        if (mode == "orthogonal")
          w = scale * Eigen::MatrixXd(Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ());
        else
          w = scale / std::sqrt(static_cast<double>(dim)) * g;
      } else {
        throw std::invalid_argument("criticality: unknown mode '" + mode + "'");
      }
      net.layers.push_back({w, Eigen::VectorXd::Zero(dim)});
    }

    const int steps = cfg.value("trajectory_steps", 16);
    std::vector<Eigen::VectorXd> trajectory;
    for (int t = 0; t < steps; ++t) {
      Eigen::VectorXd s(dim);
      for (int i = 0; i < dim; ++i) s(i) = rng.normal();
      trajectory.push_back(s);
    }
    LyapunovOptions opts;
    opts.edge_tolerance = cfg.value("edge_tolerance", 1e-2);
    const auto report = lyapunov(net, trajectory, opts);
    report_json = report.to_json();
    report_json["source"] = "net";

    // recurrence structure of one forward pass through the stack
    rp_states = forward(net, trajectory.front());
  }

  const auto plot = recurrence_plot(rp_states, epsilon_from_fraction(rp_states, fraction));
  report_json["recurrence_rate"] = plot.recurrence_rate;
  report_json["epsilon"] = plot.threshold;
  {
    std::ofstream out(ctx.file("criticality.json"));
    out << report_json.dump(2) << '\n';
  }
  write_pgm(plot, ctx.file("recurrence.pgm"));
  write_recurrence_csv(plot, ctx.file("recurrence.csv"));
  if (report_json.contains("lambda"))
    std::cout << "lambda=" << report_json["lambda"].get<double>()
              << " regime=" << report_json["regime"].get<std::string>() << '\n';
  std::cout << "recurrence_rate=" << plot.recurrence_rate << '\n';
  return 0;
}

// -------------------------------------------------------------- esn train

DeepEsnConfig esn_config_from_json(const json& cfg, int input_dim) {
  DeepEsnConfig out = DeepEsnConfig::uniform(cfg.value("layers", 2), cfg.value("width", 100));
  out.input_dim = input_dim;
  out.spectral_radius = cfg.value("spectral_radius", 0.9);
  out.input_scaling = cfg.value("input_scaling", 1.0);
  out.leak_rate = cfg.value("leak_rate", 1.0);
  out.washout = cfg.value("washout", 100);
  out.ridge_lambda = cfg.value("ridge_lambda", 1e-8);
  out.seed = cfg.value("seed", 0ull);
  out.activation = activation_from_config(cfg);
  return out;
}

void write_predictions(RunContext& ctx, const std::string& name, const Eigen::VectorXd& observed,
                       const Eigen::VectorXd& predicted, int first_index, double threshold) {
  std::ofstream out(ctx.file(name));
  out.precision(17);
  out << "time_index,observed,predicted,error,flagged\n";
  for (Eigen::Index i = 0; i < observed.size(); ++i) {
    const double err = predicted(i) - observed(i);
    out << (first_index + i) << ',' << observed(i) << ',' << predicted(i) << ',' << err << ','
        << (std::abs(err) > threshold ? 1 : 0) << '\n';
  }
}

int run_esn_train(const json& cfg, RunContext& ctx) {
  Eigen::MatrixXd series = load_series_matrix(cfg.at("data").get<std::string>());
  const auto ratios = parse_split(cfg.value("split", "0.7:0.1:0.2"));
  const auto split =
      chrono_split(static_cast<int>(series.rows()), ratios[0], ratios[1], ratios[2]);
  if (cfg.value("normalize", false)) {
    const auto stats = train_column_stats(series, split);
    series = normalize_columns(series, stats);
  }

  DeepEsnConfig esn_cfg = esn_config_from_json(cfg, static_cast<int>(series.cols()));
  if (esn_cfg.washout + 10 > split.train_size())
    throw std::invalid_argument("esn train: washout leaves no training rows");

  if (cfg.contains("sweep_ridge")) {
    const auto lambdas = parse_lambda_list(cfg.at("sweep_ridge").get<std::string>());
    std::ofstream out(ctx.file("ridge_sweep.csv"));
    out.precision(17);
    out << "ridge_lambda,train_rmse,val_rmse,test_rmse\n";
    for (double lambda : lambdas) {
      DeepEsnConfig c = esn_cfg;
      c.ridge_lambda = lambda;
      TrainedEsn model;
      try {
        model = train_esn(c, series.topRows(split.train_end));
      } catch (const std::runtime_error&) {
        out << lambda << ",nan,nan,nan\n";
        continue;
      }
      const auto preds = predict(model, series);
      const int offset = prediction_offset(model);
      auto rmse_range = [&](int begin, int end) {
        const Eigen::MatrixXd p = preds.middleRows(begin - offset, end - begin);
        const Eigen::MatrixXd o = series.middleRows(begin, end - begin);
        return std::sqrt((p - o).array().square().mean());
      };
      out << lambda << ',' << model.train_rmse << ',' << rmse_range(split.train_end, split.val_end)
          << ',' << rmse_range(split.val_end, split.total) << '\n';
    }
  }

  const TrainedEsn model = train_esn(esn_cfg, series.topRows(split.train_end));
  save_esn(model, ctx.file("model.json"), ctx.file("model.bin"));

  const Eigen::MatrixXd preds = predict(model, series);
  const int offset = prediction_offset(model);
  auto slice = [&](int begin, int end) {
    return std::pair<Eigen::MatrixXd, Eigen::MatrixXd>(preds.middleRows(begin - offset, end - begin),
                                                       series.middleRows(begin, end - begin));
  };
  const auto [train_p, train_o] = slice(offset, split.train_end);
  const auto [val_p, val_o] = slice(split.train_end, split.val_end);
  const auto [test_p, test_o] = slice(split.val_end, split.total);
  write_metrics_file(ctx, cfg.value("format", "csv"),
                     {{"train", metrics(train_p, train_o)},
                      {"validation", metrics(val_p, val_o)},
                      {"test", metrics(test_p, test_o)}});

  const double val_rmse = metrics(val_p, val_o).rmse;
  const double threshold = cfg.contains("anomaly_threshold")
                               ? cfg.at("anomaly_threshold").get<double>()
                               : 3.0 * val_rmse;

  const int cols = static_cast<int>(series.cols());
  for (int c = 0; c < cols; ++c) {
    const std::string name = cols == 1 ? "predictions.csv"
                                       : "predictions_col" + std::to_string(c) + ".csv";
    write_predictions(ctx, name, series.col(c).segment(offset, preds.rows()), preds.col(c),
                      offset, threshold);
  }

  const auto flags = flag_anomalies(preds.col(0), series.col(0).segment(offset, preds.rows()),
                                    threshold);
  {
    std::ofstream out(ctx.file("flags.csv"));
    out.precision(17);
    out << "time_index,observed,predicted,error,threshold\n";
    for (const auto& f : flags)
      out << (f.time_index + offset) << ',' << f.observed << ',' << f.predicted << ',' << f.error
          << ',' << f.threshold << '\n';
  }
  std::cout << "trained; validation rmse=" << val_rmse << " flags=" << flags.size() << '\n';
  return 0;
}

int run_esn_predict(const json& cfg, RunContext& ctx) {
  const auto model = load_esn(cfg.at("model").get<std::string>());
  const Eigen::MatrixXd series = load_series_matrix(cfg.at("data").get<std::string>());
  const Eigen::MatrixXd preds = predict(model, series);
  const int offset = prediction_offset(model);
  const double threshold = cfg.value("anomaly_threshold", 3.0 * model.train_rmse);

  const int cols = static_cast<int>(series.cols());
  for (int c = 0; c < cols; ++c) {
    const std::string name = cols == 1 ? "predictions.csv"
                                       : "predictions_col" + std::to_string(c) + ".csv";
    write_predictions(ctx, name, series.col(c).segment(offset, preds.rows()), preds.col(c),
                      offset, threshold);
  }
  write_metrics_file(ctx, cfg.value("format", "csv"),
                     {{"all", metrics(Eigen::MatrixXd(preds),
                                      Eigen::MatrixXd(series.middleRows(offset, preds.rows())))}});
  std::cout << "predicted " << preds.rows() << " steps\n";
  return 0;
}

int run_esn_evolve(const json& cfg, RunContext& ctx) {
  const Eigen::MatrixXd series = load_series_matrix(cfg.at("data").get<std::string>());
  const auto ratios = parse_split(cfg.value("split", "0.7:0.1:0.2"));
  const auto split =
      chrono_split(static_cast<int>(series.rows()), ratios[0], ratios[1], ratios[2]);
  const auto [min_depth, max_depth] = parse_int_range(cfg.value("depth", "1..4"));
  const auto [min_width, max_width] = parse_int_range(cfg.value("width", "50..500"));

  DeepEsnConfig tmpl = esn_config_from_json(cfg, static_cast<int>(series.cols()));
  const auto result = evolve_esn(series, split, tmpl, min_depth, max_depth, min_width, max_width,
                                 cfg.value("generations", 8), cfg.value("population", 10),
                                 cfg.value("seed", 0ull), cfg.value("snapshot_window", 200),
                                 cfg.value("threads", 1));

  {
    std::ofstream out(ctx.file("evolution.csv"));
    out.precision(17);
    out << "generation,best_fitness,gen_best_fitness,gen_best_depth,gen_best_width,"
           "recurrence_rate\n";
    for (const auto& g : result.generations) {
      double rate = std::numeric_limits<double>::quiet_NaN();
      if (g.generation_best_states.rows() > 1) {
        const auto rows = matrix_rows(g.generation_best_states);
        rate = recurrence_plot(rows, epsilon_from_fraction(rows, cfg.value("rp_fraction", 0.1)))
                   .recurrence_rate;
      }
      out << g.generation << ',' << g.best_fitness << ',' << g.generation_best_fitness << ','
          << g.generation_best_position(0) << ',' << g.generation_best_position(1) << ',' << rate
          << '\n';
    }
  }
  for (const auto& g : result.generations) {
    if (g.generation_best_states.rows() < 2) continue;
    const auto rows = matrix_rows(g.generation_best_states);
    char name[32];
    std::snprintf(name, sizeof(name), "rp_gen%03d.pgm", g.generation);
    write_pgm(recurrence_plot(rows, epsilon_from_fraction(rows, cfg.value("rp_fraction", 0.1))),
              ctx.file(name));
  }
  {
    std::ofstream out(ctx.file("best_config.json"));
    out << result.best_config.to_json().dump(2) << '\n';
  }
  std::cout << "evolve: best_val_rmse=" << result.best_val_rmse
            << " depth=" << result.best_config.num_layers()
            << " width=" << result.best_config.layer_sizes[0] << '\n';
  return 0;
}

// -------------------------------------------------------------------- mlp

Dataset dataset_from_config(const json& cfg) {
  const std::string kind = cfg.value("dataset", "blobs");
  const uint64_t seed = cfg.value("data_seed", 7ull);
  if (kind == "blobs")
    return make_blobs(cfg.value("samples", 400), cfg.value("classes", 2),
                      cfg.value("spread", 0.4), seed);
  if (kind == "moons") return make_moons(cfg.value("samples", 400), cfg.value("noise", 0.1), seed);
  if (kind == "idx") {
    const auto idx = load_idx(cfg.at("images").get<std::string>(),
                              cfg.at("labels").get<std::string>(), cfg.value("downsample", 4));
    return idx_to_dataset(idx);
  }
  throw std::invalid_argument("mlp: unknown dataset '" + kind + "'");
}

MlpConfig mlp_config_from_json(const json& cfg) {
  MlpConfig out;
  out.hidden_widths.clear();
  for (const auto& w : cfg.value("hidden", std::vector<int>{16, 16})) out.hidden_widths.push_back(w);
  out.activation = activation_from_config(cfg);
  out.learning_rate = cfg.value("learning_rate", 0.2);
  out.batch_size = cfg.value("batch", 32);
  out.epochs = cfg.value("epochs", 60);
  out.seed = cfg.value("seed", 0ull);
  return out;
}

int run_mlp_train(const json& cfg, RunContext& ctx) {
  const Dataset data = dataset_from_config(cfg);
  const MlpConfig mlp_cfg = mlp_config_from_json(cfg);

  // backprop is validated on a throwaway copy before the real run
  MlpConfig check_cfg = mlp_cfg;
  check_cfg.hidden_widths = {5, 4};
  const double grad_err = gradient_check(check_cfg, data);
  {
    json j{{"max_relative_error", grad_err}, {"tolerance", 1e-4}};
    std::ofstream out(ctx.file("gradient_check.json"));
    out << j.dump(2) << '\n';
  }
  if (grad_err > 1e-4) {
    std::cerr << "gradient check failed: " << grad_err << '\n';
    return 1;
  }

  const auto trace = train_mlp(mlp_cfg, data);
  write_trace_csv(ctx.file("trace.csv"), trace);
  if (trace.diverged()) {
    std::cerr << "training diverged at epoch " << trace.diverged_epoch << '\n';
    return 1;
  }
  std::cout << "final_loss=" << trace.epoch_loss.back() << " accuracy=" << trace.final_accuracy
            << '\n';
  return 0;
}

int run_mlp_sweep(const json& cfg, RunContext& ctx) {
  const Dataset data = dataset_from_config(cfg);
  const std::string param = cfg.at("param").get<std::string>();
  const auto values =
      parse_value_sweep(cfg.value("range", ""), cfg.value("values", ""));

  const MlpConfig base = mlp_config_from_json(cfg);
  HpDesignProfile profile;
  profile.max_coeff = cfg.value("hp_max", profile.max_coeff);
  profile.min_coeff = cfg.value("hp_min", profile.min_coeff);
  profile.spacing = cfg.value("hp_gap", profile.spacing);
  profile.num_terms = cfg.value("hp_terms", profile.num_terms);

  std::vector<SweepEntry> entries;
  for (double v : values) {
    MlpConfig c = base;
    HpDesignProfile p = profile;
    if (param == "max-coeff") p.max_coeff = v;
    else if (param == "min-coeff") p.min_coeff = v;
    else if (param == "spacing") p.spacing = v;
    else if (param == "batch") c.batch_size = static_cast<int>(v);
    else throw std::invalid_argument("mlp sweep: unknown param '" + param + "'");
    if (param != "batch") c.activation = synthesize_hp(p);
    std::ostringstream id;
    id << param << '=' << v;
    entries.push_back({id.str(), v, c});
  }

  const auto rows = sweep(entries, data, cfg.value("threads", 1));
  write_sweep_csv(ctx.file("sweep.csv"), rows);
  std::cout << "sweep: " << rows.size() << " configs\n";
  return 0;
}

// ---------------------------------------------------------------- datagen

int run_datagen(const json& cfg, RunContext& ctx) {
  const std::string kind = cfg.at("kind").get<std::string>();
  const uint64_t seed = cfg.value("seed", 0ull);
  if (kind == "mackey-glass") {
    MackeyGlassParams params;
    params.tau = cfg.value("tau", params.tau);
    params.beta = cfg.value("beta", params.beta);
    params.gamma = cfg.value("gamma", params.gamma);
    params.n = cfg.value("n", params.n);
    params.dt = cfg.value("dt", params.dt);
    const auto series = mackey_glass(cfg.value("length", 2000), params, seed);
    Eigen::MatrixXd m(series.size(), 1);
    m.col(0) = series;
    write_csv_series(ctx.file("mackey_glass.csv"), m, {"x"});
    std::cout << "mackey-glass: " << series.size() << " steps\n";
    return 0;
  }
  if (kind == "blobs") {
    const auto data = make_blobs(cfg.value("samples", 400), cfg.value("classes", 2),
                                 cfg.value("spread", 0.4), seed);
    std::ofstream out(ctx.file("blobs.csv"));
    out.precision(17);
    out << "x0,x1,label\n";
    for (Eigen::Index i = 0; i < data.features.rows(); ++i)
      out << data.features(i, 0) << ',' << data.features(i, 1) << ',' << data.labels(i) << '\n';
    std::cout << "blobs: " << data.features.rows() << " samples\n";
    return 0;
  }
  if (kind == "idx-fixture") {
    const int count = cfg.value("count", 10);
    Rng rng(mix_seed(seed, 0x696478ull));
    IdxDataset data;
    data.image_rows = 28;
    data.image_cols = 28;
    data.images.resize(count, 28 * 28);
    data.labels.resize(count);
    for (int i = 0; i < count; ++i) {
      data.labels(i) = rng.uniform_int(0, 9);
      for (int p = 0; p < 28 * 28; ++p) data.images(i, p) = rng.uniform_int(0, 255) / 255.0;
    }
    write_idx(ctx.file("images.idx"), ctx.file("labels.idx"), data);
    std::cout << "idx fixture: " << count << " images\n";
    return 0;
  }
  throw std::invalid_argument("datagen: unknown kind '" + kind + "'");
}

// ----------------------------------------------------------------- replay

int dispatch(const std::string& subcommand, const json& cfg, RunContext& ctx);

int run_replay(const json& cfg, RunContext& ctx) {
  std::ifstream in(cfg.at("manifest").get<std::string>());
  if (!in) throw std::invalid_argument("replay: cannot open manifest");
  json manifest;
  in >> manifest;
  if (manifest.value("tool", "") != "hermnet")
    throw std::invalid_argument("replay: not a hermnet manifest");
  const std::string subcommand = manifest.at("subcommand").get<std::string>();
  if (subcommand == "replay") throw std::invalid_argument("replay: cannot replay a replay");
  const int code = dispatch(subcommand, manifest.at("config"), ctx);
  if (code != 0) return code;

  // compare fresh checksums against the recorded ones
  const auto& recorded = manifest.at("artifacts");
  for (const auto& [name, checksum] : recorded.items()) {
    const std::string fresh = checksum_hex(fnv1a64_file(ctx.output_dir / name));
    if (fresh != checksum.get<std::string>()) {
      std::cerr << "replay: artifact '" << name << "' diverged\n";
      return 1;
    }
  }
  std::cout << "replay: " << recorded.size() << " artifacts reproduced\n";
  return 0;
}

int dispatch(const std::string& subcommand, const json& cfg, RunContext& ctx) {
  if (subcommand == "spectra") return run_spectra(cfg, ctx);
  if (subcommand == "design") return run_design(cfg, ctx);
  if (subcommand == "criticality") return run_criticality(cfg, ctx);
  if (subcommand == "esn-train") return run_esn_train(cfg, ctx);
  if (subcommand == "esn-predict") return run_esn_predict(cfg, ctx);
  if (subcommand == "esn-evolve") return run_esn_evolve(cfg, ctx);
  if (subcommand == "mlp-train") return run_mlp_train(cfg, ctx);
  if (subcommand == "mlp-sweep") return run_mlp_sweep(cfg, ctx);
  if (subcommand == "datagen") return run_datagen(cfg, ctx);
  throw std::invalid_argument("unknown subcommand '" + subcommand + "'");
}

int execute(const std::string& subcommand, json cfg, const std::string& output_dir) {
  RunContext ctx;
  ctx.output_dir = output_dir;
  fs::create_directories(ctx.output_dir);
  const int code = subcommand == "replay" ? run_replay(cfg, ctx) : dispatch(subcommand, cfg, ctx);
  if (code == 0 && subcommand != "replay") write_manifest(ctx, subcommand, cfg);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hermite-spectrum activation design and edge-of-chaos toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read defaults from an ini/toml file");

  // wiring state; lives for the whole parse
  struct {
    std::string output_dir = "out";
    std::string format = "csv";
    uint64_t seed = 0;

    std::string spectra_activation = "sigmoid";
    int spectra_order = 10;

    double design_max = 0.62, design_min = 0.40, design_gap = 0.13;
    int design_terms = 3;
    std::string design_layout = "consecutive";

    std::string crit_mode = "scaled-identity";
    int crit_dim = 6, crit_depth = 1, crit_steps = 16;
    double crit_scale = 1.0, crit_fraction = 0.1;
    std::string crit_activation = "identity";
    std::string crit_esn_model, crit_data;

    std::string esn_data;
    std::string esn_split = "0.7:0.1:0.2";
    int esn_layers = 2, esn_width = 100, esn_washout = 100;
    double esn_rho = 0.9, esn_leak = 1.0, esn_ridge = 1e-8, esn_input_scaling = 1.0;
    std::string esn_activation = "tanh";
    bool esn_normalize = false;
    std::string esn_sweep_ridge;
    double esn_threshold = -1.0;
    std::string esn_model_path;
    std::string esn_depth_range = "1..4";
    std::string esn_width_range = "50..500";
    int esn_generations = 8, esn_population = 10, esn_threads = 1;

    std::string mlp_dataset = "blobs";
    int mlp_samples = 400, mlp_classes = 2, mlp_downsample = 4;
    double mlp_spread = 0.4;
    std::string mlp_images, mlp_labels;
    std::vector<int> mlp_hidden = {16, 16};
    std::string mlp_activation = "sigmoid";
    double mlp_lr = 0.2;
    int mlp_batch = 32, mlp_epochs = 60;
    std::string mlp_param, mlp_range, mlp_values;
    int mlp_threads = 1;
    double mlp_hp_max = 0.62, mlp_hp_min = 0.40, mlp_hp_gap = 0.13;
    int mlp_hp_terms = 3;

    int dg_length = 2000;
    double dg_tau = 17.0;
    int dg_samples = 400, dg_classes = 2, dg_count = 10;
    double dg_spread = 0.4;

    std::string replay_manifest;
  } st;

  app.add_option("--output-dir", st.output_dir, "directory for artifacts")->capture_default_str();
  app.add_option("--format", st.format, "metrics format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  app.add_option("--seed", st.seed, "global seed")->capture_default_str();

  std::string subcommand;
  json cfg;

  {
    auto* cmd = app.add_subcommand("spectra", "activation Hermite spectrum with oracle check");
    cmd->add_option("--activation", st.spectra_activation, "activation name")
        ->capture_default_str();
    cmd->add_option("--order", st.spectra_order, "truncation order")->capture_default_str();
    cmd->callback([&]() {
      subcommand = "spectra";
      cfg = {{"activation", activation_to_config(st.spectra_activation)},
             {"order", st.spectra_order}};
    });
  }
  {
    auto* cmd = app.add_subcommand("design", "synthesize an HP activation spectrum");
    cmd->add_option("--max", st.design_max, "largest coefficient")->capture_default_str();
    cmd->add_option("--min", st.design_min, "coefficient floor")->capture_default_str();
    cmd->add_option("--gap", st.design_gap, "descent spacing")->capture_default_str();
    cmd->add_option("--n", st.design_terms, "number of terms")->capture_default_str();
    cmd->add_option("--layout", st.design_layout, "consecutive, odd, or alt")
        ->capture_default_str();
    cmd->callback([&]() {
      subcommand = "design";
      cfg = {{"max", st.design_max},
             {"min", st.design_min},
             {"gap", st.design_gap},
             {"n", st.design_terms},
             {"layout", st.design_layout}};
    });
  }
  {
    auto* cmd = app.add_subcommand("criticality", "Lyapunov regime and recurrence diagnostics");
    cmd->add_option("--mode", st.crit_mode, "scaled-identity, orthogonal, or random")
        ->capture_default_str();
    cmd->add_option("--dim", st.crit_dim, "layer width")->capture_default_str();
    cmd->add_option("--depth", st.crit_depth, "layer count")->capture_default_str();
    cmd->add_option("--scale", st.crit_scale, "weight scale")->capture_default_str();
    cmd->add_option("--activation", st.crit_activation, "activation name")->capture_default_str();
    cmd->add_option("--trajectory-steps", st.crit_steps, "trajectory length")
        ->capture_default_str();
    cmd->add_option("--esn-model", st.crit_esn_model, "trained model json (reservoir mode)");
    cmd->add_option("--data", st.crit_data, "input series csv (reservoir mode)");
    cmd->add_option("--rp-fraction", st.crit_fraction, "epsilon fraction of the max distance")
        ->capture_default_str();
    cmd->callback([&]() {
      subcommand = "criticality";
      cfg = {{"mode", st.crit_mode},
             {"dim", st.crit_dim},
             {"depth", st.crit_depth},
             {"scale", st.crit_scale},
             {"activation", activation_to_config(st.crit_activation)},
             {"trajectory_steps", st.crit_steps},
             {"rp_fraction", st.crit_fraction},
             {"seed", st.seed}};
      if (!st.crit_esn_model.empty()) {
        cfg["esn_model"] = st.crit_esn_model;
        cfg["data"] = st.crit_data;
      }
    });
  }
  {
    auto* esn = app.add_subcommand("esn", "deep echo state network experiments");
    esn->require_subcommand(1);

    auto add_common = [&](CLI::App* cmd) {
      cmd->add_option("--data", st.esn_data, "input series csv")->required();
      cmd->add_option("--split", st.esn_split, "train:val:test ratios")->capture_default_str();
      cmd->add_option("--layers", st.esn_layers, "reservoir count")->capture_default_str();
      cmd->add_option("--width", st.esn_width, "units per reservoir")->capture_default_str();
      cmd->add_option("--spectral-radius", st.esn_rho, "recurrent spectral radius")
          ->capture_default_str();
      cmd->add_option("--leak", st.esn_leak, "leak rate")->capture_default_str();
      cmd->add_option("--washout", st.esn_washout, "discarded initial steps")
          ->capture_default_str();
      cmd->add_option("--ridge", st.esn_ridge, "readout regularization")->capture_default_str();
      cmd->add_option("--activation", st.esn_activation, "reservoir activation")
          ->capture_default_str();
      cmd->add_option("--input-scaling", st.esn_input_scaling, "input weight scale")
          ->capture_default_str();
      cmd->add_flag("--normalize", st.esn_normalize, "z-score columns with train stats");
    };
    auto common_cfg = [&]() {
      return json{{"data", st.esn_data},
                  {"split", st.esn_split},
                  {"layers", st.esn_layers},
                  {"width", st.esn_width},
                  {"spectral_radius", st.esn_rho},
                  {"leak_rate", st.esn_leak},
                  {"washout", st.esn_washout},
                  {"ridge_lambda", st.esn_ridge},
                  {"activation", activation_to_config(st.esn_activation)},
                  {"input_scaling", st.esn_input_scaling},
                  {"normalize", st.esn_normalize},
                  {"format", st.format},
                  {"seed", st.seed}};
    };

    auto* train = esn->add_subcommand("train", "fit the ridge readout and report metrics");
    add_common(train);
    train->add_option("--sweep-ridge", st.esn_sweep_ridge, "lambda list, e.g. 0,1e-6..1");
    train->add_option("--anomaly-threshold", st.esn_threshold, "absolute error threshold");
    train->callback([&, common_cfg]() {
      subcommand = "esn-train";
      cfg = common_cfg();
      if (!st.esn_sweep_ridge.empty()) cfg["sweep_ridge"] = st.esn_sweep_ridge;
      if (st.esn_threshold >= 0.0) cfg["anomaly_threshold"] = st.esn_threshold;
    });

    auto* predict_cmd = esn->add_subcommand("predict", "one-step-ahead prediction with a model");
    predict_cmd->add_option("--model", st.esn_model_path, "trained model json")->required();
    predict_cmd->add_option("--data", st.esn_data, "input series csv")->required();
    predict_cmd->callback([&]() {
      subcommand = "esn-predict";
      cfg = {{"model", st.esn_model_path}, {"data", st.esn_data}, {"format", st.format}};
    });

    auto* evolve = esn->add_subcommand("evolve", "evolve depth/width with the hybrid swarm");
    add_common(evolve);
    evolve->add_option("--depth", st.esn_depth_range, "depth bounds lo..hi")
        ->capture_default_str();
    evolve->add_option("--width-range", st.esn_width_range, "width bounds lo..hi")
        ->capture_default_str();
    evolve->add_option("--generations", st.esn_generations, "swarm iterations")
        ->capture_default_str();
    evolve->add_option("--population", st.esn_population, "particle count")
        ->capture_default_str();
    evolve->add_option("--threads", st.esn_threads, "parallel fitness evaluations")
        ->capture_default_str();
    evolve->callback([&, common_cfg]() {
      subcommand = "esn-evolve";
      cfg = common_cfg();
      cfg["depth"] = st.esn_depth_range;
      cfg["width"] = st.esn_width_range;
      cfg["generations"] = st.esn_generations;
      cfg["population"] = st.esn_population;
      cfg["threads"] = st.esn_threads;
    });
  }
  {
    auto* mlp = app.add_subcommand("mlp", "desk-scale fully connected experiments");
    mlp->require_subcommand(1);

    auto add_common = [&](CLI::App* cmd) {
      cmd->add_option("--dataset", st.mlp_dataset, "blobs, moons, or idx")->capture_default_str();
      cmd->add_option("--samples", st.mlp_samples, "synthetic sample count")
          ->capture_default_str();
      cmd->add_option("--classes", st.mlp_classes, "blob class count")->capture_default_str();
      cmd->add_option("--spread", st.mlp_spread, "blob noise")->capture_default_str();
      cmd->add_option("--images", st.mlp_images, "idx images path");
      cmd->add_option("--labels", st.mlp_labels, "idx labels path");
      cmd->add_option("--downsample", st.mlp_downsample, "idx pooling factor")
          ->capture_default_str();
      cmd->add_option("--hidden", st.mlp_hidden, "hidden layer widths")->delimiter(',');
      cmd->add_option("--activation", st.mlp_activation, "hidden activation")
          ->capture_default_str();
      cmd->add_option("--learning-rate", st.mlp_lr, "sgd step size")->capture_default_str();
      cmd->add_option("--batch", st.mlp_batch, "minibatch size")->capture_default_str();
      cmd->add_option("--epochs", st.mlp_epochs, "training epochs")->capture_default_str();
    };
    auto common_cfg = [&]() {
      json j{{"dataset", st.mlp_dataset},
             {"samples", st.mlp_samples},
             {"classes", st.mlp_classes},
             {"spread", st.mlp_spread},
             {"hidden", st.mlp_hidden},
             {"learning_rate", st.mlp_lr},
             {"batch", st.mlp_batch},
             {"epochs", st.mlp_epochs},
             {"seed", st.seed},
             {"data_seed", st.seed},
             {"downsample", st.mlp_downsample},
             {"activation", activation_to_config(st.mlp_activation)}};
      if (!st.mlp_images.empty()) j["images"] = st.mlp_images;
      if (!st.mlp_labels.empty()) j["labels"] = st.mlp_labels;
      return j;
    };

    auto* train = mlp->add_subcommand("train", "train one configuration");
    add_common(train);
    train->callback([&, common_cfg]() {
      subcommand = "mlp-train";
      cfg = common_cfg();
    });

    auto* sweep_cmd = mlp->add_subcommand("sweep", "sweep an HP knob or the batch size");
    add_common(sweep_cmd);
    sweep_cmd
        ->add_option("--param", st.mlp_param, "max-coeff, min-coeff, spacing, or batch")
        ->required();
    sweep_cmd->add_option("--range", st.mlp_range, "lo:hi:step");
    sweep_cmd->add_option("--values", st.mlp_values, "comma list");
    sweep_cmd->add_option("--threads", st.mlp_threads, "parallel runs")->capture_default_str();
    sweep_cmd->add_option("--hp-max", st.mlp_hp_max, "fixed HP max during other sweeps")
        ->capture_default_str();
    sweep_cmd->add_option("--hp-min", st.mlp_hp_min, "fixed HP min during other sweeps")
        ->capture_default_str();
    sweep_cmd->add_option("--hp-gap", st.mlp_hp_gap, "fixed HP spacing during other sweeps")
        ->capture_default_str();
    sweep_cmd->add_option("--hp-terms", st.mlp_hp_terms, "HP term count in sweeps")
        ->capture_default_str();
    sweep_cmd->callback([&, common_cfg]() {
      subcommand = "mlp-sweep";
      cfg = common_cfg();
      cfg["param"] = st.mlp_param;
      cfg["range"] = st.mlp_range;
      cfg["values"] = st.mlp_values;
      cfg["threads"] = st.mlp_threads;
      cfg["hp_max"] = st.mlp_hp_max;
      cfg["hp_min"] = st.mlp_hp_min;
      cfg["hp_gap"] = st.mlp_hp_gap;
      cfg["hp_terms"] = st.mlp_hp_terms;
    });
  }
  {
    auto* cmd = app.add_subcommand("datagen", "generate datasets");
    cmd->require_subcommand(1);

    auto* mg = cmd->add_subcommand("mackey-glass", "chaotic delay series");
    mg->add_option("--length", st.dg_length, "steps")->capture_default_str();
    mg->add_option("--tau", st.dg_tau, "delay")->capture_default_str();
    mg->callback([&]() {
      subcommand = "datagen";
      cfg = {{"kind", "mackey-glass"},
             {"length", st.dg_length},
             {"tau", st.dg_tau},
             {"seed", st.seed}};
    });

    auto* blobs = cmd->add_subcommand("blobs", "gaussian class blobs");
    blobs->add_option("--samples", st.dg_samples, "sample count")->capture_default_str();
    blobs->add_option("--classes", st.dg_classes, "class count")->capture_default_str();
    blobs->add_option("--spread", st.dg_spread, "noise scale")->capture_default_str();
    blobs->callback([&]() {
      subcommand = "datagen";
      cfg = {{"kind", "blobs"},
             {"samples", st.dg_samples},
             {"classes", st.dg_classes},
             {"spread", st.dg_spread},
             {"seed", st.seed}};
    });

    auto* idx = cmd->add_subcommand("idx-fixture", "small random idx pair");
    idx->add_option("--count", st.dg_count, "image count")->capture_default_str();
    idx->callback([&]() {
      subcommand = "datagen";
      cfg = {{"kind", "idx-fixture"}, {"count", st.dg_count}, {"seed", st.seed}};
    });
  }
  {
    auto* cmd = app.add_subcommand("replay", "re-run a manifest and verify artifact checksums");
    cmd->add_option("manifest", st.replay_manifest, "manifest.json path")->required();
    cmd->callback([&]() {
      subcommand = "replay";
      cfg = {{"manifest", st.replay_manifest}};
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    return execute(subcommand, cfg, st.output_dir);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
}
