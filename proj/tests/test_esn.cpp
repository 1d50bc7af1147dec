#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "hermnet/data.hpp"
#include "hermnet/dynamics.hpp"
#include "hermnet/esn.hpp"
#include "hermnet/rng.hpp"
#include "test_support.hpp"

using namespace hermnet;

namespace {

Eigen::MatrixXd as_column(const Eigen::VectorXd& v) {
  Eigen::MatrixXd m(v.size(), 1);
  m.col(0) = v;
  return m;
}

std::vector<Eigen::VectorXd> random_initial(const DeepEsnConfig& cfg, uint64_t seed) {
  Rng rng(seed);
  std::vector<Eigen::VectorXd> init;
  for (int s : cfg.layer_sizes) {
    Eigen::VectorXd v(s);
    for (int i = 0; i < s; ++i) v(i) = rng.uniform(-1.0, 1.0);
    init.push_back(v);
  }
  return init;
}

}  // namespace

TEST_CASE("reservoir build") {
  SUBCASE("deterministic per seed") {
    DeepEsnConfig cfg = DeepEsnConfig::uniform(2, 40);
    cfg.seed = 7;
    const auto a = build_esn(cfg);
    const auto b = build_esn(cfg);
    CHECK((a.input_weights - b.input_weights).cwiseAbs().maxCoeff() == 0.0);
    for (size_t l = 0; l < a.recurrent.size(); ++l)
      CHECK((a.recurrent[l] - b.recurrent[l]).cwiseAbs().maxCoeff() == 0.0);
    cfg.seed = 8;
    const auto c = build_esn(cfg);
    CHECK((a.recurrent[0] - c.recurrent[0]).cwiseAbs().maxCoeff() > 0.0);
  }
  SUBCASE("spectral radius is rescaled exactly") {
    for (int width : {1, 30, 80}) {
      DeepEsnConfig cfg = DeepEsnConfig::uniform(1, width);
      cfg.spectral_radius = 0.9;
      cfg.seed = 3;
      const auto res = build_esn(cfg);
      CHECK(spectral_radius_of(res.recurrent[0]) == doctest::Approx(0.9).epsilon(1e-10));
    }
    // size 1: the single entry is +-0.9
    DeepEsnConfig tiny = DeepEsnConfig::uniform(1, 1);
    tiny.spectral_radius = 0.9;
    tiny.seed = 5;
    const auto res = build_esn(tiny);
    CHECK(std::abs(res.recurrent[0](0, 0)) == doctest::Approx(0.9).epsilon(1e-12));
  }
  SUBCASE("structural counts for a 3-layer stack") {
    DeepEsnConfig cfg = DeepEsnConfig::uniform(3, 20);
    const auto res = build_esn(cfg);
    CHECK(res.recurrent.size() == 3);
    CHECK(res.inter_layer.size() == 2);
    CHECK(res.input_weights.rows() == 20);
    CHECK(res.input_weights.cols() == 1);
  }
  SUBCASE("config validation") {
    CHECK_THROWS_AS(DeepEsnConfig::uniform(1, 0), std::invalid_argument);
    DeepEsnConfig neg = DeepEsnConfig::uniform(1, 10);
    neg.spectral_radius = -0.5;
    CHECK_THROWS_AS(build_esn(neg), std::invalid_argument);
    DeepEsnConfig leak = DeepEsnConfig::uniform(1, 10);
    leak.leak_rate = 0.0;
    CHECK_THROWS_AS(build_esn(leak), std::invalid_argument);
  }
}

TEST_CASE("state evolution") {
  SUBCASE("odd activation with zero input stays at zero") {
    DeepEsnConfig cfg = DeepEsnConfig::uniform(2, 15);
    cfg.washout = 0;
    const auto res = build_esn(cfg);
    const auto states = run_states(res, Eigen::MatrixXd::Zero(50, 1));
    for (const auto& layer : states) CHECK(layer.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("echo state property at spectral radius 0.9") {
    DeepEsnConfig cfg = DeepEsnConfig::uniform(1, 60);
    cfg.washout = 0;
    cfg.seed = 17;
    cfg.input_scaling = 0.5;
    const auto res = build_esn(cfg);
    const auto input = as_column(mackey_glass(700, {}, 17));

    const auto init_a = random_initial(cfg, 100);
    const auto init_b = random_initial(cfg, 200);
    const auto sa = run_states(res, input, &init_a);
    const auto sb = run_states(res, input, &init_b);
    const double gap =
        (sa[0].row(sa[0].rows() - 1) - sb[0].row(sb[0].rows() - 1)).cwiseAbs().maxCoeff();
    CHECK(gap < 1e-6);
  }
  SUBCASE("hp activation keeps states finite on mackey-glass") {
    DeepEsnConfig cfg = DeepEsnConfig::uniform(2, 30);
    cfg.activation = synthesize_hp(HpDesignProfile{});
    cfg.washout = 50;
    const auto res = build_esn(cfg);
    const auto input = as_column(mackey_glass(600, {}, 2));
    const auto states = run_states(res, input);
    for (const auto& layer : states) CHECK(layer.allFinite());
  }
  SUBCASE("dimension mismatch") {
    DeepEsnConfig cfg = DeepEsnConfig::uniform(1, 10);
    const auto res = build_esn(cfg);
    CHECK_THROWS_AS(run_states(res, Eigen::MatrixXd::Zero(200, 2)), std::invalid_argument);
  }
}

TEST_CASE("ridge readout") {
  SUBCASE("exactly linear targets at lambda zero leave no residual") {
    Rng rng(31);
    Eigen::MatrixXd states(40, 5);
    for (int r = 0; r < 40; ++r)
      for (int c = 0; c < 5; ++c) states(r, c) = rng.normal();
    Eigen::VectorXd w(5);
    w << 1.0, -2.0, 0.5, 3.0, -0.25;
    const Eigen::MatrixXd targets = states * w + Eigen::MatrixXd::Constant(40, 1, 0.7);
    const auto readout = fit_readout(states, targets, 0.0);
    Eigen::MatrixXd design(40, 6);
    design.leftCols(5) = states;
    design.rightCols(1).setOnes();
    CHECK((design * readout - targets).cwiseAbs().maxCoeff() < 1e-9);
  }
  SUBCASE("large lambda shrinks the weights toward zero") {
    Rng rng(32);
    Eigen::MatrixXd states(30, 4);
    Eigen::MatrixXd targets(30, 1);
    for (int r = 0; r < 30; ++r) {
      for (int c = 0; c < 4; ++c) states(r, c) = rng.normal();
      targets(r, 0) = rng.normal();
    }
    const auto readout = fit_readout(states, targets, 1e12);
    CHECK(readout.cwiseAbs().maxCoeff() < 1e-6);
  }
  SUBCASE("hand-solved 2x2 normal equations") {
    Eigen::MatrixXd states(2, 1);
    states << 1.0, 2.0;
    Eigen::MatrixXd targets(2, 1);
    targets << 2.0, 3.0;
    // design [[1,1],[2,1]]; exact interpolation w = 1, b = 1
    const auto readout = fit_readout(states, targets, 0.0);
    CHECK(readout(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(readout(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("singular system at lambda zero is reported") {
    Eigen::MatrixXd states = Eigen::MatrixXd::Zero(10, 3);  // rank deficient with bias
    const Eigen::MatrixXd targets = Eigen::MatrixXd::Ones(10, 1);
    CHECK_THROWS_AS(fit_readout(states, targets, 0.0), std::runtime_error);
    // raising lambda recovers
    CHECK_NOTHROW(fit_readout(states, targets, 1e-6));
  }
  SUBCASE("training residual grows with lambda") {
    const auto series = as_column(mackey_glass(900, {}, 4));
    DeepEsnConfig cfg = DeepEsnConfig::uniform(1, 50);
    cfg.seed = 4;
    double last = -1.0;
    for (double lambda : {1e-8, 1e-4, 1e-2, 1.0, 100.0}) {
      cfg.ridge_lambda = lambda;
      const auto model = train_esn(cfg, series);
      CHECK(model.train_rmse >= last - 1e-12);
      last = model.train_rmse;
    }
  }
}

TEST_CASE("prediction") {
  SUBCASE("mackey-glass beats the predict-the-mean baseline") {
    const auto series = as_column(mackey_glass(1500, {}, 9));
    DeepEsnConfig cfg = DeepEsnConfig::uniform(2, 80);
    cfg.seed = 9;
    const auto model = train_esn(cfg, series.topRows(1000));
    const auto preds = predict(model, series);
    const int offset = prediction_offset(model);
    const Eigen::VectorXd observed = series.col(0).segment(offset, preds.rows());
    const auto report = metrics(Eigen::VectorXd(preds.col(0)), observed);
    const double stddev = std::sqrt(
        (observed.array() - observed.mean()).square().mean());
    CHECK(report.rmse < stddev);
  }
  SUBCASE("constant series predicts the constant") {
    DeepEsnConfig cfg = DeepEsnConfig::uniform(1, 20);
    cfg.washout = 30;
    const Eigen::MatrixXd series = Eigen::MatrixXd::Constant(200, 1, 0.8);
    const auto model = train_esn(cfg, series);
    const auto preds = predict(model, series);
    CHECK((preds.array() - 0.8).abs().maxCoeff() < 1e-6);
  }
  SUBCASE("training series reproduces the training error") {
    const auto series = as_column(mackey_glass(800, {}, 10));
    DeepEsnConfig cfg = DeepEsnConfig::uniform(1, 40);
    cfg.seed = 10;
    const auto model = train_esn(cfg, series);
    const auto preds = predict(model, series);
    const int offset = prediction_offset(model);
    const Eigen::VectorXd observed = series.col(0).segment(offset, preds.rows());
    const double rmse = std::sqrt((preds.col(0) - observed).array().square().mean());
    CHECK(rmse == doctest::Approx(model.train_rmse).epsilon(1e-9));
  }
  SUBCASE("bit-identical predictions for identical config and seed") {
    const auto series = as_column(mackey_glass(600, {}, 12));
    DeepEsnConfig cfg = DeepEsnConfig::uniform(2, 30);
    cfg.seed = 12;
    const auto pa = predict(train_esn(cfg, series), series);
    const auto pb = predict(train_esn(cfg, series), series);
    CHECK((pa - pb).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("anomaly flags") {
  SUBCASE("identical series flag nothing") {
    Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(20, 0.0, 1.0);
    CHECK(flag_anomalies(v, v, 0.1).empty());
  }
  SUBCASE("an injected spike is flagged exactly once") {
    Eigen::VectorXd pred = Eigen::VectorXd::Zero(50);
    Eigen::VectorXd obs = pred;
    obs(17) = 1.0;
    const auto flags = flag_anomalies(pred, obs, 0.1);
    REQUIRE(flags.size() == 1);
    CHECK(flags[0].time_index == 17);
    CHECK(flags[0].observed == 1.0);
    CHECK(flags[0].error == doctest::Approx(-1.0));
  }
  SUBCASE("zero threshold flags all differing indices") {
    Eigen::VectorXd pred(3), obs(3);
    pred << 1.0, 2.0, 3.0;
    obs << 1.0, 2.5, 3.5;
    CHECK(flag_anomalies(pred, obs, 0.0).size() == 2);
  }
}

TEST_CASE("model serialization round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "hermnet_esn_test";
  std::filesystem::create_directories(dir);
  const auto series = as_column(mackey_glass(500, {}, 15));
  DeepEsnConfig cfg = DeepEsnConfig::uniform(2, 25);
  cfg.seed = 15;
  cfg.activation = synthesize_hp(HpDesignProfile{});
  const auto model = train_esn(cfg, series);
  save_esn(model, dir / "model.json", dir / "model.bin");
  const auto loaded = load_esn(dir / "model.json");
  const auto pa = predict(model, series);
  const auto pb = predict(loaded, series);
  CHECK((pa - pb).cwiseAbs().maxCoeff() == 0.0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("reservoir states of a sized stack are more recurrent than a degenerate one") {
  const auto series = as_column(mackey_glass(900, {}, 18));
  DeepEsnConfig fitted = DeepEsnConfig::uniform(2, 60);
  fitted.seed = 18;
  DeepEsnConfig degenerate = DeepEsnConfig::uniform(1, 1);
  degenerate.seed = 18;

  auto rate_of = [&series](const DeepEsnConfig& cfg) {
    const auto res = build_esn(cfg);
    const auto states = run_states(res, series);
    std::vector<Eigen::VectorXd> rows;
    const auto& top = states.back();
    for (int i = 0; i < std::min<int>(200, static_cast<int>(top.rows())); ++i)
      rows.push_back(top.row(i).transpose());
    return recurrence_plot(rows, epsilon_from_fraction(rows, 0.1)).recurrence_rate;
  };
  CHECK(rate_of(fitted) > rate_of(degenerate));
}
