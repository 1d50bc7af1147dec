#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "hermnet/data.hpp"
#include "hermnet/dynamics.hpp"
#include "hermnet/rng.hpp"
#include "test_support.hpp"

using namespace hermnet;

namespace {

std::filesystem::path temp_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "hermnet_data_test";
  std::filesystem::create_directories(dir);
  return dir;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

}  // namespace

TEST_CASE("mackey-glass generator") {
  SUBCASE("chaotic regime stays on the known attractor range") {
    const auto series = mackey_glass(5000, {}, 1);
    CHECK(series.minCoeff() > 0.0);
    CHECK(series.maxCoeff() < 1.6);
  }
  SUBCASE("beta zero decays exponentially toward zero") {
    MackeyGlassParams p;
    p.beta = 0.0;
    const auto series = mackey_glass(2000, p, 3);
    CHECK(series(0) > 0.0);
    for (int i = 1; i < series.size(); ++i) CHECK(series(i) < series(i - 1));
    // gamma = 0.1, dt = 0.1: x(T) = x0 exp(-gamma * T * dt)
    const double expected = series(0) * std::exp(-0.1 * 1999 * 0.1);
    CHECK(series(1999) == doctest::Approx(expected).epsilon(1e-6));
  }
  SUBCASE("deterministic per seed") {
    const auto a = mackey_glass(500, {}, 42);
    const auto b = mackey_glass(500, {}, 42);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    const auto c = mackey_glass(500, {}, 43);
    CHECK((a - c).cwiseAbs().maxCoeff() > 0.0);
  }
  SUBCASE("invalid parameters") {
    CHECK_THROWS_AS(mackey_glass(0), std::invalid_argument);
    MackeyGlassParams p;
    p.dt = 0.0;
    CHECK_THROWS_AS(mackey_glass(100, p), std::invalid_argument);
    CHECK_THROWS_AS(mackey_glass(100), std::invalid_argument);  // 100 <= tau/dt = 170
  }
  SUBCASE("short delay converges toward a fixed point; tau 17 does not") {
    MackeyGlassParams quiet;
    quiet.tau = 4.0;  // below the first oscillatory onset
    const auto fixed = mackey_glass(12000, quiet, 7);
    const auto tail = fixed.tail(500);
    CHECK(tail.maxCoeff() - tail.minCoeff() < 1e-3);
    CHECK(tail.mean() == doctest::Approx(1.0).epsilon(1e-2));  // x* = (beta/gamma - 1)^(1/n)

    const auto chaotic = mackey_glass(8000, {}, 7);
    const auto ctail = chaotic.tail(500);
    CHECK(ctail.maxCoeff() - ctail.minCoeff() > 0.1);
  }
}

TEST_CASE("csv ingestion") {
  const auto dir = temp_dir();
  SUBCASE("well-formed file") {
    write_text(dir / "ok.csv", "a,b\n1,2\n3,4\n5,6\n");
    const auto series = load_csv_series(dir / "ok.csv");
    CHECK(series.values.rows() == 3);
    CHECK(series.values.cols() == 2);
    CHECK(series.columns == std::vector<std::string>{"a", "b"});
    CHECK(series.rejected_rows.empty());
    CHECK(series.values(2, 1) == 6.0);
  }
  SUBCASE("headerless numeric file") {
    write_text(dir / "nohdr.csv", "1,2\n3,4\n");
    const auto series = load_csv_series(dir / "nohdr.csv");
    CHECK(series.values.rows() == 2);
    CHECK(series.columns.size() == 2);
  }
  SUBCASE("blank cell rejects the row with its index") {
    write_text(dir / "gap.csv", "a,b\n1,2\n3,\n5,6\n");
    const auto series = load_csv_series(dir / "gap.csv");
    CHECK(series.values.rows() == 2);
    CHECK(series.rejected_rows == std::vector<int>{1});
  }
  SUBCASE("unparseable cell rejects the row") {
    write_text(dir / "junk.csv", "1,2\nx,4\n5,6\n");
    const auto series = load_csv_series(dir / "junk.csv");
    CHECK(series.values.rows() == 2);
    CHECK(series.rejected_rows == std::vector<int>{1});
  }
  SUBCASE("empty file errors") {
    write_text(dir / "empty.csv", "");
    CHECK_THROWS_AS(load_csv_series(dir / "empty.csv"), std::invalid_argument);
  }
  SUBCASE("header width mismatch errors") {
    write_text(dir / "mismatch.csv", "a,b,c\n1,2\n3,4\n");
    CHECK_THROWS_AS(load_csv_series(dir / "mismatch.csv"), std::invalid_argument);
  }
  SUBCASE("solar-shaped file: 137 columns survive") {
    std::string header, row;
    for (int c = 0; c < 137; ++c) {
      header += (c ? ",plant" : "plant") + std::to_string(c);
      row += (c ? "," : "") + std::to_string(0.5 * c);
    }
    write_text(dir / "solar.csv", header + "\n" + row + "\n" + row + "\n");
    const auto series = load_csv_series(dir / "solar.csv");
    CHECK(series.values.cols() == 137);
    CHECK(series.values.rows() == 2);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("chronological splits") {
  SUBCASE("paper ratios") {
    const auto s = chrono_split(100, 0.7, 0.1, 0.2);
    CHECK(s.train_end == 70);
    CHECK(s.val_end == 80);
    CHECK(s.total == 100);
    const auto l = chrono_split(10, 0.5, 0.1, 0.4);
    CHECK(l.train_end == 5);
    CHECK(l.val_end == 6);
  }
  SUBCASE("ratio sum violation") {
    CHECK_THROWS_AS(chrono_split(100, 0.3, 0.3, 0.3), std::invalid_argument);
  }
  SUBCASE("ranges stay contiguous and covering") {
    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
      const int total = rng.uniform_int(3, 500);
      double a = rng.uniform(0.1, 0.8);
      double b = rng.uniform(0.05, (1.0 - a) * 0.9);
      double c = 1.0 - a - b;
      if (c <= 0.0) continue;
      const auto s = chrono_split(total, a, b, c);
      CHECK(s.train_end >= 0);
      CHECK(s.train_end <= s.val_end);
      CHECK(s.val_end <= s.total);
      CHECK(s.train_size() + s.val_size() + s.test_size() == total);
    }
  }
}

TEST_CASE("metric suite") {
  SUBCASE("identical vectors are all zero") {
    Eigen::VectorXd v(3);
    v << 1.0, 2.0, 3.0;
    const auto m = metrics(v, v);
    CHECK(m.mae == 0.0);
    CHECK(m.rmse == 0.0);
    CHECK(m.mape == 0.0);
  }
  SUBCASE("hand-computed example") {
    Eigen::VectorXd pred(2), obs(2);
    pred << 2.0, 2.0;
    obs << 1.0, 3.0;
    const auto m = metrics(pred, obs);
    CHECK(m.mae == doctest::Approx(1.0));
    CHECK(m.rmse == doctest::Approx(1.0));
    CHECK(m.mape == doctest::Approx(0.5 * (1.0 + 1.0 / 3.0)));
  }
  SUBCASE("near-zero observations are excluded and counted") {
    Eigen::VectorXd pred(3), obs(3);
    pred << 1.0, 2.0, 3.0;
    obs << 0.0, 2.0, 3.0;
    const auto m = metrics(pred, obs);
    CHECK(m.mape_excluded == 1);
    CHECK(m.mape == 0.0);
  }
  SUBCASE("mae never exceeds rmse") {
    Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::VectorXd pred(50), obs(50);
      for (int i = 0; i < 50; ++i) {
        pred(i) = rng.normal();
        obs(i) = rng.normal();
      }
      const auto m = metrics(pred, obs);
      CHECK(m.mae <= m.rmse + 1e-12);
    }
  }
  SUBCASE("permutation equivariance") {
    Rng rng(14);
    Eigen::VectorXd pred(20), obs(20);
    for (int i = 0; i < 20; ++i) {
      pred(i) = rng.normal();
      obs(i) = rng.normal();
    }
    std::vector<int> perm(20);
    for (int i = 0; i < 20; ++i) perm[static_cast<size_t>(i)] = i;
    rng.shuffle(perm);
    Eigen::VectorXd pred2(20), obs2(20);
    for (int i = 0; i < 20; ++i) {
      pred2(i) = pred(perm[static_cast<size_t>(i)]);
      obs2(i) = obs(perm[static_cast<size_t>(i)]);
    }
    const auto a = metrics(pred, obs);
    const auto b = metrics(pred2, obs2);
    CHECK(a.mae == doctest::Approx(b.mae).epsilon(1e-12));
    CHECK(a.rmse == doctest::Approx(b.rmse).epsilon(1e-12));
    CHECK(a.mape == doctest::Approx(b.mape).epsilon(1e-12));
  }
  SUBCASE("length mismatch") {
    const Eigen::VectorXd two = Eigen::VectorXd::Zero(2);
    const Eigen::VectorXd three = Eigen::VectorXd::Zero(3);
    CHECK_THROWS_AS(metrics(two, three), std::invalid_argument);
  }
}

TEST_CASE("train-only normalization") {
  Eigen::MatrixXd values(10, 2);
  for (int i = 0; i < 10; ++i) {
    values(i, 0) = i;
    values(i, 1) = 100.0 + 10.0 * i;
  }
  const auto split = chrono_split(10, 0.5, 0.2, 0.3);
  const auto stats = train_column_stats(values, split);
  // means come from rows 0..4 only
  CHECK(stats.mean(0) == doctest::Approx(2.0));
  CHECK(stats.mean(1) == doctest::Approx(120.0));
  const auto normalized = normalize_columns(values, stats);
  CHECK(normalized.topRows(5).colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
  // later rows keep their offset: no leakage of their statistics
  CHECK(normalized.bottomRows(5).colwise().mean().cwiseAbs().minCoeff() > 0.1);
}

TEST_CASE("idx container") {
  const auto dir = temp_dir();
  SUBCASE("write/load round trip is bit exact") {
    Rng rng(21);
    IdxDataset data;
    data.image_rows = 28;
    data.image_cols = 28;
    data.images.resize(10, 28 * 28);
    data.labels.resize(10);
    for (int i = 0; i < 10; ++i) {
      data.labels(i) = rng.uniform_int(0, 9);
      for (int p = 0; p < 28 * 28; ++p)
        data.images(i, p) = rng.uniform_int(0, 255) / 255.0;
    }
    write_idx(dir / "img.idx", dir / "lbl.idx", data);
    const auto loaded = load_idx(dir / "img.idx", dir / "lbl.idx");
    CHECK(loaded.image_rows == 28);
    CHECK(loaded.image_cols == 28);
    CHECK((loaded.images - data.images).cwiseAbs().maxCoeff() == 0.0);
    CHECK((loaded.labels - data.labels).cwiseAbs().maxCoeff() == 0);

    // second write of the loaded data reproduces the file bytes
    write_idx(dir / "img2.idx", dir / "lbl2.idx", loaded);
    std::ifstream a(dir / "img.idx", std::ios::binary), b(dir / "img2.idx", std::ios::binary);
    std::string ca((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string cb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(ca == cb);
  }
  SUBCASE("downsampling mean-pools") {
    IdxDataset data;
    data.image_rows = 28;
    data.image_cols = 28;
    data.images = Eigen::MatrixXd::Ones(3, 28 * 28);
    data.labels = Eigen::VectorXi::Zero(3);
    write_idx(dir / "d_img.idx", dir / "d_lbl.idx", data);
    const auto pooled = load_idx(dir / "d_img.idx", dir / "d_lbl.idx", 4);
    CHECK(pooled.image_rows == 7);
    CHECK(pooled.image_cols == 7);
    CHECK(pooled.images.cols() == 49);
    CHECK(pooled.images.minCoeff() == doctest::Approx(1.0));
  }
  SUBCASE("count mismatch is rejected") {
    IdxDataset data;
    data.image_rows = 2;
    data.image_cols = 2;
    data.images = Eigen::MatrixXd::Zero(10, 4);
    data.labels = Eigen::VectorXi::Zero(10);
    write_idx(dir / "m_img.idx", dir / "m_lbl.idx", data);
    IdxDataset fewer = data;
    fewer.images = Eigen::MatrixXd::Zero(9, 4);
    fewer.labels = Eigen::VectorXi::Zero(9);
    write_idx(dir / "m_img9.idx", dir / "m_lbl9.idx", fewer);
    CHECK_THROWS_AS(load_idx(dir / "m_img.idx", dir / "m_lbl9.idx"), std::invalid_argument);
  }
  SUBCASE("bad magic is rejected") {
    write_text(dir / "junk.idx", "not an idx file at all");
    write_text(dir / "junk2.idx", "also not");
    CHECK_THROWS_AS(load_idx(dir / "junk.idx", dir / "junk2.idx"), std::invalid_argument);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("chaotic series is less recurrent than a constant one") {
  const auto series = mackey_glass(2000, {}, 11);
  std::vector<Eigen::VectorXd> states;
  for (int i = 1000; i < 1200; ++i) states.push_back(Eigen::VectorXd::Constant(1, series(i)));
  const auto plot = recurrence_plot(states, epsilon_from_fraction(states, 0.1));
  CHECK(plot.recurrence_rate < 1.0);
  CHECK(plot.recurrence_rate > 0.0);
}

TEST_CASE("synthetic datasets") {
  const auto blobs = make_blobs(120, 3, 0.2, 5);
  CHECK(blobs.features.rows() == 120);
  CHECK(blobs.features.cols() == 2);
  CHECK(blobs.num_classes == 3);
  CHECK(blobs.labels.minCoeff() == 0);
  CHECK(blobs.labels.maxCoeff() == 2);

  const auto moons = make_moons(100, 0.05, 6);
  CHECK(moons.num_classes == 2);
  CHECK(moons.features.rows() == 100);

  const auto again = make_blobs(120, 3, 0.2, 5);
  CHECK((blobs.features - again.features).cwiseAbs().maxCoeff() == 0.0);
}
