#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "hermnet/hermite.hpp"
#include "hermnet/rng.hpp"
#include "test_support.hpp"

using namespace hermnet;

TEST_CASE("eval_hermite base cases and recurrence values") {
  CHECK(eval_hermite(0, 3.7) == 1.0);
  CHECK(eval_hermite(1, 2.0) == 2.0);
  CHECK(eval_hermite(2, 0.0) == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-14));
  // against the independent monic-recurrence route
  for (int n = 0; n <= 15; ++n)
    for (double x : {-4.2, -1.0, 0.3, 2.5})
      CHECK(eval_hermite(n, x) == doctest::Approx(oracle::hermite(n, x)).epsilon(1e-10));
  CHECK_THROWS_AS(eval_hermite(-1, 0.0), std::invalid_argument);
}

TEST_CASE("eval_hermite_deriv closed form and finite differences") {
  CHECK(eval_hermite_deriv(0, 5.0) == 0.0);
  CHECK(eval_hermite_deriv(1, 5.0) == 1.0);
  // frozen from the central difference of eval_hermite(3, .) at 0.7
  CHECK(eval_hermite_deriv(3, 0.7) == doctest::Approx(-0.6246198844097106).epsilon(1e-12));

  for (int n = 0; n <= 10; ++n)
    for (double x = -5.0; x <= 5.0; x += 0.5) {
      const double fd = oracle::central_diff([n](double t) { return eval_hermite(n, t); }, x);
      CHECK(std::abs(eval_hermite_deriv(n, x) - fd) < 1e-6);
    }
}

TEST_CASE("hermite_at_zero parity and recurrence cross-check") {
  CHECK(hermite_at_zero(1) == 0.0);
  CHECK(hermite_at_zero(0) == 1.0);
  CHECK(hermite_at_zero(4) == doctest::Approx(eval_hermite(4, 0.0)).epsilon(1e-13));
  for (int n = 0; n <= 30; ++n) {
    if (n % 2 == 1)
      CHECK(hermite_at_zero(n) == 0.0);
    else
      CHECK(hermite_at_zero(n) == doctest::Approx(eval_hermite(n, 0.0)).epsilon(1e-12));
  }
}

TEST_CASE("gauss-hermite rule is symmetric with unit mass") {
  for (int points : {7, 16, 64}) {
    const GaussHermiteRule rule(points);
    double mass = 0.0;
    for (double w : rule.weights) mass += w;
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
    for (int i = 0; i < points; ++i)
      CHECK(rule.nodes[static_cast<size_t>(i)] ==
            -rule.nodes[static_cast<size_t>(points - 1 - i)]);
  }
}

TEST_CASE("project recovers simple spectra") {
  SUBCASE("identity is H_1") {
    const auto s = project([](double x) { return x; }, 3);
    CHECK(s.coefficients[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(s.coefficients[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.coefficients[2] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(s.coefficients[3] == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("sigmoid matches the known leading coefficients") {
    const auto s = project([](double x) { return 1.0 / (1.0 + std::exp(-x)); }, 2);
    CHECK(s.coefficients[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s.coefficients[1] == doctest::Approx(0.206621).epsilon(1e-5));
    CHECK(std::abs(s.coefficients[2]) < 1e-10);
  }
  SUBCASE("relu first moment from the adaptive oracle") {
    // frozen: E[relu(x) x] = E[x^2 1{x>0}] = 1/2
    const double expected = oracle::hermite_coefficient([](double x) { return x > 0 ? x : 0.0; }, 1);
    CHECK(expected == doctest::Approx(0.5).epsilon(1e-9));
    const auto s = project([](double x) { return x > 0 ? x : 0.0; }, 1, 256);
    CHECK(s.coefficients[1] == doctest::Approx(expected).epsilon(1e-6));
  }
  SUBCASE("under-resolved rule is rejected") {
    CHECK_THROWS_AS(project([](double x) { return x; }, 8, 8), std::invalid_argument);
  }
}

TEST_CASE("reconstruct inverts simple spectra") {
  HermiteSpectrum linear(std::vector<double>{0.0, 1.0});
  CHECK(reconstruct(linear, 4.2) == doctest::Approx(4.2).epsilon(1e-14));

  HermiteSpectrum zero(std::vector<double>{0.0, 0.0, 0.0});
  CHECK(reconstruct(zero, -3.3) == 0.0);

  const auto sig = project([](double x) { return 1.0 / (1.0 + std::exp(-x)); }, 20);
  CHECK(reconstruct(sig, 0.0) == doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("orthonormality under quadrature") {
  const int max_order = 20;
  const GaussHermiteRule rule(2 * max_order);
  for (int m = 0; m <= max_order; ++m)
    for (int n = m; n <= max_order; ++n) {
      double inner = 0.0;
      for (size_t i = 0; i < rule.nodes.size(); ++i)
        inner += rule.weights[i] * eval_hermite(m, rule.nodes[i]) * eval_hermite(n, rule.nodes[i]);
      CHECK(std::abs(inner - (m == n ? 1.0 : 0.0)) < 1e-8);
    }
}

TEST_CASE("project/reconstruct round trip on random spectra") {
  Rng rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    const int order = rng.uniform_int(0, 20);
    std::vector<double> coeffs(static_cast<size_t>(order) + 1);
    for (auto& c : coeffs) c = rng.uniform(-2.0, 2.0);
    const HermiteSpectrum original(coeffs);
    const auto back =
        project([&original](double x) { return reconstruct(original, x); }, order);
    for (int n = 0; n <= order; ++n)
      CHECK(std::abs(back.coefficients[static_cast<size_t>(n)] -
                     original.coefficients[static_cast<size_t>(n)]) < 1e-8);
  }
}

TEST_CASE("stein identity: a_1 equals E[f'] for smooth functions") {
  auto sigmoid = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  auto sigmoid_d = [&sigmoid](double x) {
    const double s = sigmoid(x);
    return s * (1.0 - s);
  };
  const auto s = project(sigmoid, 1);
  const double expected = oracle::integrate(
      [&sigmoid_d](double x) { return sigmoid_d(x) * oracle::gauss_density(x); }, -12.0, 12.0);
  CHECK(std::abs(s.coefficients[1] - expected) < 1e-6);
  CHECK(expected == doctest::Approx(0.206621).epsilon(1e-5));

  auto cubic = [](double x) { return 0.2 * x * x * x - x; };
  auto cubic_d = [](double x) { return 0.6 * x * x - 1.0; };
  const auto sc = project(cubic, 1);
  const double expected_cubic = oracle::integrate(
      [&cubic_d](double x) { return cubic_d(x) * oracle::gauss_density(x); }, -12.0, 12.0);
  CHECK(std::abs(sc.coefficients[1] - expected_cubic) < 1e-6);
}

TEST_CASE("spectrum json round trip") {
  HermiteSpectrum s(std::vector<double>{0.5, 0.206621, 0.0});
  const nlohmann::json j = s.to_json();
  CHECK(j.at("basis") == "probabilists-orthonormal");
  CHECK(j.at("order") == 2);
  const auto back = HermiteSpectrum::from_json(j);
  CHECK(back.coefficients == s.coefficients);

  nlohmann::json bad = j;
  bad["basis"] = "physicists";
  CHECK_THROWS_AS(HermiteSpectrum::from_json(bad), std::invalid_argument);
}
