#include "hermnet/hermite.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace hermnet {

double eval_hermite(int n, double x) {
  if (n < 0) throw std::invalid_argument("eval_hermite: order must be non-negative");
  if (n == 0) return 1.0;
  if (n == 1) return x;
  double hm1 = 1.0;  // H_0
  double h = x;      // H_1
  for (int k = 1; k < n; ++k) {
    const double hp1 = x / std::sqrt(k + 1.0) * h - std::sqrt(k / (k + 1.0)) * hm1;
    hm1 = h;
    h = hp1;
  }
  return h;
}

double eval_hermite_deriv(int n, double x) {
  if (n < 0) throw std::invalid_argument("eval_hermite_deriv: order must be non-negative");
  if (n == 0) return 0.0;
  return std::sqrt(static_cast<double>(n)) * eval_hermite(n - 1, x);
}

double hermite_at_zero(int n) {
  if (n < 0) throw std::invalid_argument("hermite_at_zero: order must be non-negative");
  if (n % 2 == 1) return 0.0;
  const int half = n / 2;
  // (n-1)!!/sqrt(n!) = sqrt(n!)/(2^{n/2} (n/2)!), evaluated in log space
  const double log_mag =
      0.5 * std::lgamma(n + 1.0) - half * std::log(2.0) - std::lgamma(half + 1.0);
  const double sign = (half % 2 == 0) ? 1.0 : -1.0;
  return sign * std::exp(log_mag);
}

std::vector<double> eval_hermite_all(int max_order, double x) {
  if (max_order < 0) throw std::invalid_argument("eval_hermite_all: order must be non-negative");
  std::vector<double> h(static_cast<size_t>(max_order) + 1);
  h[0] = 1.0;
  if (max_order >= 1) h[1] = x;
  for (int k = 1; k < max_order; ++k)
    h[k + 1] = x / std::sqrt(k + 1.0) * h[k] - std::sqrt(k / (k + 1.0)) * h[k - 1];
  return h;
}

namespace {

// Hermite values grow like e^{x^2/4} near the extreme nodes of large rules,
// so the recurrence is run with periodic rescaling. Newton only needs the
// ratio H_m/H_m', which the rescaling preserves.
double newton_step(int m, double x) {
  double hm1 = 1.0, h = x;
  for (int k = 1; k < m; ++k) {
    const double hp1 = x / std::sqrt(k + 1.0) * h - std::sqrt(k / (k + 1.0)) * hm1;
    hm1 = h;
    h = hp1;
    if (std::abs(h) > 1e150) {
      h *= 1e-150;
      hm1 *= 1e-150;
    }
  }
  const double slope = std::sqrt(static_cast<double>(m)) * hm1;
  return slope != 0.0 ? h / slope : 0.0;
}

// 1/sum_k H_k(x)^2 with overflow mapped to zero (the true weight is
// subnormal there anyway)
double christoffel_weight(int m, double x) {
  double hm1 = 1.0, h = x;
  double sum = 1.0 + x * x;
  if (m == 1) sum = 1.0;
  for (int k = 1; k < m - 1; ++k) {
    const double hp1 = x / std::sqrt(k + 1.0) * h - std::sqrt(k / (k + 1.0)) * hm1;
    hm1 = h;
    h = hp1;
    sum += h * h;
    if (sum > 1e300) return 0.0;
  }
  return 1.0 / sum;
}

}  // namespace

GaussHermiteRule::GaussHermiteRule(int points) {
  if (points < 1) throw std::invalid_argument("GaussHermiteRule: need at least one point");
  // nodes: eigenvalues of the Jacobi matrix of the monic probabilists'
  // recurrence (diagonal 0, off-diagonal sqrt(k)), polished by Newton
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(points);
  Eigen::VectorXd sub(points > 1 ? points - 1 : 0);
  for (int k = 1; k < points; ++k) sub(k - 1) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);

  nodes.resize(points);
  weights.resize(points);
  for (int i = 0; i < points; ++i) {
    double x = solver.eigenvalues()(i);
    for (int step = 0; step < 2; ++step) x -= newton_step(points, x);
    nodes[i] = x;
  }
  // exact +/- symmetry
  for (int i = 0; i < points / 2; ++i) {
    const int j = points - 1 - i;
    const double x = 0.5 * (nodes[j] - nodes[i]);
    nodes[i] = -x;
    nodes[j] = x;
  }
  if (points % 2 == 1) nodes[points / 2] = 0.0;

  // Christoffel weights: positive terms, no cancellation, far more accurate
  // at extreme nodes than eigenvector first components
  double total = 0.0;
  for (int i = 0; i < points; ++i) {
    weights[i] = christoffel_weight(points, nodes[i]);
    total += weights[i];
  }
  for (double& w : weights) w /= total;  // unit mass exactly
}

int default_quad_points(int max_order) { return std::max(64, 4 * (max_order + 1)); }

HermiteSpectrum project(const std::function<double(double)>& f, int max_order, int quad_points) {
  if (max_order < 0) throw std::invalid_argument("project: max_order must be non-negative");
  if (quad_points < max_order + 1)
    throw std::invalid_argument("project: quad_points must be at least max_order + 1");
  const GaussHermiteRule rule(quad_points);
  std::vector<double> coeffs(static_cast<size_t>(max_order) + 1, 0.0);
  for (int i = 0; i < quad_points; ++i) {
    const double fx = f(rule.nodes[i]);
    if (!std::isfinite(fx))
      throw std::invalid_argument("project: function not finite at quadrature node");
    const std::vector<double> h = eval_hermite_all(max_order, rule.nodes[i]);
    for (int n = 0; n <= max_order; ++n) coeffs[n] += rule.weights[i] * fx * h[n];
  }
  return HermiteSpectrum(std::move(coeffs));
}

HermiteSpectrum project(const std::function<double(double)>& f, int max_order) {
  return project(f, max_order, default_quad_points(max_order));
}

double reconstruct(const HermiteSpectrum& spectrum, double x) {
  if (spectrum.coefficients.empty()) return 0.0;
  const std::vector<double> h = eval_hermite_all(spectrum.order(), x);
  double acc = 0.0;
  for (size_t n = 0; n < spectrum.coefficients.size(); ++n) acc += spectrum.coefficients[n] * h[n];
  return acc;
}

nlohmann::json HermiteSpectrum::to_json() const {
  return nlohmann::json{{"basis", "probabilists-orthonormal"},
                        {"order", order()},
                        {"coefficients", coefficients}};
}

HermiteSpectrum HermiteSpectrum::from_json(const nlohmann::json& j) {
  if (j.value("basis", "") != std::string("probabilists-orthonormal"))
    throw std::invalid_argument("HermiteSpectrum: unsupported basis tag");
  HermiteSpectrum s(j.at("coefficients").get<std::vector<double>>());
  if (j.contains("order") && j.at("order").get<int>() != s.order())
    throw std::invalid_argument("HermiteSpectrum: order does not match coefficient count");
  return s;
}

}  // namespace hermnet
