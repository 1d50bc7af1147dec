#pragma once

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace hermnet {

/// Orthonormal probabilists' Hermite polynomials: unit norm under the
/// standard Gaussian measure. H_0(x) = 1, H_1(x) = x, and
/// H_{n+1}(x) = x/sqrt(n+1) H_n(x) - sqrt(n/(n+1)) H_{n-1}(x).
double eval_hermite(int n, double x);

/// H_n'(x) = sqrt(n) H_{n-1}(x); zero for n = 0.
double eval_hermite_deriv(int n, double x);

/// Closed form for H_n(0): zero for odd n, (-1)^{n/2} (n-1)!!/sqrt(n!) for even n.
double hermite_at_zero(int n);

/// Values H_0(x)..H_N(x) in one recurrence sweep.
std::vector<double> eval_hermite_all(int max_order, double x);

/// Truncated expansion in the orthonormal basis: a_0..a_N.
struct HermiteSpectrum {
  std::vector<double> coefficients;

  HermiteSpectrum() = default;
  explicit HermiteSpectrum(std::vector<double> coeffs) : coefficients(std::move(coeffs)) {}

  int order() const { return static_cast<int>(coefficients.size()) - 1; }

  nlohmann::json to_json() const;
  static HermiteSpectrum from_json(const nlohmann::json& j);
};

/// Gauss-Hermite rule transformed to the N(0,1) measure: sum_i w_i g(x_i)
/// approximates E[g(x)], weights summing to one. Nodes/weights are
/// symmetrized so even/odd integrands behave exactly.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussHermiteRule(int points);
};

/// Default node count for projecting up to max_order.
int default_quad_points(int max_order);

/// Coefficients a_n = E[f(x) H_n(x)] by Gauss-Hermite quadrature.
/// Throws std::invalid_argument if quad_points < max_order + 1.
HermiteSpectrum project(const std::function<double(double)>& f, int max_order, int quad_points);
HermiteSpectrum project(const std::function<double(double)>& f, int max_order);

/// Truncated series value sum_n a_n H_n(x).
double reconstruct(const HermiteSpectrum& spectrum, double x);

}  // namespace hermnet
