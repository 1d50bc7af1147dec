#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hermnet/hermite.hpp"

namespace hermnet {

enum class ActKind { Identity, Sigmoid, Tanh, ReLU, Step, Rbf, Swish, Hp };

std::string to_string(ActKind kind);

/// Scalar nonlinearity with derivative. Immutable value type; the Hp kind
/// evaluates its Hermite spectrum on |x| <= 8 and saturates outside, which
/// keeps recurrent state loops bounded without touching the Gaussian bulk.
/// Kink conventions: relu'(0) = 0 and step' = 0 everywhere.
class ActivationFn {
 public:
  static ActivationFn identity();
  static ActivationFn sigmoid();
  static ActivationFn tanh_fn();
  static ActivationFn relu();
  static ActivationFn step();
  static ActivationFn swish();
  static ActivationFn rbf(double center = 1.0, double scale = 1.0);
  static ActivationFn hp(HermiteSpectrum spectrum, std::string name = "");

  double operator()(double x) const { return eval(x); }
  double eval(double x) const;
  double deriv(double x) const;

  ActKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  double rbf_center() const { return center_; }
  double rbf_scale() const { return scale_; }
  const HermiteSpectrum& spectrum() const;

 private:
  ActivationFn(ActKind kind, std::string name) : kind_(kind), name_(std::move(name)) {}

  ActKind kind_;
  std::string name_;
  double center_ = 1.0, scale_ = 1.0;       // Rbf only
  HermiteSpectrum spectrum_;                // Hp only
};

/// Parses the CLI/config naming: "sigmoid", "tanh", "relu", "step", "swish",
/// "identity", "rbf:c=1,s=1", "hp:max=0.62,min=0.40,gap=0.13,n=3",
/// "hp-file:<path to spectrum json>".
ActivationFn parse_activation(const std::string& text);

/// Coefficient placement for synthesized activations. Consecutive is the
/// default (orders 0..n-1); the other layouts skip orders.
enum class HpLayout { Consecutive, OddOrders, AlternatingOrders };

/// Design targets for an HP activation: arithmetic descent from max_coeff by
/// spacing, floored at min_coeff, num_terms coefficients.
struct HpDesignProfile {
  double max_coeff = 0.62;
  double min_coeff = 0.40;
  double spacing = 0.13;
  int num_terms = 3;
  HpLayout layout = HpLayout::Consecutive;

  void validate() const;  // throws std::invalid_argument
};

/// The descending coefficient sequence of a profile (before layout placement).
std::vector<double> design_coefficients(const HpDesignProfile& profile);

/// HP activation for the profile; its spectrum assigns the designed
/// coefficients to orders chosen by the layout.
ActivationFn synthesize_hp(const HpDesignProfile& profile);

/// Verbatim closed-form/paper spectra for kinds that have one
/// (Rbf, Step, ReLU, and the partial Sigmoid/Swish value lists).
/// Throws std::invalid_argument for other kinds.
HermiteSpectrum paper_spectrum(const ActivationFn& a, int max_order);

/// Quadrature projection of an activation; node count is doubled for the
/// kinked kinds (ReLU, Step).
HermiteSpectrum quadrature_spectrum(const ActivationFn& a, int max_order);

/// Quadrature spectrum plus per-coefficient absolute differences against the
/// paper closed form where one exists. The quadrature values are authoritative.
struct SpectrumReport {
  HermiteSpectrum quadrature;
  std::optional<HermiteSpectrum> paper;
  std::vector<double> abs_diff;  // empty when no closed form exists
};

SpectrumReport verified_spectrum(const ActivationFn& a, int max_order);

}  // namespace hermnet
