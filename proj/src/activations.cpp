#include "hermnet/activations.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace hermnet {

namespace {

double sigmoid_val(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Truncated Hermite series are polynomials; left alone they blow up once a
// recurrent loop pushes preactivations outside the Gaussian bulk where the
// basis carries mass. HP activations therefore saturate beyond |x| = 8
// (weight there ~ 1e-14, so projections are unaffected at 1e-8 tolerances).
constexpr double kHpSupport = 8.0;

// double factorial with the usual extension to negative odds:
// (-1)!! = 1, (-3)!! = -1
double double_factorial(int n) {
  if (n == -3) return -1.0;
  if (n <= 0) return 1.0;
  double r = 1.0;
  for (int k = n; k > 1; k -= 2) r *= k;
  return r;
}

double factorial(int n) { return std::exp(std::lgamma(n + 1.0)); }

}  // namespace

std::string to_string(ActKind kind) {
  switch (kind) {
    case ActKind::Identity: return "identity";
    case ActKind::Sigmoid: return "sigmoid";
    case ActKind::Tanh: return "tanh";
    case ActKind::ReLU: return "relu";
    case ActKind::Step: return "step";
    case ActKind::Rbf: return "rbf";
    case ActKind::Swish: return "swish";
    case ActKind::Hp: return "hp";
  }
  return "unknown";
}

ActivationFn ActivationFn::identity() { return {ActKind::Identity, "identity"}; }
ActivationFn ActivationFn::sigmoid() { return {ActKind::Sigmoid, "sigmoid"}; }
ActivationFn ActivationFn::tanh_fn() { return {ActKind::Tanh, "tanh"}; }
ActivationFn ActivationFn::relu() { return {ActKind::ReLU, "relu"}; }
ActivationFn ActivationFn::step() { return {ActKind::Step, "step"}; }
ActivationFn ActivationFn::swish() { return {ActKind::Swish, "swish"}; }

ActivationFn ActivationFn::rbf(double center, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("rbf: scale must be positive");
  std::ostringstream name;
  name << "rbf(c=" << center << ",s=" << scale << ")";
  ActivationFn a(ActKind::Rbf, name.str());
  a.center_ = center;
  a.scale_ = scale;
  return a;
}

ActivationFn ActivationFn::hp(HermiteSpectrum spectrum, std::string name) {
  if (spectrum.coefficients.empty())
    throw std::invalid_argument("hp: spectrum must have at least one coefficient");
  ActivationFn a(ActKind::Hp, name.empty() ? "hp" : std::move(name));
  a.spectrum_ = std::move(spectrum);
  return a;
}

const HermiteSpectrum& ActivationFn::spectrum() const {
  if (kind_ != ActKind::Hp)
    throw std::invalid_argument("spectrum(): only HP activations carry a spectrum");
  return spectrum_;
}

double ActivationFn::eval(double x) const {
  switch (kind_) {
    case ActKind::Identity: return x;
    case ActKind::Sigmoid: return sigmoid_val(x);
    case ActKind::Tanh: return std::tanh(x);
    case ActKind::ReLU: return x > 0.0 ? x : 0.0;
    case ActKind::Step: return x > 0.0 ? 1.0 : 0.0;
    case ActKind::Swish: return x * sigmoid_val(x);
    case ActKind::Rbf: {
      const double d = x - center_;
      return std::exp(-d * d / (2.0 * scale_ * scale_));
    }
    case ActKind::Hp: return reconstruct(spectrum_, std::clamp(x, -kHpSupport, kHpSupport));
  }
  return 0.0;
}

double ActivationFn::deriv(double x) const {
  switch (kind_) {
    case ActKind::Identity: return 1.0;
    case ActKind::Sigmoid: {
      const double s = sigmoid_val(x);
      return s * (1.0 - s);
    }
    case ActKind::Tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case ActKind::ReLU: return x > 0.0 ? 1.0 : 0.0;
    case ActKind::Step: return 0.0;
    case ActKind::Swish: {
      const double s = sigmoid_val(x);
      return s + x * s * (1.0 - s);
    }
    case ActKind::Rbf: {
      const double d = x - center_;
      const double s2 = scale_ * scale_;
      return -d / s2 * std::exp(-d * d / (2.0 * s2));
    }
    case ActKind::Hp: {
      if (std::abs(x) > kHpSupport) return 0.0;  // saturated
      const int order = spectrum_.order();
      if (order == 0) return 0.0;
      const std::vector<double> h = eval_hermite_all(order - 1, x);
      double acc = 0.0;
      for (int n = 1; n <= order; ++n)
        acc += spectrum_.coefficients[n] * std::sqrt(static_cast<double>(n)) * h[n - 1];
      return acc;
    }
  }
  return 0.0;
}

void HpDesignProfile::validate() const {
  if (!(min_coeff > 0.0 && min_coeff <= max_coeff && max_coeff < 1.0))
    throw std::invalid_argument("HpDesignProfile: need 0 < min_coeff <= max_coeff < 1");
  if (!(spacing > 0.0)) throw std::invalid_argument("HpDesignProfile: spacing must be positive");
  if (num_terms < 1) throw std::invalid_argument("HpDesignProfile: need at least one term");
}

std::vector<double> design_coefficients(const HpDesignProfile& profile) {
  profile.validate();
  std::vector<double> coeffs(static_cast<size_t>(profile.num_terms));
  for (int k = 0; k < profile.num_terms; ++k)
    coeffs[k] = std::max(profile.max_coeff - k * profile.spacing, profile.min_coeff);
  return coeffs;
}

ActivationFn synthesize_hp(const HpDesignProfile& profile) {
  const std::vector<double> values = design_coefficients(profile);
  int top_order = profile.num_terms - 1;
  if (profile.layout == HpLayout::OddOrders) top_order = 2 * profile.num_terms - 1;
  if (profile.layout == HpLayout::AlternatingOrders) top_order = 2 * (profile.num_terms - 1);
  std::vector<double> coeffs(static_cast<size_t>(top_order) + 1, 0.0);
  for (int k = 0; k < profile.num_terms; ++k) {
    int order = k;
    if (profile.layout == HpLayout::OddOrders) order = 2 * k + 1;
    if (profile.layout == HpLayout::AlternatingOrders) order = 2 * k;
    coeffs[order] = values[k];
  }
  std::ostringstream name;
  name << "hp(max=" << profile.max_coeff << ",min=" << profile.min_coeff
       << ",gap=" << profile.spacing << ",n=" << profile.num_terms << ")";
  return ActivationFn::hp(HermiteSpectrum(std::move(coeffs)), name.str());
}

HermiteSpectrum paper_spectrum(const ActivationFn& a, int max_order) {
  if (max_order < 0) throw std::invalid_argument("paper_spectrum: order must be non-negative");
  std::vector<double> c(static_cast<size_t>(max_order) + 1, 0.0);
  switch (a.kind()) {
    case ActKind::Rbf: {
      const double cc = a.rbf_center();
      const double s = a.rbf_scale();
      const double common = std::sqrt(2.0 * M_PI) * cc * std::exp(-cc * cc / (2.0 * s * s + 2.0));
      c[0] = common * s / std::sqrt(s * s + 1.0);
      for (int n = 1; n <= max_order; ++n)
        c[n] = common / (s * std::pow(s * s + 1.0, n + 0.5));
      break;
    }
    case ActKind::Step:
      for (int n = 0; n <= max_order; ++n) {
        if (n == 0)
          c[n] = 1.0 / std::sqrt(2.0);
        else if (n % 2 == 1)
          c[n] = double_factorial(n - 2) / std::sqrt(2.0 * M_PI * factorial(n));
        else
          c[n] = 0.0;
      }
      break;
    case ActKind::ReLU:
      for (int n = 0; n <= max_order; ++n) {
        if (n == 1)
          c[n] = 1.0 / std::sqrt(2.0);
        else if (n % 2 == 0)
          c[n] = double_factorial(n - 3) / std::sqrt(M_PI * factorial(n));
        else
          c[n] = 0.0;
      }
      break;
    case ActKind::Sigmoid: {
      if (max_order > 2)
        throw std::invalid_argument("paper_spectrum: sigmoid closed form stops at order 2");
      const double vals[3] = {0.5, 0.206621, 0.0};
      for (int n = 0; n <= max_order; ++n) c[n] = vals[n];
      break;
    }
    case ActKind::Swish: {
      if (max_order > 2)
        throw std::invalid_argument("paper_spectrum: swish closed form stops at order 2");
      const double vals[3] = {0.292206, 1.0 / std::sqrt(2.0), 0.350845};
      for (int n = 0; n <= max_order; ++n) c[n] = vals[n];
      break;
    }
    default:
      throw std::invalid_argument("paper_spectrum: no closed form for kind '" +
                                  to_string(a.kind()) + "'");
  }
  return HermiteSpectrum(std::move(c));
}

HermiteSpectrum quadrature_spectrum(const ActivationFn& a, int max_order) {
  int points = default_quad_points(max_order);
  if (a.kind() == ActKind::ReLU || a.kind() == ActKind::Step) points *= 2;
  return project([&a](double x) { return a.eval(x); }, max_order, points);
}

SpectrumReport verified_spectrum(const ActivationFn& a, int max_order) {
  SpectrumReport report;
  report.quadrature = quadrature_spectrum(a, max_order);
  int paper_order = -1;
  switch (a.kind()) {
    case ActKind::Rbf:
    case ActKind::Step:
    case ActKind::ReLU: paper_order = max_order; break;
    case ActKind::Sigmoid:
    case ActKind::Swish: paper_order = std::min(max_order, 2); break;
    default: break;
  }
  if (paper_order >= 0) {
    report.paper = paper_spectrum(a, paper_order);
    report.abs_diff.resize(static_cast<size_t>(paper_order) + 1);
    for (int n = 0; n <= paper_order; ++n)
      report.abs_diff[static_cast<size_t>(n)] =
          std::abs(report.quadrature.coefficients[n] - report.paper->coefficients[n]);
  }
  return report;
}

ActivationFn parse_activation(const std::string& text) {
  auto parse_kv = [](const std::string& body) {
    std::map<std::string, std::string> kv;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("activation spec: expected key=value, got '" + item + "'");
      kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return kv;
  };

  if (text == "identity") return ActivationFn::identity();
  if (text == "sigmoid") return ActivationFn::sigmoid();
  if (text == "tanh") return ActivationFn::tanh_fn();
  if (text == "relu") return ActivationFn::relu();
  if (text == "step") return ActivationFn::step();
  if (text == "swish") return ActivationFn::swish();
  if (text == "rbf") return ActivationFn::rbf();
  if (text == "hp") return synthesize_hp(HpDesignProfile{});

  if (text.rfind("rbf:", 0) == 0) {
    const auto kv = parse_kv(text.substr(4));
    double c = 1.0, s = 1.0;
    for (const auto& [k, v] : kv) {
      if (k == "c") c = std::stod(v);
      else if (k == "s") s = std::stod(v);
      else throw std::invalid_argument("rbf: unknown parameter '" + k + "'");
    }
    return ActivationFn::rbf(c, s);
  }
  if (text.rfind("hp:", 0) == 0) {
    const auto kv = parse_kv(text.substr(3));
    HpDesignProfile p;
    for (const auto& [k, v] : kv) {
      if (k == "max") p.max_coeff = std::stod(v);
      else if (k == "min") p.min_coeff = std::stod(v);
      else if (k == "gap") p.spacing = std::stod(v);
      else if (k == "n") p.num_terms = std::stoi(v);
      else if (k == "layout") {
        if (v == "consecutive") p.layout = HpLayout::Consecutive;
        else if (v == "odd") p.layout = HpLayout::OddOrders;
        else if (v == "alt") p.layout = HpLayout::AlternatingOrders;
        else throw std::invalid_argument("hp: unknown layout '" + v + "'");
      } else {
        throw std::invalid_argument("hp: unknown parameter '" + k + "'");
      }
    }
    return synthesize_hp(p);
  }
  if (text.rfind("hp-file:", 0) == 0) {
    const std::string path = text.substr(8);
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("hp-file: cannot open '" + path + "'");
    nlohmann::json j;
    in >> j;
    return ActivationFn::hp(HermiteSpectrum::from_json(j), "hp-file:" + path);
  }
  throw std::invalid_argument("unknown activation '" + text + "'");
}

}  // namespace hermnet
