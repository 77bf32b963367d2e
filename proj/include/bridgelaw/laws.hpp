// SPDX-License-Identifier: Apache-2.0
//
// Closed-form laws attached to Brownian motion stopped at a hitting time or
// at an inverse local time: densities, CDFs by quadrature, and Mellin values.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bridgelaw/quadrature.hpp"

namespace bridgelaw::laws {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
/// sqrt(2 / pi) = E|N| = E[L_1].
inline const double kSqrt2OverPi = std::sqrt(2.0 / std::numbers::pi);

// ---------------------------------------------------------------------------
// Elementary laws
// ---------------------------------------------------------------------------

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Law of scale * |N|.
inline double half_normal_pdf(double x, double scale = 1.0) {
  if (x < 0.0) return 0.0;
  const double u = x / scale;
  return kSqrt2OverPi / scale * std::exp(-0.5 * u * u);
}
inline double half_normal_cdf(double x, double scale = 1.0) {
  return x <= 0.0 ? 0.0 : std::erf(x / (scale * std::numbers::sqrt2));
}

/// Maxwell law: norm of three independent standard Gaussians (law of R_1).
inline double maxwell_pdf(double r) {
  return r <= 0.0 ? 0.0 : kSqrt2OverPi * r * r * std::exp(-0.5 * r * r);
}
inline double maxwell_cdf(double r) {
  if (r <= 0.0) return 0.0;
  return std::erf(r / std::numbers::sqrt2) - kSqrt2OverPi * r * std::exp(-0.5 * r * r);
}

inline double exponential_cdf(double x) { return x <= 0.0 ? 0.0 : -std::expm1(-x); }
inline double uniform_cdf(double x, double lo = 0.0, double hi = 1.0) {
  return std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Mellin transform of (|B_1|, L_1)
// ---------------------------------------------------------------------------

/// E[|B_1|^a L_1^c] = Gamma(1+a) Gamma(1+c) / (2^{(a+c)/2} Gamma(1+(a+c)/2)),
/// evaluated in log space so large orders do not overflow.
inline double mellin_abs_b1_l1(double a, double c) {
  if (!(a >= 0.0) || !(c >= 0.0))
    throw std::invalid_argument("mellin_abs_b1_l1: orders must be nonnegative");
  const double s = 0.5 * (a + c);
  return std::exp(std::lgamma(1.0 + a) + std::lgamma(1.0 + c) - s * std::numbers::ln2 -
                  std::lgamma(1.0 + s));
}

/// c_p = E|N|^p = Gamma(1+p) / (2^{p/2} Gamma(1+p/2)), computed with tgamma.
/// Agrees with mellin_abs_b1_l1(p, 0); the two are evaluated independently.
inline double half_normal_moment(double p) {
  if (!(p >= 0.0)) throw std::invalid_argument("half_normal_moment: order must be nonnegative");
  return std::tgamma(1.0 + p) / (std::pow(2.0, 0.5 * p) * std::tgamma(1.0 + 0.5 * p));
}

// ---------------------------------------------------------------------------
// Pointwise densities
// ---------------------------------------------------------------------------

/// Density of (B_s, L_s) at (x, l).
inline double joint_density_b_l(double x, double l, double s) {
  if (!(l >= 0.0)) throw std::invalid_argument("joint_density_b_l: l must be >= 0");
  if (!(s > 0.0)) throw std::invalid_argument("joint_density_b_l: s must be > 0");
  const double q = std::abs(x) + l;
  return q / std::sqrt(2.0 * std::numbers::pi * s * s * s) * std::exp(-q * q / (2.0 * s));
}

/// Density of A = Lambda U - (1 - U)/2.
inline double u_density(double x) {
  if (x >= -0.5 && x <= 0.0) return std::log(3.0);
  if (x > 0.0 && x <= 1.0) return std::log(3.0 / (1.0 + 2.0 * x));
  return 0.0;
}

/// Density of B_{U T_1}. Zero at x = 0 and on [1, inf) by convention.
inline double k_density(double x) {
  if (x > 0.0 && x < 1.0) return 2.0 * (1.0 - x) / (3.0 - 2.0 * x);
  if (x < 0.0) return 2.0 / ((1.0 - 2.0 * x) * (3.0 - 2.0 * x));
  return 0.0;
}

/// Joint density of (1/sqrt(T_1), B_{U T_1}) at (z, x).
inline double h_density(double z, double x) {
  if (!(z > 0.0)) throw std::invalid_argument("h_density: z must be > 0");
  const double z2 = 0.5 * z * z;
  const double far = (3.0 - 2.0 * x) * (3.0 - 2.0 * x);
  if (x > 0.0 && x < 1.0) return kSqrt2OverPi * (std::exp(-z2) - std::exp(-far * z2));
  if (x < 0.0) {
    const double near = (1.0 - 2.0 * x) * (1.0 - 2.0 * x);
    return kSqrt2OverPi * (std::exp(-near * z2) - std::exp(-far * z2));
  }
  return 0.0;
}

/// Density of A' = Lambda U + (1 - U)/2. Returns +inf at the log singularity a = 1/2.
inline double l_density(double a) {
  if (!(a > 0.0 && a < 1.0)) return 0.0;
  if (a == 0.5) return kInf;
  return -std::log(std::abs(2.0 * a - 1.0));
}

/// Density of alpha = B_{U T_1} / sqrt(T_1), as the Maxwell mixture
/// integral of maxwell(r) u(x/r) / r over r > 0.
inline double alpha_pdf(double x, const QuadratureConfig& quad = {}) {
  QuadratureConfig cfg = quad;
  // u(x/r) changes piece where x/r crosses -1/2 or 1.
  if (x < 0.0) cfg.singularity_splits.push_back(-2.0 * x);
  if (x > 0.0) cfg.singularity_splits.push_back(x);
  auto integrand = [x](double r) {
    if (r <= 0.0) return 0.0;
    return kSqrt2OverPi * r * std::exp(-0.5 * r * r) * u_density(x / r);
  };
  return integrate(integrand, 0.0, kInf, cfg).value;
}

/// Density of R_{U gamma} / sqrt(gamma). After substituting t = x y the
/// mixture reads sqrt(2/pi) * int_x^inf t exp(-t^2/2) l(x/t) dt.
inline double r_gamma_pdf(double x, const QuadratureConfig& quad = {}) {
  if (!(x > 0.0)) throw std::invalid_argument("r_gamma_pdf: x must be > 0");
  QuadratureConfig cfg = quad;
  cfg.singularity_splits.push_back(2.0 * x);
  auto integrand = [x](double t) {
    if (t <= x || t == 2.0 * x) return 0.0;
    return t * std::exp(-0.5 * t * t) * (std::log(t) - std::log(std::abs(2.0 * x - t)));
  };
  return kSqrt2OverPi * integrate(integrand, x, kInf, cfg).value;
}

enum class Side { positive, negative };

/// Analytic side of E[T_1^{-p/2} phi(B_{U T_1}) 1{side}].
inline double descB_weighted_integral(double p, const std::function<double(double)>& phi,
                                      Side side, const QuadratureConfig& quad = {}) {
  if (!(p >= 0.0)) throw std::invalid_argument("descB_weighted_integral: p must be >= 0");
  const double cp = half_normal_moment(p);
  if (side == Side::positive) {
    auto f = [&](double b) { return phi(b) * (1.0 - std::pow(3.0 - 2.0 * b, -(p + 1.0))); };
    return cp * integrate(f, 0.0, 1.0, quad).value;
  }
  auto f = [&](double x) {
    return phi(x) * (std::pow(1.0 - 2.0 * x, -(p + 1.0)) - std::pow(3.0 - 2.0 * x, -(p + 1.0)));
  };
  return cp * integrate(f, -kInf, 0.0, quad).value;
}

// ---------------------------------------------------------------------------
// AnalyticDensity
// ---------------------------------------------------------------------------

/// Monotone CDF lookup built from a density: cumulative quadrature between
/// nodes, cubic Hermite interpolation inside smooth cells (the density is the
/// derivative), linear interpolation next to breakpoints.
class CdfTable {
 public:
  CdfTable() = default;
  CdfTable(std::vector<double> x, std::vector<double> f, std::vector<double> pdf,
           std::vector<char> smooth)
      : x_(std::move(x)), f_(std::move(f)), pdf_(std::move(pdf)), smooth_(std::move(smooth)) {}

  bool covers(double t) const { return !x_.empty() && t >= x_.front() && t <= x_.back(); }

  double operator()(double t) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), t);
    if (it == x_.begin()) return f_.front();
    if (it == x_.end()) return f_.back();
    const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
    const double h = x_[i + 1] - x_[i];
    const double s = (t - x_[i]) / h;
    double v;
    if (smooth_[i]) {
      const double s2 = s * s, s3 = s2 * s;
      v = (2 * s3 - 3 * s2 + 1) * f_[i] + (s3 - 2 * s2 + s) * h * pdf_[i] +
          (-2 * s3 + 3 * s2) * f_[i + 1] + (s3 - s2) * h * pdf_[i + 1];
    } else {
      v = f_[i] + s * (f_[i + 1] - f_[i]);
    }
    return std::clamp(v, std::min(f_[i], f_[i + 1]), std::max(f_[i], f_[i + 1]));
  }

 private:
  std::vector<double> x_, f_, pdf_;
  std::vector<char> smooth_;
};

/// A closed-form law: support [lo, hi] (possibly infinite), a pointwise density
/// and a CDF obtained by quadrature of the density.
class AnalyticDensity {
 public:
  struct Options {
    std::vector<double> breakpoints{};     // kinks, jumps or integrable singularities
    std::vector<double> singular_points{};  // points where pdf must not be evaluated
    double window_lo = 0.0;                 // finite range holding nearly all mass,
    double window_hi = 0.0;                 // used when tabulating the CDF
    QuadratureConfig quad{};
  };

  AnalyticDensity(std::string name, double lo, double hi, std::function<double(double)> pdf,
                  Options opts)
      : name_(std::move(name)), lo_(lo), hi_(hi), pdf_(std::move(pdf)), opts_(std::move(opts)) {
    if (!(lo_ < hi_)) throw std::invalid_argument("AnalyticDensity: empty support");
    opts_.quad.singularity_splits.insert(opts_.quad.singularity_splits.end(),
                                         opts_.breakpoints.begin(), opts_.breakpoints.end());
    opts_.quad.singularity_splits.insert(opts_.quad.singularity_splits.end(),
                                         opts_.singular_points.begin(),
                                         opts_.singular_points.end());
    if (!(opts_.window_lo < opts_.window_hi)) {
      opts_.window_lo = lo_;
      opts_.window_hi = hi_;
    }
    if (!std::isfinite(opts_.window_lo) || !std::isfinite(opts_.window_hi))
      throw std::invalid_argument("AnalyticDensity: tabulation window must be finite");
  }

  const std::string& name() const { return name_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  const Options& options() const { return opts_; }

  double pdf(double x) const {
    if (x < lo_ || x > hi_) return 0.0;
    return pdf_(x);
  }

  /// P(X <= x) by quadrature.
  double cdf(double x) const {
    if (x <= lo_) return 0.0;
    if (x >= hi_) return 1.0;
    auto f = [this](double t) { return mass_density(t); };
    return std::clamp(integrate(f, lo_, x, opts_.quad).value, 0.0, 1.0);
  }

  double total_mass() const {
    auto f = [this](double t) { return mass_density(t); };
    return integrate(f, lo_, hi_, opts_.quad).value;
  }

  /// Tabulated CDF on the window with `cells` cells (plus breakpoints as nodes).
  CdfTable tabulate(std::size_t cells = 2000) const {
    std::vector<double> x;
    const double a = opts_.window_lo, b = opts_.window_hi;
    for (std::size_t i = 0; i <= cells; ++i)
      x.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(cells));
    for (double p : opts_.breakpoints)
      if (p > a && p < b) x.push_back(p);
    std::sort(x.begin(), x.end());
    x.erase(std::unique(x.begin(), x.end()), x.end());

    auto is_break = [&](double t) {
      for (double p : opts_.breakpoints)
        if (p == t) return true;
      for (double p : opts_.singular_points)
        if (p == t) return true;
      return t <= lo_ || t >= hi_;
    };
    auto f = [this](double t) { return mass_density(t); };
    QuadratureConfig cell_quad = opts_.quad;
    cell_quad.abs_tol = std::max(cell_quad.abs_tol, 1e-13);

    std::vector<double> cum(x.size()), dens(x.size());
    std::vector<char> smooth(x.size(), 1);
    cum[0] = cdf(x[0]);
    for (std::size_t i = 0; i < x.size(); ++i) {
      dens[i] = is_break(x[i]) ? 0.0 : pdf(x[i]);
      if (i > 0) {
        cum[i] = cum[i - 1] + integrate(f, x[i - 1], x[i], cell_quad).value;
        smooth[i - 1] = !(is_break(x[i - 1]) || is_break(x[i]));
      }
    }
    for (auto& v : cum) v = std::clamp(v, 0.0, 1.0);
    return CdfTable(std::move(x), std::move(cum), std::move(dens), std::move(smooth));
  }

 private:
  // Quadrature integrand: the density with singular points (measure zero) mapped to 0.
  double mass_density(double t) const {
    for (double p : opts_.singular_points)
      if (p == t) return 0.0;
    const double v = pdf(t);
    return std::isfinite(v) ? v : 0.0;
  }

  std::string name_;
  double lo_, hi_;
  std::function<double(double)> pdf_;
  Options opts_;
};

/// CDF evaluator for bulk use: tabulated inside the window, direct quadrature outside.
class FastCdf {
 public:
  explicit FastCdf(std::shared_ptr<const AnalyticDensity> density, std::size_t cells = 2000)
      : density_(std::move(density)), table_(density_->tabulate(cells)) {}
  double operator()(double x) const { return table_.covers(x) ? table_(x) : density_->cdf(x); }

 private:
  std::shared_ptr<const AnalyticDensity> density_;
  CdfTable table_;
};

// ---------------------------------------------------------------------------
// Named densities
// ---------------------------------------------------------------------------

inline AnalyticDensity density_k() {
  return AnalyticDensity("k", -kInf, 1.0, k_density,
                         {.breakpoints = {0.0}, .singular_points = {1.0},
                          .window_lo = -60.0, .window_hi = 1.0});
}

inline AnalyticDensity density_u() {
  return AnalyticDensity("u", -0.5, 1.0, u_density, {.breakpoints = {0.0}});
}

inline AnalyticDensity density_l() {
  return AnalyticDensity("l", 0.0, 1.0, l_density,
                         {.breakpoints = {0.5}, .singular_points = {0.0, 0.5, 1.0}});
}

inline AnalyticDensity density_alpha() {
  return AnalyticDensity("alpha", -kInf, kInf, [](double x) { return alpha_pdf(x); },
                         {.breakpoints = {0.0}, .window_lo = -5.0, .window_hi = 9.0});
}

inline AnalyticDensity density_r_gamma() {
  return AnalyticDensity("r_gamma", 0.0, kInf,
                         [](double x) { return x > 0.0 ? r_gamma_pdf(x) : 0.0; },
                         {.singular_points = {0.0}, .window_lo = 0.0, .window_hi = 9.0});
}

inline AnalyticDensity density_half_normal(double scale = 1.0) {
  return AnalyticDensity("half_normal", 0.0, kInf,
                         [scale](double x) { return half_normal_pdf(x, scale); },
                         {.window_lo = 0.0, .window_hi = 9.0 * scale});
}

inline AnalyticDensity density_maxwell() {
  return AnalyticDensity("maxwell", 0.0, kInf, maxwell_pdf, {.window_lo = 0.0, .window_hi = 9.0});
}

/// Law of V * Z for Z with density z_pdf on (0, 1): density int_x^1 z_pdf(z)/z dz.
inline AnalyticDensity density_uniform_times(std::string name,
                                             std::function<double(double)> z_pdf) {
  auto pdf = [z_pdf](double x) {
    if (!(x > 0.0 && x < 1.0)) return 0.0;
    auto f = [&](double z) { return z_pdf(z) / z; };
    return integrate(f, x, 1.0).value;
  };
  return AnalyticDensity(std::move(name), 0.0, 1.0, pdf, {.singular_points = {0.0}});
}

/// Law of |N| * Z for Z with density z_pdf on (0, 1).
inline AnalyticDensity density_half_normal_times(std::string name,
                                                 std::function<double(double)> z_pdf) {
  auto pdf = [z_pdf](double x) {
    if (!(x > 0.0)) return 0.0;
    auto f = [&](double z) { return z_pdf(z) / z * half_normal_pdf(x / z); };
    return integrate(f, 0.0, 1.0).value;
  };
  return AnalyticDensity(std::move(name), 0.0, kInf, pdf,
                         {.singular_points = {0.0}, .window_lo = 0.0, .window_hi = 9.0});
}

/// The family A_c = Lambda U - c (1 - U), 0 < c <= 1.
struct AcFamily {
  double c = 0.5;
  double p_pos = 0.0;  // P(A_c > 0) = 1 - c log(1 + 1/c)
  std::function<double(double)> z_pdf;  // density of Z_C on (0, 1)
  AnalyticDensity z_density;
  AnalyticDensity a_density;
  AnalyticDensity alpha_density;  // alpha_c = Lambda L_1 - c |B_1| = R_1 A_c
};

inline AcFamily ac_family(double c) {
  if (!(c > 0.0 && c <= 1.0)) throw std::invalid_argument("ac_family: c must lie in (0, 1]");
  const double big_c = 1.0 / c;
  const double p_pos = 1.0 - c * std::log1p(big_c);
  auto z_pdf = [big_c, p_pos](double z) {
    if (!(z > 0.0 && z < 1.0)) return 0.0;
    return big_c / p_pos * z / (1.0 + big_c * z);
  };
  AnalyticDensity z_density("z_c", 0.0, 1.0, z_pdf, {});
  // Negative part: c V with mass 1 - p_pos. Positive part: V Z_C with mass p_pos.
  // The positive part integrates z_pdf(z) / z over (x, 1), which has an
  // elementary antiderivative.
  auto a_pdf = [c, big_c, p_pos](double x) {
    if (x > -c && x < 0.0) return (1.0 - p_pos) / c;
    if (x > 0.0 && x < 1.0) return std::log((1.0 + big_c) / (1.0 + big_c * x));
    return 0.0;
  };
  AnalyticDensity a_density("a_c", -c, 1.0, a_pdf, {.breakpoints = {0.0}});
  // alpha_c: c |N| with mass 1 - p_pos below zero, |N| Z_C with mass p_pos above.
  auto alpha_pdf_c = [c, p_pos, z_pdf](double x) {
    if (x < 0.0) return (1.0 - p_pos) * half_normal_pdf(-x, c);
    if (x == 0.0) return 0.0;
    auto f = [&](double z) { return z > 0.0 ? z_pdf(z) / z * half_normal_pdf(x / z) : 0.0; };
    return p_pos * integrate(f, 0.0, 1.0).value;
  };
  AnalyticDensity alpha_density("alpha_c", -kInf, kInf, alpha_pdf_c,
                                {.breakpoints = {0.0}, .window_lo = -9.0 * c, .window_hi = 9.0});
  return AcFamily{c, p_pos, z_pdf, std::move(z_density), std::move(a_density),
                  std::move(alpha_density)};
}

/// Density of Z in the positive part of alpha (the C = 2 member of Z_C).
inline double z_pdf(double z) {
  if (!(z > 0.0 && z < 1.0)) return 0.0;
  return 2.0 * z / ((1.0 - 0.5 * std::log(3.0)) * (1.0 + 2.0 * z));
}

inline AnalyticDensity density_z() { return AnalyticDensity("z", 0.0, 1.0, z_pdf, {}); }

/// Lookup used by the command line. `c` parametrises the A_c family members.
inline std::optional<AnalyticDensity> density_by_name(const std::string& name, double c = 0.5) {
  if (name == "k") return density_k();
  if (name == "u") return density_u();
  if (name == "l") return density_l();
  if (name == "alpha") return density_alpha();
  if (name == "r_gamma") return density_r_gamma();
  if (name == "z") return density_z();
  if (name == "half_normal") return density_half_normal();
  if (name == "maxwell") return density_maxwell();
  if (name == "z_c") return ac_family(c).z_density;
  if (name == "a_c") return ac_family(c).a_density;
  if (name == "alpha_c") return ac_family(c).alpha_density;
  return std::nullopt;
}

inline std::vector<std::string> density_names() {
  return {"k", "u", "l", "alpha", "r_gamma", "z", "half_normal", "maxwell", "z_c", "a_c", "alpha_c"};
}

}  // namespace bridgelaw::laws
