// SPDX-License-Identifier: Apache-2.0
//
// Empirical distributions and the tests that turn identities in law into
// verdicts: Kolmogorov-Smirnov (one and two sample), moment z-scores,
// rank-based independence checks and Richardson extrapolation.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bridgelaw/laws.hpp"

namespace bridgelaw::stats {

inline constexpr double kDefaultLevel = 1e-3;

struct Provenance {
  std::string construction;
  std::size_t paths = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
};

/// Sorted batch of scalar draws.
class EmpiricalSample {
 public:
  EmpiricalSample() = default;
  explicit EmpiricalSample(std::vector<double> values, Provenance provenance = {})
      : values_(std::move(values)), provenance_(std::move(provenance)) {
    for (double v : values_)
      if (std::isnan(v)) throw std::invalid_argument("EmpiricalSample: NaN value");
    std::sort(values_.begin(), values_.end());
  }

  std::span<const double> values() const { return values_; }
  std::size_t n() const { return values_.size(); }
  const Provenance& provenance() const { return provenance_; }

 private:
  std::vector<double> values_;
  Provenance provenance_;
};

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov
// ---------------------------------------------------------------------------

struct KsReport {
  double d = 0.0;
  double n_eff = 0.0;
  double p_value = 1.0;
  double threshold = kDefaultLevel;
  bool passed() const { return p_value > threshold; }
};

/// Kolmogorov survival function Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
inline double kolmogorov_survival(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0, sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-17) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// Asymptotic p-value with Stephens' small-sample correction.
inline double ks_p_value(double d, double n_eff) {
  const double root = std::sqrt(n_eff);
  return kolmogorov_survival((root + 0.12 + 0.11 / root) * d);
}

inline KsReport ks_two_sample(const EmpiricalSample& a, const EmpiricalSample& b,
                              double threshold = kDefaultLevel) {
  if (a.n() < 10 || b.n() < 10) throw std::invalid_argument("ks_two_sample: undersized samples");
  const auto x = a.values();
  const auto y = b.values();
  const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double t = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == t) ++i;
    while (j < y.size() && y[j] == t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double n_eff = na * nb / (na + nb);
  return {d, n_eff, ks_p_value(d, n_eff), threshold};
}

template <class Cdf>
KsReport ks_one_sample(const EmpiricalSample& a, const Cdf& cdf, double threshold = kDefaultLevel) {
  if (a.n() == 0) throw std::invalid_argument("ks_one_sample: empty sample");
  const auto x = a.values();
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return {d, n, ks_p_value(d, n), threshold};
}

inline KsReport ks_one_sample(const EmpiricalSample& a, const laws::AnalyticDensity& density,
                              double threshold = kDefaultLevel) {
  const laws::FastCdf cdf(std::make_shared<const laws::AnalyticDensity>(density));
  return ks_one_sample(a, cdf, threshold);
}

// ---------------------------------------------------------------------------
// Moments
// ---------------------------------------------------------------------------

/// Mergeable mean/variance accumulator (Chan et al. pairwise update).
class MeanAccumulator {
 public:
  void add(double x) {
    ++count_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
  }

  void merge(const MeanAccumulator& other) {
    if (other.count_ == 0) return;
    if (count_ == 0) {
      *this = other;
      return;
    }
    const double n1 = static_cast<double>(count_), n2 = static_cast<double>(other.count_);
    const double delta = other.mean_ - mean_;
    const double n = n1 + n2;
    mean_ += delta * n2 / n;
    m2_ += other.m2_ + delta * delta * n1 * n2 / n;
    count_ += other.count_;
  }

  std::size_t count() const { return count_; }
  double mean() const { return mean_; }
  double variance() const { return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0; }
  double std_error() const {
    return count_ > 1 ? std::sqrt(variance() / static_cast<double>(count_)) : 0.0;
  }

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct MomentReport {
  double order = 1.0;
  double estimate = 0.0;
  double std_error = 0.0;
  std::optional<double> target;
  std::optional<double> z_score;
};

inline MomentReport make_moment_report(double order, const MeanAccumulator& acc,
                                       std::optional<double> target) {
  MomentReport r{order, acc.mean(), acc.std_error(), target, std::nullopt};
  if (target) {
    const double diff = r.estimate - *target;
    if (r.std_error > 0.0)
      r.z_score = diff / r.std_error;
    else
      r.z_score = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
  }
  return r;
}

/// Mean of |v|^order, or of v^order keeping the sign when `signed_values`
/// is set (used for odd moments of signed laws).
inline MomentReport moment_report(std::span<const double> values, double order,
                                  std::optional<double> target = std::nullopt,
                                  bool signed_values = false) {
  if (!(order >= 0.0)) throw std::invalid_argument("moment_report: order must be >= 0");
  MeanAccumulator acc;
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("moment_report: non-finite value");
    double p = order == 1.0 ? std::abs(v) : std::pow(std::abs(v), order);
    if (signed_values && v < 0.0) p = -p;
    acc.add(p);
  }
  return make_moment_report(order, acc, target);
}

inline MomentReport moment_report(const EmpiricalSample& a, double order,
                                  std::optional<double> target = std::nullopt,
                                  bool signed_values = false) {
  return moment_report(a.values(), order, target, signed_values);
}

/// Mean of arbitrary per-draw statistics, with z-score against `target`.
inline MomentReport mean_report(std::span<const double> values,
                                std::optional<double> target = std::nullopt) {
  return moment_report(values, 1.0, target, true);
}

// ---------------------------------------------------------------------------
// Richardson extrapolation
// ---------------------------------------------------------------------------

struct BiasLadder {
  std::vector<double> dts;        // strictly decreasing
  std::vector<double> estimates;  // statistic at each dt
  std::vector<double> std_errors;  // optional; empty means noiseless
};

struct RichardsonResult {
  double limit = 0.0;
  double std_error = 0.0;
  std::optional<double> fitted_order;
};

namespace detail {

// Order q solving (e0 - e1)/(e1 - e2) = (d0^q - d1^q)/(d1^q - d2^q).
inline std::optional<double> fit_order(double d0, double d1, double d2, double e0, double e1,
                                       double e2) {
  const double denom = e1 - e2;
  if (denom == 0.0) return std::nullopt;
  const double ratio = (e0 - e1) / denom;
  auto model = [&](double q) {
    return (std::pow(d0, q) - std::pow(d1, q)) / (std::pow(d1, q) - std::pow(d2, q));
  };
  double lo = 0.02, hi = 8.0;
  double flo = model(lo) - ratio, fhi = model(hi) - ratio;
  if (flo * fhi > 0.0) return std::nullopt;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = model(mid) - ratio;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Extrapolates the two finest rungs assuming estimate(dt) = limit + C dt^order.
/// With three or more rungs the order is also fitted from the finest three.
inline RichardsonResult richardson(const BiasLadder& ladder, double order_guess) {
  const std::size_t n = ladder.dts.size();
  if (n < 2 || ladder.estimates.size() != n)
    throw std::invalid_argument("richardson: need >= 2 rungs with matching estimates");
  if (!ladder.std_errors.empty() && ladder.std_errors.size() != n)
    throw std::invalid_argument("richardson: std_errors length mismatch");
  for (std::size_t i = 1; i < n; ++i)
    if (!(ladder.dts[i] < ladder.dts[i - 1]))
      throw std::invalid_argument("richardson: degenerate ladder (dts must strictly decrease)");
  if (!(order_guess > 0.0)) throw std::invalid_argument("richardson: order must be positive");

  const double coarse = ladder.dts[n - 2], fine = ladder.dts[n - 1];
  const double w = std::pow(coarse / fine, order_guess);
  RichardsonResult r;
  r.limit = (w * ladder.estimates[n - 1] - ladder.estimates[n - 2]) / (w - 1.0);
  if (!ladder.std_errors.empty()) {
    const double a = w / (w - 1.0), b = 1.0 / (w - 1.0);
    r.std_error = std::hypot(a * ladder.std_errors[n - 1], b * ladder.std_errors[n - 2]);
  }
  if (n >= 3)
    r.fitted_order = detail::fit_order(ladder.dts[n - 3], coarse, fine, ladder.estimates[n - 3],
                                       ladder.estimates[n - 2], ladder.estimates[n - 1]);
  return r;
}

// ---------------------------------------------------------------------------
// Rank-based independence
// ---------------------------------------------------------------------------

/// (rank - 1/2) / n with ties averaged; approximately uniform on (0, 1).
inline std::vector<double> normalized_ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 0.5;  // mean of (i..j) + 1/2
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r / static_cast<double>(n);
    i = j + 1;
  }
  return ranks;
}

struct IndependenceReport {
  double spearman_rho = 0.0;
  double spearman_z = 0.0;
  double spearman_p = 1.0;
  KsReport product_ks;  // product of normalized ranks vs law of U U'
  double threshold = kDefaultLevel;
  bool passed() const { return spearman_p > threshold && product_ks.passed(); }
};

/// CDF of the product of two independent uniforms.
inline double uniform_product_cdf(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t - t * std::log(t);
}

inline double two_sided_normal_p(double z) { return std::erfc(std::abs(z) / std::numbers::sqrt2); }

inline IndependenceReport rank_independence(std::span<const double> x, std::span<const double> y,
                                            double threshold = kDefaultLevel) {
  if (x.size() != y.size() || x.size() < 10)
    throw std::invalid_argument("rank_independence: need paired samples of size >= 10");
  const auto rx = normalized_ranks(x);
  const auto ry = normalized_ranks(y);
  const double n = static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  std::vector<double> products(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = rx[i] - 0.5, b = ry[i] - 0.5;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
    products[i] = rx[i] * ry[i];
  }
  IndependenceReport r;
  r.threshold = threshold;
  r.spearman_rho = sxy / std::sqrt(sxx * syy);
  r.spearman_z = r.spearman_rho * std::sqrt(n - 1.0);
  r.spearman_p = two_sided_normal_p(r.spearman_z);
  r.product_ks = ks_one_sample(EmpiricalSample(std::move(products)), uniform_product_cdf, threshold);
  return r;
}

// ---------------------------------------------------------------------------
// Multiple testing
// ---------------------------------------------------------------------------

/// Smallest k with P(F <= k) >= quantile, where F counts failures among
/// independent checks that fail with the given probabilities under true nulls.
inline std::size_t allowed_failures(std::span<const double> levels, double quantile = 0.999) {
  std::vector<double> dist{1.0};
  for (double p : levels) {
    std::vector<double> next(dist.size() + 1, 0.0);
    for (std::size_t k = 0; k < dist.size(); ++k) {
      next[k] += dist[k] * (1.0 - p);
      next[k + 1] += dist[k] * p;
    }
    dist = std::move(next);
  }
  double cum = 0.0;
  for (std::size_t k = 0; k < dist.size(); ++k) {
    cum += dist[k];
    if (cum >= quantile) return k;
  }
  return dist.size() - 1;
}

}  // namespace bridgelaw::stats
