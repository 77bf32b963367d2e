// SPDX-License-Identifier: Apache-2.0
//
// Brownian path generation and the pathwise functionals built on it.
//
// simulate_until_max_hits reproduces, in law, the uniform grid of step dt run
// until the running maximum reaches a level. Far from the running maximum it
// takes dyadic multiples of dt whenever the Brownian-bridge probability of the
// skipped stretch touching the current maximum is below kCoarseCrossingBound;
// otherwise it bisects with exact bridge midpoints down to dt. Skipped grid
// points are filled in on demand by evaluate_at, again with bridge midpoints.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bridgelaw/random_stream.hpp"

namespace bridgelaw::pathkit {

enum class CrossingCorrection { none, bridge };

/// Coarse steps are accepted when the bridge over them reaches the current
/// running maximum with probability below this bound.
inline constexpr double kCoarseCrossingBound = 1e-10;

struct StepScheme {
  double dt = 1e-4;
  int max_chunks = 40;
  CrossingCorrection crossing_correction = CrossingCorrection::bridge;
  double initial_horizon = 1.0;  // time covered by the first chunk
  bool coarse_steps = true;      // false forces the plain uniform grid

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("StepScheme: dt must be > 0");
    if (max_chunks < 1 || max_chunks > 60)
      throw std::invalid_argument("StepScheme: max_chunks must lie in [1, 60]");
    if (!(initial_horizon > 0.0)) throw std::invalid_argument("StepScheme: initial_horizon must be > 0");
  }

  /// Total time covered by all chunks; chunk k spans 2^k * initial_horizon.
  double horizon() const { return initial_horizon * (std::ldexp(1.0, max_chunks) - 1.0); }
};

class HorizonExhausted : public std::runtime_error {
 public:
  explicit HorizonExhausted(double horizon)
      : std::runtime_error("level not reached within the simulation horizon " + std::to_string(horizon)),
        horizon_(horizon) {}
  double horizon() const { return horizon_; }

 private:
  double horizon_;
};

struct HitRecord {
  double level = 0.0;
  std::size_t index = 0;  // final grid index; w and m equal level there
  double t_hit = 0.0;
};

struct DiscretePath {
  double dt = 0.0;
  std::vector<double> times;
  std::vector<double> w;
  std::vector<double> m;
  std::optional<HitRecord> hit;
  int chunks_used = 0;

  std::size_t size() const { return times.size(); }
  double end_time() const { return times.back(); }

  void reset(double step) {
    dt = step;
    times.assign(1, 0.0);
    w.assign(1, 0.0);
    m.assign(1, 0.0);
    hit.reset();
    chunks_used = 0;
  }
  void push(double t, double x, double mx) {
    times.push_back(t);
    w.push_back(x);
    m.push_back(mx);
  }
};

namespace detail {

inline int chunks_for(double t, const StepScheme& scheme) {
  int k = 1;
  while (k < scheme.max_chunks && t > scheme.initial_horizon * (std::ldexp(1.0, k) - 1.0)) ++k;
  return k;
}

// Exact maximum of a Brownian bridge from x0 to x1 over time h, by inversion
// of P(max > y) = exp(-2 (y - x0)(y - x1) / h) at the survival level v.
inline double bridge_max(double x0, double x1, double h, double v) {
  const double d = x1 - x0;
  return 0.5 * (x0 + x1 + std::sqrt(d * d - 2.0 * h * std::log(v)));
}

inline double crossing_probability(double level, double x0, double x1, double h) {
  if (x0 >= level || x1 >= level) return 1.0;
  return std::exp(-2.0 * (level - x0) * (level - x1) / h);
}

class HitSimulator {
 public:
  HitSimulator(RandomStream& rng, const StepScheme& scheme, double level, DiscretePath& path)
      : rng_(rng), s_(scheme), level_(level), path_(path),
        bridge_(scheme.crossing_correction == CrossingCorrection::bridge),
        max_ticks_(scheme.horizon() / scheme.dt) {}

  void run() {
    path_.reset(s_.dt);
    while (!done_) {
      if (static_cast<double>(tick_) > max_ticks_) throw HorizonExhausted(s_.horizon());
      const int j = s_.coarse_steps ? coarse_exponent(max_ - x_) : 0;
      if (j == 0) {
        fine_step(x_ + std::sqrt(s_.dt) * rng_.normal());
        continue;
      }
      const std::int64_t n = std::int64_t{1} << j;
      const double h = static_cast<double>(n) * s_.dt;
      refine(n, x_ + std::sqrt(h) * rng_.normal());
    }
    path_.chunks_used = chunks_for(path_.end_time(), s_);
  }

 private:
  // Largest j with 2^j dt <= d^2 / 32, capped so ticks stay exact in a double.
  int coarse_exponent(double d) const {
    const double ratio = d * d / (32.0 * s_.dt);
    if (ratio < 2.0) return 0;
    return std::min(40, static_cast<int>(std::floor(std::log2(ratio))));
  }

  // Advances from (tick_, x_) over n ticks to the endpoint x1.
  void refine(std::int64_t n, double x1) {
    if (done_) return;
    if (n == 1) {
      fine_step(x1);
      return;
    }
    const double h = static_cast<double>(n) * s_.dt;
    if (x1 < max_ && crossing_probability(max_, x_, x1, h) < kCoarseCrossingBound) {
      tick_ += n;
      x_ = x1;
      path_.push(static_cast<double>(tick_) * s_.dt, x_, max_);
      return;
    }
    const double mid = 0.5 * (x_ + x1) + 0.5 * std::sqrt(h) * rng_.normal();
    refine(n / 2, mid);
    refine(n / 2, x1);
  }

  void fine_step(double x1) {
    const double x0 = x_;
    if (bridge_) {
      const double v = rng_.uniform();
      if (v < crossing_probability(level_, x0, x1, s_.dt)) {
        finish((static_cast<double>(tick_) + 0.5) * s_.dt);
        return;
      }
      max_ = std::max(max_, bridge_max(x0, x1, s_.dt, v));
    } else {
      if (x1 >= level_) {
        const double frac = (level_ - x0) / (x1 - x0);
        finish((static_cast<double>(tick_) + frac) * s_.dt);
        return;
      }
      max_ = std::max(max_, x1);
    }
    ++tick_;
    x_ = x1;
    path_.push(static_cast<double>(tick_) * s_.dt, x_, max_);
  }

  void finish(double t_hit) {
    path_.push(t_hit, level_, level_);
    path_.hit = HitRecord{level_, path_.size() - 1, t_hit};
    done_ = true;
  }

  RandomStream& rng_;
  const StepScheme& s_;
  double level_;
  DiscretePath& path_;
  bool bridge_;
  double max_ticks_;
  std::int64_t tick_ = 0;
  double x_ = 0.0;
  double max_ = 0.0;
  bool done_ = false;
};

}  // namespace detail

/// Simulates W from 0 until its running maximum reaches `level`. The final
/// grid point sits at the hit time estimate with w = m = level.
inline void simulate_until_max_hits(RandomStream& stream, const StepScheme& scheme, double level,
                                    DiscretePath& out) {
  scheme.validate();
  if (!(level > 0.0) || !std::isfinite(level))
    throw std::invalid_argument("simulate_until_max_hits: level must be > 0");
  detail::HitSimulator(stream, scheme, level, out).run();
}

inline DiscretePath simulate_until_max_hits(RandomStream& stream, const StepScheme& scheme,
                                            double level) {
  DiscretePath path;
  simulate_until_max_hits(stream, scheme, level, path);
  return path;
}

/// Uniform grid on [0, t_end]. With bridge correction m holds the exact
/// running maximum of the continuous path at each grid time.
inline DiscretePath simulate_fixed_horizon(RandomStream& stream, const StepScheme& scheme,
                                           double t_end) {
  scheme.validate();
  if (!(t_end > 0.0)) throw std::invalid_argument("simulate_fixed_horizon: t_end must be > 0");
  const auto n = static_cast<std::size_t>(std::llround(t_end / scheme.dt));
  if (n == 0) throw std::invalid_argument("simulate_fixed_horizon: t_end shorter than dt");
  const double h = t_end / static_cast<double>(n);
  const double sd = std::sqrt(h);
  const bool bridge = scheme.crossing_correction == CrossingCorrection::bridge;
  DiscretePath path;
  path.reset(h);
  path.times.reserve(n + 1);
  path.w.reserve(n + 1);
  path.m.reserve(n + 1);
  double x = 0.0, mx = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    const double x1 = x + sd * stream.normal();
    mx = std::max(mx, bridge ? detail::bridge_max(x, x1, h, stream.uniform()) : x1);
    x = x1;
    path.push(static_cast<double>(i) * h, x, mx);
  }
  path.chunks_used = 1;
  return path;
}

struct PathPoint {
  double w = 0.0;
  double m = 0.0;
  std::size_t index = 0;  // right endpoint of the step containing the time
};

/// (W, M) at time s in [0, end_time]. Inside a step of length dt, w is
/// interpolated linearly and m = max(m_left, w). Coarse steps are bisected
/// with bridge midpoints drawn from `stream` down to dt first. A time in the
/// final partial step before a hit is clamped to the hit.
inline PathPoint evaluate_at(const DiscretePath& path, double s, RandomStream& stream) {
  if (path.size() < 2) throw std::invalid_argument("evaluate_at: path has no steps");
  if (!(s >= 0.0) || s > path.end_time())
    throw std::invalid_argument("evaluate_at: time outside the simulated range");
  const auto it = std::lower_bound(path.times.begin() + 1, path.times.end(), s);
  const auto i = static_cast<std::size_t>(it - path.times.begin());
  if (path.hit && i == path.hit->index) return {path.hit->level, path.hit->level, i};

  double t0 = path.times[i - 1], t1 = path.times[i];
  double x0 = path.w[i - 1], x1 = path.w[i];
  while (t1 - t0 > 1.5 * path.dt) {
    const double tm = 0.5 * (t0 + t1);
    const double xm = 0.5 * (x0 + x1) + std::sqrt(0.25 * (t1 - t0)) * stream.normal();
    if (s <= tm) {
      t1 = tm;
      x1 = xm;
    } else {
      t0 = tm;
      x0 = xm;
    }
  }
  const double w = x0 + (x1 - x0) * (s - t0) / (t1 - t0);
  return {w, std::max(path.m[i - 1], w), i};
}

/// Reflected Brownian motion and its local time from the Lévy map.
struct ReflectedView {
  std::vector<double> absB;
  std::vector<double> loc;
  std::vector<int> signs;  // sign of the excursion ending at each index
};

/// absB = m - w and loc = m. An excursion starts at index i when the running
/// maximum moved during step i (the continuous path touched zero there) or
/// when absB was zero at index i - 1. Each excursion gets one fair sign.
inline ReflectedView levy_view(const DiscretePath& path, RandomStream& stream) {
  if (path.size() == 0) throw std::invalid_argument("levy_view: empty path");
  ReflectedView v;
  const std::size_t n = path.size();
  v.absB.resize(n);
  v.loc = path.m;
  v.signs.resize(n);
  int sign = stream.sign() > 0 ? 1 : -1;
  for (std::size_t i = 0; i < n; ++i) {
    v.absB[i] = std::max(0.0, path.m[i] - path.w[i]);
    if (i > 0 && (path.m[i] > path.m[i - 1] || v.absB[i - 1] == 0.0)) sign = stream.sign() > 0 ? 1 : -1;
    v.signs[i] = sign;
  }
  return v;
}

/// BES(3) and its future infimum from the Pitman map.
struct BesselView {
  std::vector<double> r;
  std::vector<double> j;
};

inline BesselView pitman_view(const DiscretePath& path) {
  if (path.size() == 0) throw std::invalid_argument("pitman_view: empty path");
  BesselView v;
  v.r.resize(path.size());
  v.j = path.m;
  for (std::size_t i = 0; i < path.size(); ++i) v.r[i] = 2.0 * path.m[i] - path.w[i];
  return v;
}

enum class TripletKind {
  pseudo_bridge,
  hitting,
  bessel,
  cor2_bridge,
  cor2_hitting,
  cor2_bessel,
  reference_thm1,
  reference_cor1_hitting,
  reference_cor1_bessel,
  reference_cor2,
};

inline const char* to_string(TripletKind k) {
  switch (k) {
    case TripletKind::pseudo_bridge: return "pseudo_bridge";
    case TripletKind::hitting: return "hitting";
    case TripletKind::bessel: return "bessel";
    case TripletKind::cor2_bridge: return "cor2_bridge";
    case TripletKind::cor2_hitting: return "cor2_hitting";
    case TripletKind::cor2_bessel: return "cor2_bessel";
    case TripletKind::reference_thm1: return "reference_thm1";
    case TripletKind::reference_cor1_hitting: return "reference_cor1_hitting";
    case TripletKind::reference_cor1_bessel: return "reference_cor1_bessel";
    case TripletKind::reference_cor2: return "reference_cor2";
  }
  return "?";
}

struct TripletSample {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  TripletKind kind = TripletKind::pseudo_bridge;
};

/// The three path triplets evaluated on one driving path and one uniform time.
struct TripletSet {
  TripletSample pseudo_bridge;
  TripletSample hitting;
  TripletSample bessel;
  double t_hit = 0.0;
};

namespace detail {

// Path to level 1, U, and the state at U * T_1; the sign is the Lévy-view
// sign of the excursion straddling U * T_1.
struct UniformTimeState {
  double t_hit;
  PathPoint at;
  int sign;
};

inline UniformTimeState uniform_time_state(RandomStream& stream, const StepScheme& scheme,
                                           DiscretePath& path, bool need_sign) {
  simulate_until_max_hits(stream, scheme, 1.0, path);
  const double t_hit = path.hit->t_hit;
  const double u = stream.uniform();
  const PathPoint at = evaluate_at(path, u * t_hit, stream);
  int sign = 1;
  if (need_sign) sign = levy_view(path, stream).signs[at.index];
  return {t_hit, at, sign};
}

inline TripletSet make_set(const UniformTimeState& st) {
  const double y = 1.0 / std::sqrt(st.t_hit);
  const double abs_b = std::max(0.0, st.at.m - st.at.w);
  TripletSet set;
  set.t_hit = st.t_hit;
  set.pseudo_bridge = {st.sign * abs_b * y, y, st.at.m, TripletKind::pseudo_bridge};
  set.hitting = {st.at.w * y, y, st.at.m, TripletKind::hitting};
  set.bessel = {(2.0 * st.at.m - st.at.w) * y, y, st.at.m, TripletKind::bessel};
  return set;
}

}  // namespace detail

/// (B_{U tau_1} / sqrt(tau_1), 1 / sqrt(tau_1), L_{U tau_1}) through the Lévy map.
inline TripletSample sample_triplet_pseudo_bridge(RandomStream& stream, const StepScheme& scheme) {
  DiscretePath path;
  return detail::make_set(detail::uniform_time_state(stream, scheme, path, true)).pseudo_bridge;
}

/// (W_{U T_1} / sqrt(T_1), 1 / sqrt(T_1), M_{U T_1}).
inline TripletSample sample_triplet_hitting(RandomStream& stream, const StepScheme& scheme) {
  DiscretePath path;
  return detail::make_set(detail::uniform_time_state(stream, scheme, path, false)).hitting;
}

/// (R_{U gamma} / sqrt(gamma), 1 / sqrt(gamma), J_{U gamma}) through the Pitman
/// map, with gamma the driver's T_1.
inline TripletSample sample_triplet_bessel(RandomStream& stream, const StepScheme& scheme) {
  DiscretePath path;
  return detail::make_set(detail::uniform_time_state(stream, scheme, path, false)).bessel;
}

/// All three triplets from one path; `path` is scratch storage reused between calls.
inline TripletSet sample_triplet_set(RandomStream& stream, const StepScheme& scheme,
                                     DiscretePath& path) {
  return detail::make_set(detail::uniform_time_state(stream, scheme, path, true));
}

/// Maps a path triplet to the matching (distance to zero or to the future
/// infimum, local time, (1 + 2 distance) / sqrt(time)) triplet.
inline TripletSample to_cor2(const TripletSample& t) {
  double gap = 0.0;
  TripletKind kind{};
  switch (t.kind) {
    case TripletKind::pseudo_bridge:
      gap = std::abs(t.x) / t.y;
      kind = TripletKind::cor2_bridge;
      break;
    case TripletKind::hitting:
      gap = t.z - t.x / t.y;
      kind = TripletKind::cor2_hitting;
      break;
    case TripletKind::bessel:
      gap = t.x / t.y - t.z;
      kind = TripletKind::cor2_bessel;
      break;
    default:
      throw std::invalid_argument("to_cor2: not a path triplet");
  }
  gap = std::max(0.0, gap);
  return {gap, t.z, (1.0 + 2.0 * gap) * t.y, kind};
}

enum class HpVariant { H, Hprime };

/// Trapezoid integral up to the hit, normalised by t_hit^{p/2 + 1}. Coarse
/// steps contribute the conditional mean of the integral given their endpoints.
inline double functional_from_path(const DiscretePath& path, int p, HpVariant variant) {
  if (p < 1) throw std::invalid_argument("functional_from_path: p must be >= 1");
  if (!path.hit) throw std::invalid_argument("functional_from_path: path has no hit");
  const double c = (p + 1.0) / (2.0 * p * p);
  auto f = [&](std::size_t i) {
    const double m = path.m[i], w = path.w[i];
    double mp1 = 1.0;
    for (int k = 1; k < p; ++k) mp1 *= m;
    if (variant == HpVariant::H) return (c - 1.0) * mp1 * m + w * mp1;
    return c * mp1 * m - (m - w) * mp1;
  };
  double sum = 0.0, prev = f(0);
  for (std::size_t i = 1; i < path.size(); ++i) {
    const double cur = f(i);
    sum += 0.5 * (prev + cur) * (path.times[i] - path.times[i - 1]);
    prev = cur;
  }
  return sum / std::pow(path.hit->t_hit, 0.5 * p + 1.0);
}

inline double sample_functional_Hp(RandomStream& stream, const StepScheme& scheme, int p,
                                   HpVariant variant) {
  if (p < 1) throw std::invalid_argument("sample_functional_Hp: p must be >= 1");
  const DiscretePath path = simulate_until_max_hits(stream, scheme, 1.0);
  return functional_from_path(path, p, variant);
}

/// First time the running maximum reaches `level` (< the path's hit level):
/// the midpoint of the step where m first reaches it, or the linear crossing
/// time when that step's m is the grid maximum.
inline double first_passage_time(const DiscretePath& path, double level) {
  const auto it = std::lower_bound(path.m.begin(), path.m.end(), level);
  if (it == path.m.end()) throw std::invalid_argument("first_passage_time: level not reached");
  const auto i = static_cast<std::size_t>(it - path.m.begin());
  if (i == 0) return 0.0;
  if (path.hit && i == path.hit->index) return path.hit->t_hit;
  const double t0 = path.times[i - 1], t1 = path.times[i];
  if (path.w[i] >= level) {
    const double x0 = path.w[i - 1], x1 = path.w[i];
    return t0 + (t1 - t0) * (level - x0) / (x1 - x0);
  }
  return 0.5 * (t0 + t1);
}

struct SubordinatorPair {
  double tau_l = 0.0;
  double tau_1 = 0.0;
  double l = 0.0;
};

/// Exact inverse local time at l and 1: stable-1/2 increments a^2 / N^2.
inline SubordinatorPair sample_subordinator_pair(RandomStream& stream, double l) {
  if (!(l > 0.0 && l < 1.0)) throw std::invalid_argument("sample_subordinator_pair: l must lie in (0, 1)");
  const double n1 = stream.normal(), n2 = stream.normal();
  const double tau_l = l * l / (n1 * n1);
  const double rest = (1.0 - l) * (1.0 - l) / (n2 * n2);
  return {tau_l, tau_l + rest, l};
}

struct LocalTimeEstimate {
  std::vector<double> estimates;  // one per grid index
  bool regime_valid = true;       // dt < epsilon^2
};

/// Occupation-density estimate (1 / 2 eps) meas{s <= t : |B_s| < eps} on the
/// linearly interpolated signed path sign * absB.
inline LocalTimeEstimate direct_local_time(const DiscretePath& path, const ReflectedView& view,
                                           double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("direct_local_time: epsilon must be > 0");
  if (view.absB.size() != path.size()) throw std::invalid_argument("direct_local_time: view/path mismatch");
  LocalTimeEstimate out;
  out.regime_valid = path.dt < epsilon * epsilon;
  out.estimates.assign(path.size(), 0.0);
  double occ = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const double a = view.signs[i - 1] * view.absB[i - 1];
    const double b = view.signs[i] * view.absB[i];
    const double h = path.times[i] - path.times[i - 1];
    double frac;
    if (a == b) {
      frac = std::abs(a) < epsilon ? 1.0 : 0.0;
    } else {
      // Fraction of the segment from a to b inside (-eps, eps).
      const double lo = std::min(a, b), hi = std::max(a, b);
      frac = std::max(0.0, std::min(hi, epsilon) - std::max(lo, -epsilon)) / (hi - lo);
    }
    occ += frac * h;
    out.estimates[i] = occ / (2.0 * epsilon);
  }
  return out;
}

}  // namespace bridgelaw::pathkit
