// SPDX-License-Identifier: Apache-2.0
//
// Named verification recipes. Each recipe binds the path samplers, the exact
// reference samplers and the statistical tests into a flat list of checks.
//
// Path-based recipes share one batch of driving paths per (scheme, seed): path
// i always uses stream i of derive_seed(seed, "paths"), and every functional
// a recipe needs is recorded on it. Running a recipe alone or inside run_all
// therefore gives the same numbers.
#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bridgelaw/laws.hpp"
#include "bridgelaw/parallel.hpp"
#include "bridgelaw/pathkit.hpp"
#include "bridgelaw/random_stream.hpp"
#include "bridgelaw/reference.hpp"
#include "bridgelaw/stats.hpp"

#ifndef BRIDGELAW_VERSION
#define BRIDGELAW_VERSION "0.0.0"
#endif

namespace bridgelaw::experiments {

inline constexpr const char* kVersion = BRIDGELAW_VERSION;

/// Minimum sample size for any recipe.
inline constexpr std::size_t kMinSamples = 10000;
/// Horizon-exhausted paths above this fraction flag the scheme.
inline constexpr double kPathFailureBudget = 1e-3;
/// Per-check false-failure probability of a |z| < 3 moment check.
inline const double kZLevel = std::erfc(3.0 / std::numbers::sqrt2);

enum class Budget { quick, full };

inline const char* to_string(Budget b) { return b == Budget::quick ? "quick" : "full"; }

struct Options {
  std::vector<int> p_values{1, 2, 3};           // centered functionals
  std::vector<double> l_grid{0.25, 0.5, 0.75};  // inverse local time levels
  std::vector<double> lambda_grid{0.5, 1.0, 2.0};
  std::vector<double> c_grid{0.25, 0.5, 1.0};   // A_c family
};

inline const std::vector<std::string>& catalog() {
  static const std::vector<std::string> names{
      "verify_theorem1", "verify_corollary1", "verify_corollary2", "verify_lemma_exp",
      "verify_mellin",   "verify_alpha",      "verify_descB",      "verify_centered",
      "verify_bessel_ratio", "verify_appendixA", "verify_appendixB"};
  return names;
}

/// Catalog name for `name`, accepting the short form without "verify_".
inline std::optional<std::string> canonical_name(std::string_view name) {
  for (const auto& n : catalog()) {
    if (n == name) return n;
    if (std::string_view(n).substr(7) == name) return n;
  }
  return std::nullopt;
}

class UnknownExperiment : public std::invalid_argument {
 public:
  explicit UnknownExperiment(const std::string& name)
      : std::invalid_argument("unknown experiment: " + name) {}
};

struct ExperimentSpec {
  std::string name;
  std::size_t paths = 200000;
  pathkit::StepScheme scheme{};
  std::uint64_t master_seed = 1;
  unsigned workers = 1;
  std::size_t exact_draws = 1000000;
  Options options{};

  void validate() const {
    if (!canonical_name(name) || *canonical_name(name) != name) throw UnknownExperiment(name);
    scheme.validate();
    if (paths < kMinSamples) throw std::invalid_argument("ExperimentSpec: paths must be >= 10000");
    if (exact_draws < kMinSamples)
      throw std::invalid_argument("ExperimentSpec: exact_draws must be >= 10000");
    if (workers < 1) throw std::invalid_argument("ExperimentSpec: workers must be >= 1");
    for (int p : options.p_values)
      if (p < 1 || p > 8) throw std::invalid_argument("ExperimentSpec: p must lie in [1, 8]");
    for (double l : options.l_grid)
      if (!(l > 0.0 && l < 1.0)) throw std::invalid_argument("ExperimentSpec: l must lie in (0, 1)");
    for (double lam : options.lambda_grid)
      if (!(lam > 0.0) || !std::isfinite(lam))
        throw std::invalid_argument("ExperimentSpec: lambda must be > 0");
    for (double c : options.c_grid)
      if (!(c > 0.0 && c <= 1.0)) throw std::invalid_argument("ExperimentSpec: c must lie in (0, 1]");
  }
};

/// Budget-scaled spec. quick: 2e4 paths at dt = 1e-3; full: 2e5 paths at dt = 1e-4.
inline ExperimentSpec default_spec(const std::string& name, Budget budget, std::uint64_t seed,
                                   unsigned workers = 1) {
  const auto canon = canonical_name(name);
  if (!canon) throw UnknownExperiment(name);
  ExperimentSpec s;
  s.name = *canon;
  s.master_seed = seed;
  s.workers = workers;
  if (budget == Budget::quick) {
    s.paths = 20000;
    s.scheme.dt = 1e-3;
    s.exact_draws = 200000;
  } else {
    s.paths = 200000;
    s.scheme.dt = 1e-4;
    s.exact_draws = 1000000;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Checks and reports
// ---------------------------------------------------------------------------

struct Check {
  std::string id;
  double statistic = 0.0;
  std::optional<double> target;
  std::optional<double> tolerance;
  std::optional<double> p_value;
  bool verdict = false;
  double level = 0.0;  // false-failure probability under a true null; 0 = deterministic
};

struct ExperimentReport {
  std::string name;
  ExperimentSpec spec;
  std::vector<Check> checks;
  std::size_t path_failures = 0;
  std::size_t statistical_checks = 0;
  std::size_t statistical_failures = 0;
  std::size_t allowed_failures = 0;
  bool deterministic_ok = true;
  bool overall = false;
  double wall_time = 0.0;  // seconds; header only
};

/// Applies the multiple-testing policy: every deterministic check passes and
/// the statistical failures stay within the binomial 99.9% quantile.
template <class It>
void tally(It first, It last, std::size_t& n_stat, std::size_t& failures, std::size_t& allowed,
           bool& deterministic_ok) {
  std::vector<double> levels;
  n_stat = failures = 0;
  deterministic_ok = true;
  for (auto it = first; it != last; ++it) {
    if (it->level > 0.0) {
      levels.push_back(it->level);
      failures += !it->verdict;
    } else if (!it->verdict) {
      deterministic_ok = false;
    }
  }
  n_stat = levels.size();
  allowed = stats::allowed_failures(levels);
}

inline void finalize(ExperimentReport& r) {
  tally(r.checks.begin(), r.checks.end(), r.statistical_checks, r.statistical_failures,
        r.allowed_failures, r.deterministic_ok);
  r.overall = r.deterministic_ok && r.statistical_failures <= r.allowed_failures;
}

namespace detail {

inline double ks_critical_distance(double n_eff, double level) {
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (stats::ks_p_value(mid, n_eff) > level ? lo : hi) = mid;
  }
  return hi;
}

class Recorder {
 public:
  void ks(const std::string& id, const stats::KsReport& r) {
    Check c;
    c.id = id;
    c.statistic = r.d;
    c.tolerance = ks_critical_distance(r.n_eff, r.threshold);
    c.p_value = r.p_value;
    c.verdict = r.passed();
    c.level = r.threshold;
    checks_.push_back(std::move(c));
  }

  void ks_two(const std::string& id, std::vector<double> sim, std::vector<double> ref) {
    ks(id, stats::ks_two_sample(stats::EmpiricalSample(std::move(sim)),
                                stats::EmpiricalSample(std::move(ref))));
  }

  template <class Cdf>
  void ks_one(const std::string& id, std::vector<double> sim, const Cdf& cdf) {
    ks(id, stats::ks_one_sample(stats::EmpiricalSample(std::move(sim)), cdf));
  }

  /// |estimate - target| < 3 SE.
  void z(const std::string& id, double estimate, double std_error, double target) {
    Check c;
    c.id = id;
    c.statistic = estimate;
    c.target = target;
    c.tolerance = 3.0 * std_error;
    const double diff = estimate - target;
    const double zs = std_error > 0.0 ? diff / std_error
                                      : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    c.p_value = stats::two_sided_normal_p(zs);
    c.verdict = std::abs(zs) < 3.0;
    c.level = kZLevel;
    checks_.push_back(std::move(c));
  }

  void z(const std::string& id, const stats::MomentReport& r) {
    z(id, r.estimate, r.std_error, r.target.value_or(0.0));
  }

  void mean(const std::string& id, std::span<const double> v, double target) {
    z(id, stats::mean_report(v, target));
  }

  void independence(const std::string& id, std::span<const double> x, std::span<const double> y) {
    const auto r = stats::rank_independence(x, y);
    Check c;
    c.id = id + "/spearman";
    c.statistic = r.spearman_rho;
    c.target = 0.0;
    c.p_value = r.spearman_p;
    c.verdict = r.spearman_p > r.threshold;
    c.level = r.threshold;
    checks_.push_back(std::move(c));
    ks(id + "/product_ks", r.product_ks);
  }

  /// Deterministic |value - target| <= tol.
  void within(const std::string& id, double value, double target, double tol) {
    Check c;
    c.id = id;
    c.statistic = value;
    c.target = target;
    c.tolerance = tol;
    c.verdict = std::abs(value - target) <= tol;
    checks_.push_back(std::move(c));
  }

  /// Deterministic value <= bound.
  void at_most(const std::string& id, double value, double bound) {
    Check c;
    c.id = id;
    c.statistic = value;
    c.tolerance = bound;
    c.verdict = value <= bound;
    checks_.push_back(std::move(c));
  }

  std::vector<Check> take() { return std::move(checks_); }

 private:
  std::vector<Check> checks_;
};

/// n draws of a K-vector; draw i comes from stream i / 4096 of `seed`, so the
/// result does not depend on the worker count.
template <std::size_t K, class Draw>
std::vector<std::array<double, K>> draw_exact(std::uint64_t seed, std::size_t n, unsigned workers,
                                              Draw draw) {
  constexpr std::size_t kBlock = 4096;
  std::vector<std::array<double, K>> out(n);
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  parallel_for(blocks, workers, [&](std::size_t b) {
    auto rng = make_stream(seed, b);
    const std::size_t end = std::min(n, (b + 1) * kBlock);
    for (std::size_t i = b * kBlock; i < end; ++i) out[i] = draw(rng);
  });
  return out;
}

template <std::size_t K>
std::vector<double> column(const std::vector<std::array<double, K>>& v, std::size_t k) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i][k];
  return out;
}

template <class F>
std::vector<double> map_rows(std::size_t n, F f) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
  return out;
}

/// Tabulated CDFs are expensive; build each once per process.
inline const laws::FastCdf& cached_cdf(const std::string& key,
                                       const std::function<laws::AnalyticDensity()>& make) {
  static std::mutex mu;
  static std::map<std::string, std::unique_ptr<laws::FastCdf>> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, std::make_unique<laws::FastCdf>(
                                std::make_shared<const laws::AnalyticDensity>(make())))
             .first;
  return *it->second;
}

inline std::string fmt(double x) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << x;
  return os.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Shared path batches
// ---------------------------------------------------------------------------

struct BatchKey {
  pathkit::StepScheme scheme;
  std::size_t paths = 0;
  std::uint64_t seed = 0;
  std::vector<int> p_values;
  std::vector<double> l_grid;

  std::string str() const {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << std::setprecision(17) << scheme.dt << '|' << scheme.max_chunks << '|'
       << static_cast<int>(scheme.crossing_correction) << '|' << scheme.initial_horizon << '|'
       << scheme.coarse_steps << '|' << paths << '|' << seed << '|';
    for (int p : p_values) os << p << ',';
    os << '|';
    for (double l : l_grid) os << l << ',';
    return os.str();
  }
};

/// Paths to level 1 with every recorded functional. Failed (horizon-exhausted)
/// paths are dropped; the others keep their index order.
struct PathBatch {
  std::size_t requested = 0;
  std::size_t failures = 0;
  std::vector<pathkit::TripletSet> sets;
  std::vector<std::vector<double>> h, hprime;  // [p index][path]
  std::vector<std::vector<double>> tau;        // first passage of m to l: [l index][path]
  double seconds = 0.0;

  std::size_t size() const { return sets.size(); }
};

inline PathBatch simulate_batch(const BatchKey& key, unsigned workers) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = key.paths, np = key.p_values.size(), nl = key.l_grid.size();
  std::vector<char> ok(n, 0);
  std::vector<pathkit::TripletSet> sets(n);
  std::vector<double> fh(n * np), fhp(n * np), ft(n * nl);
  const std::uint64_t seed = derive_seed(key.seed, "paths");
  parallel_for(n, workers, [&](std::size_t i) {
    thread_local pathkit::DiscretePath scratch;
    auto rng = make_stream(seed, i);
    try {
      sets[i] = pathkit::sample_triplet_set(rng, key.scheme, scratch);
    } catch (const pathkit::HorizonExhausted&) {
      return;
    }
    for (std::size_t k = 0; k < np; ++k) {
      fh[i * np + k] = pathkit::functional_from_path(scratch, key.p_values[k], pathkit::HpVariant::H);
      fhp[i * np + k] =
          pathkit::functional_from_path(scratch, key.p_values[k], pathkit::HpVariant::Hprime);
    }
    for (std::size_t k = 0; k < nl; ++k) ft[i * nl + k] = pathkit::first_passage_time(scratch, key.l_grid[k]);
    ok[i] = 1;
  });

  PathBatch b;
  b.requested = n;
  b.h.assign(np, {});
  b.hprime.assign(np, {});
  b.tau.assign(nl, {});
  for (std::size_t i = 0; i < n; ++i) {
    if (!ok[i]) {
      ++b.failures;
      continue;
    }
    b.sets.push_back(sets[i]);
    for (std::size_t k = 0; k < np; ++k) {
      b.h[k].push_back(fh[i * np + k]);
      b.hprime[k].push_back(fhp[i * np + k]);
    }
    for (std::size_t k = 0; k < nl; ++k) b.tau[k].push_back(ft[i * nl + k]);
  }
  b.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return b;
}

class BatchCache {
 public:
  std::shared_ptr<const PathBatch> get(const BatchKey& key, unsigned workers) {
    const auto k = key.str();
    auto it = map_.find(k);
    if (it != map_.end()) return it->second;
    auto b = std::make_shared<const PathBatch>(simulate_batch(key, workers));
    map_.emplace(k, b);
    return b;
  }

 private:
  std::map<std::string, std::shared_ptr<const PathBatch>> map_;
};

namespace detail {

struct Context {
  const ExperimentSpec& spec;
  BatchCache& cache;
  Recorder rec;

  std::uint64_t seed(std::string_view tag) const {
    return derive_seed(spec.master_seed, spec.name + "/" + std::string(tag));
  }

  std::shared_ptr<const PathBatch> batch(double dt) {
    BatchKey key{spec.scheme, spec.paths, spec.master_seed, spec.options.p_values,
                 spec.options.l_grid};
    key.scheme.dt = dt;
    auto b = cache.get(key, spec.workers);
    if (b->size() < 10) throw pathkit::HorizonExhausted(key.scheme.horizon());
    rec.at_most("horizon_exhausted/dt=" + fmt(dt), static_cast<double>(b->failures),
                kPathFailureBudget * static_cast<double>(b->requested));
    return b;
  }

  std::vector<std::array<double, 3>> reference(laws::ReferenceKind kind, std::size_t n,
                                               std::string_view tag) {
    return draw_exact<3>(seed(tag), n, spec.workers,
                         [kind](RandomStream& rng) { return laws::sample_reference(kind, rng).v; });
  }
};

struct Triplets {
  std::vector<double> x, y, z;
};

template <class Pick>
Triplets triplets(const PathBatch& b, Pick pick) {
  Triplets t;
  for (const auto& s : b.sets) {
    const pathkit::TripletSample v = pick(s);
    t.x.push_back(v.x);
    t.y.push_back(v.y);
    t.z.push_back(v.z);
  }
  return t;
}

inline Triplets triplets(const std::vector<std::array<double, 3>>& v) {
  return {column(v, 0), column(v, 1), column(v, 2)};
}

inline std::vector<double> times(const std::vector<double>& a, const std::vector<double>& b) {
  return map_rows(a.size(), [&](std::size_t i) { return a[i] * b[i]; });
}

inline std::vector<double> plus(const std::vector<double>& a, const std::vector<double>& b) {
  return map_rows(a.size(), [&](std::size_t i) { return a[i] + b[i]; });
}

// Marginal KS for each coordinate plus the x*y, x+z, y*z projections.
inline void compare_triplets(Recorder& rec, const std::string& prefix, const Triplets& sim,
                             const Triplets& ref) {
  rec.ks_two(prefix + "ks/x", sim.x, ref.x);
  rec.ks_two(prefix + "ks/y", sim.y, ref.y);
  rec.ks_two(prefix + "ks/z", sim.z, ref.z);
  rec.ks_two(prefix + "ks/x_times_y", times(sim.x, sim.y), times(ref.x, ref.y));
  rec.ks_two(prefix + "ks/x_plus_z", plus(sim.x, sim.z), plus(ref.x, ref.z));
  rec.ks_two(prefix + "ks/y_times_z", times(sim.y, sim.z), times(ref.y, ref.z));
}

inline std::vector<double> indicator_positive(const std::vector<double>& v) {
  return map_rows(v.size(), [&](std::size_t i) { return v[i] > 0.0 ? 1.0 : 0.0; });
}

inline std::vector<double> squares(const std::vector<double>& v) {
  return map_rows(v.size(), [&](std::size_t i) { return v[i] * v[i]; });
}

inline double sign_mass() { return 1.0 - 0.5 * std::log(3.0); }

// ---------------------------------------------------------------------------
// Recipes
// ---------------------------------------------------------------------------

inline void verify_theorem1(Context& cx) {
  const auto b = cx.batch(cx.spec.scheme.dt);
  const auto sim = triplets(*b, [](const auto& s) { return s.pseudo_bridge; });
  const auto ref = triplets(cx.reference({laws::ReferenceTag::thm1_rhs}, cx.spec.paths, "thm1_rhs"));
  auto& rec = cx.rec;
  compare_triplets(rec, "", sim, ref);
  rec.ks_one("ks_exact/x_normal", sim.x, [](double x) { return laws::normal_cdf(2.0 * x); });
  rec.ks_one("ks_exact/y_half_normal", sim.y, [](double y) { return laws::half_normal_cdf(y); });
  rec.ks_one("ks_exact/z_uniform", sim.z, [](double z) { return laws::uniform_cdf(z); });
  rec.independence("independence/x_z", sim.x, sim.z);
  rec.independence("independence/y_z", sim.y, sim.z);
  rec.mean("moment/mean_x", sim.x, 0.0);
  rec.z("moment/second_x", stats::moment_report(sim.x, 2.0, 0.25));
  rec.mean("moment/mean_y", sim.y, laws::kSqrt2OverPi);
  rec.mean("moment/mean_z", sim.z, 0.5);
}

inline void verify_corollary1(Context& cx) {
  const auto b = cx.batch(cx.spec.scheme.dt);
  auto& rec = cx.rec;
  const std::size_t n = cx.spec.paths;

  const auto hit = triplets(*b, [](const auto& s) { return s.hitting; });
  compare_triplets(rec, "hitting/", hit,
                   triplets(cx.reference({laws::ReferenceTag::cor1_hitting_rhs}, n, "cor1_hitting_rhs")));
  rec.mean("hitting/moment/mean_x", hit.x, 0.0);
  rec.z("hitting/moment/second_x", stats::moment_report(hit.x, 2.0, 1.0 / 3.0));
  rec.mean("hitting/sign_mass", indicator_positive(hit.x), sign_mass());
  std::size_t bad = 0;
  for (std::size_t i = 0; i < hit.x.size(); ++i) bad += hit.x[i] > hit.y[i] * hit.z[i];
  rec.at_most("hitting/violations/w_above_m", static_cast<double>(bad), 0.0);

  const auto bes = triplets(*b, [](const auto& s) { return s.bessel; });
  compare_triplets(rec, "bessel/", bes,
                   triplets(cx.reference({laws::ReferenceTag::cor1_bessel_rhs}, n, "cor1_bessel_rhs")));
  rec.mean("bessel/moment/mean_x", bes.x, laws::kSqrt2OverPi);
  rec.z("bessel/moment/second_x", stats::moment_report(bes.x, 2.0, 5.0 / 6.0));
  bad = 0;
  for (std::size_t i = 0; i < bes.x.size(); ++i) bad += bes.x[i] < bes.y[i] * bes.z[i];
  rec.at_most("bessel/violations/r_below_future_inf", static_cast<double>(bad), 0.0);
}

inline void verify_corollary2(Context& cx) {
  const auto b = cx.batch(cx.spec.scheme.dt);
  auto& rec = cx.rec;
  Triplets sim;
  double gap_hitting = 0.0, gap_bessel = 0.0;
  for (const auto& s : b->sets) {
    const auto t = pathkit::to_cor2(s.pseudo_bridge);
    const auto th = pathkit::to_cor2(s.hitting);
    const auto tb = pathkit::to_cor2(s.bessel);
    auto rel = [](const pathkit::TripletSample& a, const pathkit::TripletSample& c) {
      return std::max({std::abs(a.x - c.x) / (1.0 + std::abs(a.x)),
                       std::abs(a.y - c.y) / (1.0 + std::abs(a.y)),
                       std::abs(a.z - c.z) / (1.0 + std::abs(a.z))});
    };
    gap_hitting = std::max(gap_hitting, rel(t, th));
    gap_bessel = std::max(gap_bessel, rel(t, tb));
    sim.x.push_back(t.x);
    sim.y.push_back(t.y);
    sim.z.push_back(t.z);
  }
  // The three verify_corollary2 triplets coincide pathwise under the couplings, so
  // the statistics below are computed once.
  rec.at_most("coincide/hitting", gap_hitting, 1e-9);
  rec.at_most("coincide/bessel", gap_bessel, 1e-9);
  compare_triplets(rec, "", sim, triplets(cx.reference({laws::ReferenceTag::cor2_rhs}, cx.spec.paths, "cor2_rhs")));
  rec.ks_one("ks_exact/x", sim.x, [](double t) { return t <= 0.0 ? 0.0 : 2.0 * t / (1.0 + 2.0 * t); });
  rec.ks_one("ks_exact/y_uniform", sim.y, [](double y) { return laws::uniform_cdf(y); });
  rec.ks_one("ks_exact/z_maxwell", sim.z, laws::maxwell_cdf);
  rec.independence("independence/x_y", sim.x, sim.y);
  rec.independence("independence/x_z", sim.x, sim.z);
  rec.independence("independence/y_z", sim.y, sim.z);
}

inline void verify_lemma_exp(Context& cx) {
  auto& rec = cx.rec;
  const std::size_t n = cx.spec.exact_draws;
  // (|B_s|, L_s) at s = 2E.
  const auto d = draw_exact<2>(cx.seed("fixed_time_at_2E"), n, cx.spec.workers, [](RandomStream& rng) {
    return laws::sample_fixed_time(rng, 2.0 * rng.exponential());
  });
  const auto ref = cx.reference({laws::ReferenceTag::lemma_exp_pair}, n, "lemma_exp_pair");
  const auto x = column(d, 0), y = column(d, 1);
  rec.ks_one("ks_exact/abs_b_exponential", x, laws::exponential_cdf);
  rec.ks_one("ks_exact/l_exponential", y, laws::exponential_cdf);
  rec.ks_two("ks/abs_b", x, column(ref, 0));
  rec.ks_two("ks/l", y, column(ref, 1));
  rec.independence("independence/abs_b_l", x, y);
  rec.mean("moment/mean_abs_b", x, 1.0);
  rec.mean("moment/mean_l", y, 1.0);
  rec.mean("moment/mean_product", times(x, y), 1.0);
  // E[(2E)^q] = 2^q Gamma(1 + q) turns the fixed-time Mellin transform into
  // Gamma(1 + a) Gamma(1 + c).
  double worst = 0.0;
  for (double a : {0.5, 1.0, 2.0})
    for (double c : {0.5, 1.0, 2.0}) {
      const double q = 0.5 * (a + c);
      const double lhs = std::pow(2.0, q) * std::tgamma(1.0 + q) * laws::mellin_abs_b1_l1(a, c);
      const double rhs = std::tgamma(1.0 + a) * std::tgamma(1.0 + c);
      worst = std::max(worst, std::abs(lhs / rhs - 1.0));
    }
  rec.at_most("closed_form/mellin_at_2E", worst, 1e-13);
}

inline void verify_mellin(Context& cx) {
  auto& rec = cx.rec;
  const auto d = draw_exact<2>(cx.seed("b1_l1"), cx.spec.exact_draws, cx.spec.workers, [](RandomStream& rng) {
    const auto s = laws::sample_b1_l1(rng);
    return std::array<double, 2>{s.abs_b, s.l};
  });
  for (double a : {0.5, 1.0, 2.0})
    for (double c : {0.5, 1.0, 2.0}) {
      const auto v = map_rows(d.size(), [&](std::size_t i) { return std::pow(d[i][0], a) * std::pow(d[i][1], c); });
      rec.mean("moment/a=" + fmt(a) + "/c=" + fmt(c), v, laws::mellin_abs_b1_l1(a, c));
    }
  double worst = 0.0;
  for (double a : {0.5, 1.0, 2.0, 3.0}) {
    worst = std::max(worst, std::abs(laws::mellin_abs_b1_l1(a, 0.0) / laws::half_normal_moment(a) - 1.0));
    worst = std::max(worst, std::abs(laws::mellin_abs_b1_l1(0.0, a) / laws::half_normal_moment(a) - 1.0));
  }
  rec.at_most("closed_form/half_normal_marginals", worst, 1e-13);

  // Time-1 slice of fixed-horizon paths. With the bridge correction the
  // running maximum at grid times is exact, so a coarse grid suffices.
  pathkit::StepScheme grid = cx.spec.scheme;
  grid.dt = 1.0 / 64.0;
  grid.crossing_correction = pathkit::CrossingCorrection::bridge;
  const std::size_t n = cx.spec.paths;
  std::vector<double> abs_b(n), loc(n);
  const std::uint64_t seed = cx.seed("fixed_horizon");
  parallel_for(n, cx.spec.workers, [&](std::size_t i) {
    auto rng = make_stream(seed, i);
    const auto p = pathkit::simulate_fixed_horizon(rng, grid, 1.0);
    abs_b[i] = p.m.back() - p.w.back();
    loc[i] = p.m.back();
  });
  const auto ref = draw_exact<2>(cx.seed("fixed_time_reference"), n, cx.spec.workers,
                                 [](RandomStream& rng) { return laws::sample_fixed_time(rng, 1.0); });
  rec.ks_two("paths/ks/abs_b", abs_b, column(ref, 0));
  rec.ks_two("paths/ks/l", loc, column(ref, 1));
  rec.mean("paths/moment/a=1/c=1", times(abs_b, loc), laws::mellin_abs_b1_l1(1.0, 1.0));
}

inline void verify_alpha(Context& cx) {
  auto& rec = cx.rec;
  const std::size_t n = cx.spec.exact_draws;
  const double target_pos = sign_mass();

  // Closed forms by quadrature.
  const auto alpha = laws::density_alpha();
  rec.within("quadrature/alpha_mass", alpha.total_mass(), 1.0, 1e-6);
  rec.within("quadrature/alpha_negative_mass", alpha.cdf(0.0), 0.5 * std::log(3.0), 1e-6);
  {
    auto f = [](double x) { return x * x * laws::alpha_pdf(x); };
    const double m2 = integrate(f, -laws::kInf, 0.0).value + integrate(f, 0.0, laws::kInf).value;
    rec.within("quadrature/alpha_second_moment", m2, 1.0 / 3.0, 1e-6);
  }
  const auto u = laws::density_u();
  rec.within("quadrature/u_mass", u.total_mass(), 1.0, 1e-12);
  rec.within("quadrature/u_negative_mass", u.cdf(0.0), 0.5 * std::log(3.0), 1e-12);

  // Exact draws.
  const auto a = column(cx.reference({laws::ReferenceTag::cor1_hitting_rhs}, n, "cor1_hitting_rhs"), 0);
  rec.mean("exact/moment/mean", a, 0.0);
  rec.z("exact/moment/second", stats::moment_report(a, 2.0, 1.0 / 3.0));
  rec.mean("exact/sign_mass", indicator_positive(a), target_pos);
  const auto& alpha_cdf = cached_cdf("alpha", [] { return laws::density_alpha(); });
  rec.ks_one("exact/ks/alpha_density", a, alpha_cdf);
  std::vector<double> pos, neg;
  for (double v : a) (v > 0.0 ? pos : neg).push_back(v > 0.0 ? v : -v);
  rec.ks_one("exact/ks/positive_part", pos,
             cached_cdf("alpha_positive", [] { return laws::density_half_normal_times("alpha_positive", laws::z_pdf); }));
  rec.ks_one("exact/ks/negative_part", neg, [](double x) { return laws::half_normal_cdf(x, 0.5); });
  const auto big_a = draw_exact<1>(cx.seed("a"), n, cx.spec.workers, [](RandomStream& rng) {
    return std::array<double, 1>{laws::sample_a_c(rng, 0.5)};
  });
  rec.ks_one("exact/ks/a_u_density", column(big_a, 0), cached_cdf("u", [] { return laws::density_u(); }));

  // Path simulation on the ladder (4 dt, dt, dt / 4).
  const double dt = cx.spec.scheme.dt;
  const std::vector<double> dts{4.0 * dt, dt, 0.25 * dt};
  stats::BiasLadder mean_l{dts, {}, {}}, second_l{dts, {}, {}}, pos_l{dts, {}, {}};
  for (double h : dts) {
    const auto b = cx.batch(h);
    const auto x = triplets(*b, [](const auto& s) { return s.hitting; }).x;
    const auto m1 = stats::mean_report(x, 0.0);
    const auto m2 = stats::moment_report(x, 2.0, 1.0 / 3.0);
    const auto mp = stats::mean_report(indicator_positive(x), target_pos);
    mean_l.estimates.push_back(m1.estimate);
    mean_l.std_errors.push_back(m1.std_error);
    second_l.estimates.push_back(m2.estimate);
    second_l.std_errors.push_back(m2.std_error);
    pos_l.estimates.push_back(mp.estimate);
    pos_l.std_errors.push_back(mp.std_error);
    if (h == dt) {
      // 5% bands before extrapolation; the mean band is 5% of the standard deviation.
      rec.within("paths/band/mean", m1.estimate, 0.0, 0.05 * std::sqrt(1.0 / 3.0));
      rec.within("paths/band/second", m2.estimate, 1.0 / 3.0, 0.05 / 3.0);
      rec.within("paths/band/sign_mass", mp.estimate, target_pos, 0.05 * target_pos);
      rec.ks_one("paths/ks/alpha_density", x, alpha_cdf);
    }
  }
  auto extrapolated = [&](const std::string& id, const stats::BiasLadder& l, double target) {
    const auto r = stats::richardson(l, 1.0);
    rec.z(id, r.limit, r.std_error, target);
  };
  extrapolated("paths/richardson/mean", mean_l, 0.0);
  extrapolated("paths/richardson/second", second_l, 1.0 / 3.0);
  extrapolated("paths/richardson/sign_mass", pos_l, target_pos);
}

inline void verify_descB(Context& cx) {
  auto& rec = cx.rec;
  const auto k = laws::density_k();
  rec.within("quadrature/k_mass", k.total_mass(), 1.0, 1e-9);
  rec.within("quadrature/k_negative_mass", k.cdf(0.0), 0.5 * std::log(3.0), 1e-9);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double x = -5.0 + 6.0 * (i + 0.5) / 50.0;
    auto f = [x](double z) { return z > 0.0 ? laws::h_density(z, x) : 0.0; };
    worst = std::max(worst, std::abs(integrate(f, 0.0, laws::kInf).value - laws::k_density(x)));
  }
  rec.at_most("quadrature/h_marginal_is_k", worst, 1e-6);
  auto one = [](double) { return 1.0; };
  auto ex = [](double b) { return std::exp(b); };
  using laws::Side;
  rec.within("quadrature/weighted_p0_total",
             laws::descB_weighted_integral(0.0, one, Side::positive) +
                 laws::descB_weighted_integral(0.0, one, Side::negative),
             1.0, 1e-9);
  rec.within("quadrature/weighted_p1_total",
             laws::descB_weighted_integral(1.0, one, Side::positive) +
                 laws::descB_weighted_integral(1.0, one, Side::negative),
             laws::kSqrt2OverPi, 1e-9);

  // Exact draws of (1 / sqrt(T_1), B_{U T_1}).
  const auto ex_draws = cx.reference({laws::ReferenceTag::exact_joint_descB}, cx.spec.exact_draws, "exact_joint_descB");
  const auto& k_cdf = cached_cdf("k", [] { return laws::density_k(); });
  rec.ks_one("exact/ks/y_half_normal", column(ex_draws, 0), [](double y) { return laws::half_normal_cdf(y); });
  rec.ks_one("exact/ks/b_k_density", column(ex_draws, 1), k_cdf);

  // Path simulation: y = 1 / sqrt(T_1), b = W_{U T_1}.
  const auto b = cx.batch(cx.spec.scheme.dt);
  const auto hit = triplets(*b, [](const auto& s) { return s.hitting; });
  const auto& y = hit.y;
  const auto bb = map_rows(y.size(), [&](std::size_t i) { return hit.x[i] / hit.y[i]; });
  const auto ref = cx.reference({laws::ReferenceTag::exact_joint_descB}, cx.spec.paths, "exact_joint_descB_paths");
  rec.ks_two("paths/ks/y", y, column(ref, 0));
  rec.ks_two("paths/ks/b", bb, column(ref, 1));
  rec.ks_two("paths/ks/y_times_b", times(y, bb), times(column(ref, 0), column(ref, 1)));
  rec.ks_one("paths/ks/b_k_density", bb, k_cdf);

  for (double p : {0.0, 1.0, 2.0})
    for (int phi = 0; phi < 2; ++phi)
      for (Side side : {Side::positive, Side::negative}) {
        const std::function<double(double)> f = phi == 0 ? std::function<double(double)>(one) : ex;
        const double target = laws::descB_weighted_integral(p, f, side);
        const auto v = map_rows(y.size(), [&](std::size_t i) {
          const bool in = side == Side::positive ? bb[i] > 0.0 : bb[i] < 0.0;
          return in ? std::pow(y[i], p) * f(bb[i]) : 0.0;
        });
        rec.mean(std::string("paths/weighted/p=") + fmt(p) + (phi == 0 ? "/phi=1" : "/phi=exp") +
                     (side == Side::positive ? "/positive" : "/negative"),
                 v, target);
      }

  // Rectangle probabilities P(y0 < Y <= y1, b0 < B <= b1) from h by nested quadrature.
  struct Rect {
    double y0, y1, b0, b1;
  };
  for (const Rect r : {Rect{0.0, 1.0, 0.0, 0.5}, Rect{0.0, 0.5, -1.0, 0.0}, Rect{0.5, 1.5, -4.0, -1.0}}) {
    auto inner = [&](double x) {
      auto g = [x](double z) { return z > 0.0 ? laws::h_density(z, x) : 0.0; };
      return integrate(g, r.y0, r.y1).value;
    };
    const double target = integrate(inner, r.b0, r.b1).value;
    const auto v = map_rows(y.size(), [&](std::size_t i) {
      return (y[i] > r.y0 && y[i] <= r.y1 && bb[i] > r.b0 && bb[i] <= r.b1) ? 1.0 : 0.0;
    });
    rec.mean("paths/rectangle/y=" + fmt(r.y0) + ":" + fmt(r.y1) + "/b=" + fmt(r.b0) + ":" + fmt(r.b1), v, target);
  }
}

inline void verify_centered(Context& cx) {
  auto& rec = cx.rec;
  const auto& ps = cx.spec.options.p_values;
  const auto b = cx.batch(cx.spec.scheme.dt);
  const auto d = draw_exact<3>(cx.seed("reduced_form"), cx.spec.exact_draws, cx.spec.workers, [](RandomStream& rng) {
    const auto s = laws::sample_b1_l1(rng);
    return std::array<double, 3>{rng.uniform(), s.l, s.abs_b};
  });
  for (std::size_t k = 0; k < ps.size(); ++k) {
    const int p = ps[k];
    const std::string tag = "p=" + std::to_string(p);
    const auto& h = b->h[k];
    const auto& hp = b->hprime[k];
    double gap = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) gap = std::max(gap, std::abs(h[i] - hp[i]) / (1.0 + std::abs(h[i])));
    rec.at_most("paths/" + tag + "/h_equals_hprime", gap, 1e-9);
    rec.mean("paths/" + tag + "/mean_h", h, 0.0);
    rec.mean("paths/" + tag + "/mean_hprime", hp, 0.0);

    // c' Lambda^p L^p - |B| Lambda^(p-1) L^(p-1) / 2 with c' = (p + 1) / (2 p^2).
    const double cp = (p + 1.0) / (2.0 * p * p);
    const auto v = map_rows(d.size(), [&](std::size_t i) {
      const double ll = d[i][0] * d[i][1];
      return cp * std::pow(ll, p) - 0.5 * d[i][2] * std::pow(ll, p - 1);
    });
    rec.mean("exact/" + tag + "/reduced_form", v, 0.0);
    const double closed = cp / (p + 1.0) * laws::half_normal_moment(p) -
                          0.5 / p * laws::mellin_abs_b1_l1(1.0, p - 1.0);
    rec.at_most("closed_form/" + tag + "/reduced_mean", std::abs(closed), 1e-14);
  }
}

inline void verify_bessel_ratio(Context& cx) {
  auto& rec = cx.rec;
  rec.within("quadrature/l_mass", laws::density_l().total_mass(), 1.0, 1e-9);
  const auto rg = laws::density_r_gamma();
  rec.within("quadrature/r_gamma_mass", rg.total_mass(), 1.0, 1e-6);
  {
    auto f = [](double x) { return x > 0.0 ? x * laws::r_gamma_pdf(x) : 0.0; };
    rec.within("quadrature/r_gamma_mean", integrate(f, 0.0, laws::kInf).value, laws::kSqrt2OverPi, 1e-6);
  }
  const auto& l_cdf = cached_cdf("l", [] { return laws::density_l(); });
  const auto& rg_cdf = cached_cdf("r_gamma", [] { return laws::density_r_gamma(); });

  auto draw = [](RandomStream& rng) {
    const double r = laws::sample_maxwell(rng);
    const double lam = rng.uniform(), u = rng.uniform();
    const double a = lam * u + 0.5 * (1.0 - u);
    return std::array<double, 2>{a, r * a};
  };
  const auto d = draw_exact<2>(cx.seed("a_prime"), cx.spec.exact_draws, cx.spec.workers, draw);
  rec.ks_one("exact/ks/a_prime_l_density", column(d, 0), l_cdf);
  rec.ks_one("exact/ks/r1_a_prime_r_gamma", column(d, 1), rg_cdf);

  const auto b = cx.batch(cx.spec.scheme.dt);
  const auto x = triplets(*b, [](const auto& s) { return s.bessel; }).x;
  rec.ks_one("paths/ks/r_gamma_density", x, rg_cdf);
  const auto ref = draw_exact<2>(cx.seed("a_prime_paths"), cx.spec.paths, cx.spec.workers, draw);
  rec.ks_two("paths/ks/r1_a_prime", x, column(ref, 1));
  rec.mean("paths/moment/mean", x, laws::kSqrt2OverPi);
}

inline void verify_appendixA(Context& cx) {
  auto& rec = cx.rec;
  const auto& ls = cx.spec.options.l_grid;
  const auto& lams = cx.spec.options.lambda_grid;
  for (double l : ls)
    for (double lam : lams) {
      const std::string tag = "l=" + fmt(l) + "/lambda=" + fmt(lam);
      const auto d = draw_exact<1>(cx.seed("exact/" + tag), cx.spec.exact_draws, cx.spec.workers,
                                   [l, lam](RandomStream& rng) {
                                     const auto s = pathkit::sample_subordinator_pair(rng, l);
                                     return std::array<double, 1>{s.tau_l / s.tau_1 * std::exp(-lam * s.tau_1)};
                                   });
      rec.mean("exact/" + tag, column(d, 0), l * std::exp(-std::sqrt(2.0 * lam)));
    }
  // Under the Lévy coupling tau_l is the first time the running maximum reaches l.
  const auto b = cx.batch(cx.spec.scheme.dt);
  for (std::size_t k = 0; k < ls.size(); ++k)
    for (double lam : lams) {
      const double l = ls[k];
      const auto v = map_rows(b->size(), [&](std::size_t i) {
        const double t1 = b->sets[i].t_hit;
        return b->tau[k][i] / t1 * std::exp(-lam * t1);
      });
      rec.mean("paths/l=" + fmt(l) + "/lambda=" + fmt(lam), v, l * std::exp(-std::sqrt(2.0 * lam)));
    }
}

inline void verify_appendixB(Context& cx) {
  auto& rec = cx.rec;
  for (double c : cx.spec.options.c_grid) {
    const std::string tag = "c=" + fmt(c);
    const auto fam = laws::ac_family(c);
    rec.within(tag + "/quadrature/a_mass", fam.a_density.total_mass(), 1.0, 1e-9);
    rec.within(tag + "/quadrature/a_negative_mass", fam.a_density.cdf(0.0), 1.0 - fam.p_pos, 1e-9);
    rec.within(tag + "/quadrature/z_mass", fam.z_density.total_mass(), 1.0, 1e-9);
    rec.within(tag + "/quadrature/alpha_mass", fam.alpha_density.total_mass(), 1.0, 1e-6);
    if (c == 0.5) {
      rec.within(tag + "/p_pos_matches_alpha", fam.p_pos, sign_mass(), 1e-15);
      double worst = 0.0;
      for (double x : {-1.0, -0.2, 0.3, 1.0, 2.5}) worst = std::max(worst, std::abs(fam.alpha_density.pdf(x) - laws::alpha_pdf(x)));
      rec.at_most(tag + "/alpha_density_matches_alpha", worst, 1e-8);
    }
    const auto d = draw_exact<2>(cx.seed("draws/" + tag), cx.spec.exact_draws, cx.spec.workers, [c](RandomStream& rng) {
      return std::array<double, 2>{laws::sample_a_c(rng, c), laws::sample_alpha_c(rng, c)};
    });
    const auto a = column(d, 0), al = column(d, 1);
    rec.ks_one(tag + "/ks/a_density", a, cached_cdf("a_c/" + tag, [c] { return laws::ac_family(c).a_density; }));
    rec.ks_one(tag + "/ks/alpha_density", al, cached_cdf("alpha_c/" + tag, [c] { return laws::ac_family(c).alpha_density; }));
    rec.mean(tag + "/p_pos/a", indicator_positive(a), fam.p_pos);
    rec.mean(tag + "/p_pos/alpha", indicator_positive(al), fam.p_pos);
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Entry points
// ---------------------------------------------------------------------------

inline ExperimentReport run(const ExperimentSpec& spec, BatchCache& cache) {
  spec.validate();
  const auto start = std::chrono::steady_clock::now();
  detail::Context cx{spec, cache, {}};
  static const std::map<std::string, void (*)(detail::Context&)> table{
      {"verify_theorem1", detail::verify_theorem1},
      {"verify_corollary1", detail::verify_corollary1},
      {"verify_corollary2", detail::verify_corollary2},
      {"verify_lemma_exp", detail::verify_lemma_exp},
      {"verify_mellin", detail::verify_mellin},
      {"verify_alpha", detail::verify_alpha},
      {"verify_descB", detail::verify_descB},
      {"verify_centered", detail::verify_centered},
      {"verify_bessel_ratio", detail::verify_bessel_ratio},
      {"verify_appendixA", detail::verify_appendixA},
      {"verify_appendixB", detail::verify_appendixB},
  };
  table.at(spec.name)(cx);
  ExperimentReport r;
  r.name = spec.name;
  r.spec = spec;
  r.checks = cx.rec.take();
  for (const auto& c : r.checks)
    if (c.id.rfind("horizon_exhausted", 0) == 0) r.path_failures += static_cast<std::size_t>(c.statistic);
  finalize(r);
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

inline ExperimentReport run(const ExperimentSpec& spec) {
  BatchCache cache;
  return run(spec, cache);
}

struct SuiteReport {
  std::uint64_t seed = 0;
  Budget budget = Budget::quick;
  unsigned workers = 1;
  std::vector<ExperimentReport> reports;
  std::size_t statistical_checks = 0;
  std::size_t statistical_failures = 0;
  std::size_t allowed_failures = 0;
  bool deterministic_ok = true;
  bool overall = false;
  double wall_time = 0.0;
};

/// Tallies the global policy over several reports (for example several seeds).
inline SuiteReport combine(std::vector<ExperimentReport> reports) {
  SuiteReport s;
  s.reports = std::move(reports);
  std::vector<Check> all;
  for (const auto& r : s.reports) all.insert(all.end(), r.checks.begin(), r.checks.end());
  tally(all.begin(), all.end(), s.statistical_checks, s.statistical_failures, s.allowed_failures,
        s.deterministic_ok);
  s.overall = s.deterministic_ok && s.statistical_failures <= s.allowed_failures;
  return s;
}

/// The whole catalog at budget scale; `progress` (if set) is called after each
/// recipe. Passing `cache` keeps the simulated batches for later runs.
inline SuiteReport run_all(std::uint64_t master_seed, Budget budget, unsigned workers = 1,
                           const std::function<void(const ExperimentReport&)>& progress = {},
                           BatchCache* cache = nullptr) {
  const auto start = std::chrono::steady_clock::now();
  BatchCache local;
  BatchCache& batches = cache ? *cache : local;
  std::vector<ExperimentReport> reports;
  for (const auto& name : catalog()) {
    reports.push_back(run(default_spec(name, budget, master_seed, workers), batches));
    if (progress) progress(reports.back());
  }
  SuiteReport s = combine(std::move(reports));
  s.seed = master_seed;
  s.budget = budget;
  s.workers = workers;
  s.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return s;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json to_json(const ExperimentSpec& s) {
  nlohmann::ordered_json j;
  j["paths"] = s.paths;
  j["dt"] = s.scheme.dt;
  j["crossing_correction"] =
      s.scheme.crossing_correction == pathkit::CrossingCorrection::bridge ? "bridge" : "none";
  j["max_chunks"] = s.scheme.max_chunks;
  j["initial_horizon"] = s.scheme.initial_horizon;
  j["coarse_steps"] = s.scheme.coarse_steps;
  j["exact_draws"] = s.exact_draws;
  j["options"] = {{"p", s.options.p_values},
                  {"l", s.options.l_grid},
                  {"lambda", s.options.lambda_grid},
                  {"c", s.options.c_grid}};
  return j;
}

inline nlohmann::ordered_json to_json(const Check& c) {
  nlohmann::ordered_json j;
  j["id"] = c.id;
  j["statistic"] = c.statistic;
  j["target"] = c.target ? nlohmann::ordered_json(*c.target) : nlohmann::ordered_json(nullptr);
  j["tolerance"] = c.tolerance ? nlohmann::ordered_json(*c.tolerance) : nlohmann::ordered_json(nullptr);
  if (c.p_value) j["p_value"] = *c.p_value;
  j["verdict"] = c.verdict ? "pass" : "fail";
  j["level"] = c.level;
  return j;
}

/// Everything that must be reproducible; no timings or worker counts.
inline nlohmann::ordered_json report_body(const ExperimentReport& r) {
  nlohmann::ordered_json j;
  j["name"] = r.name;
  j["spec"] = to_json(r.spec);
  auto checks = nlohmann::ordered_json::array();
  for (const auto& c : r.checks) checks.push_back(to_json(c));
  j["checks"] = std::move(checks);
  j["overall"] = r.overall ? "pass" : "fail";
  j["seed"] = r.spec.master_seed;
  j["version"] = kVersion;
  j["path_failures"] = r.path_failures;
  j["statistical_checks"] = r.statistical_checks;
  j["statistical_failures"] = r.statistical_failures;
  j["allowed_failures"] = r.allowed_failures;
  return j;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline nlohmann::ordered_json report_json(const ExperimentReport& r) {
  nlohmann::ordered_json j;
  j["header"] = {{"generated_at", utc_timestamp()}, {"wall_time_s", r.wall_time}, {"workers", r.spec.workers}};
  const auto body = report_body(r);
  for (const auto& [k, v] : body.items()) j[k] = v;
  return j;
}

inline nlohmann::ordered_json suite_body(const SuiteReport& s) {
  nlohmann::ordered_json j;
  j["name"] = "verify_all";
  j["budget"] = to_string(s.budget);
  j["seed"] = s.seed;
  j["version"] = kVersion;
  auto reports = nlohmann::ordered_json::array();
  for (const auto& r : s.reports) reports.push_back(report_body(r));
  j["reports"] = std::move(reports);
  j["statistical_checks"] = s.statistical_checks;
  j["statistical_failures"] = s.statistical_failures;
  j["allowed_failures"] = s.allowed_failures;
  j["overall"] = s.overall ? "pass" : "fail";
  return j;
}

inline nlohmann::ordered_json suite_json(const SuiteReport& s) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json times;
  for (const auto& r : s.reports) times[r.name] = r.wall_time;
  j["header"] = {{"generated_at", utc_timestamp()},
                 {"wall_time_s", s.wall_time},
                 {"workers", s.workers},
                 {"recipe_wall_time_s", times}};
  const auto body = suite_body(s);
  for (const auto& [k, v] : body.items()) j[k] = v;
  return j;
}

}  // namespace bridgelaw::experiments
