// SPDX-License-Identifier: Apache-2.0
#include "bridgelaw/pathkit.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "bridgelaw/laws.hpp"
#include "bridgelaw/reference.hpp"
#include "bridgelaw/stats.hpp"

using namespace bridgelaw;
using namespace bridgelaw::pathkit;
using stats::EmpiricalSample;

namespace {

StepScheme scheme(double dt, CrossingCorrection cc = CrossingCorrection::bridge) {
  StepScheme s;
  s.dt = dt;
  s.crossing_correction = cc;
  return s;
}

DiscretePath hit_path(std::uint64_t seed, std::uint64_t index, const StepScheme& s, double level = 1.0) {
  auto rng = make_stream(seed, index);
  return simulate_until_max_hits(rng, s, level);
}

std::vector<double> reference_column(laws::ReferenceTag tag, int column, std::size_t n, std::uint64_t seed) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = make_stream(seed, i);
    v[i] = laws::sample_reference({tag}, rng).v[column];
  }
  return v;
}

}  // namespace

TEST(StepScheme, Validation) {
  EXPECT_THROW(scheme(0.0).validate(), std::invalid_argument);
  EXPECT_THROW(scheme(-1e-3).validate(), std::invalid_argument);
  StepScheme s;
  s.max_chunks = 0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.max_chunks = 3;
  s.initial_horizon = 2.0;
  EXPECT_DOUBLE_EQ(s.horizon(), 14.0);
}

TEST(SimulateUntilMaxHits, PathInvariants) {
  for (auto cc : {CrossingCorrection::bridge, CrossingCorrection::none}) {
    for (std::uint64_t i = 0; i < 50; ++i) {
      const auto p = hit_path(21, i, scheme(1e-3, cc));
      ASSERT_TRUE(p.hit);
      EXPECT_EQ(p.w[0], 0.0);
      EXPECT_EQ(p.m[0], 0.0);
      EXPECT_EQ(p.times[0], 0.0);
      for (std::size_t k = 1; k < p.size(); ++k) {
        EXPECT_GE(p.m[k], p.m[k - 1]);
        EXPECT_GE(p.m[k], p.w[k]);
        EXPECT_GT(p.times[k], p.times[k - 1]);
      }
      EXPECT_GE(p.m.back(), 1.0);
      EXPECT_EQ(p.hit->index, p.size() - 1);
      EXPECT_LE(p.hit->t_hit, p.times[p.hit->index]);
      EXPECT_EQ(p.w[p.hit->index], 1.0);
      EXPECT_GE(p.chunks_used, 1);
    }
  }
}

TEST(SimulateUntilMaxHits, RejectsNonPositiveLevel) {
  auto rng = make_stream(1, 0);
  EXPECT_THROW(simulate_until_max_hits(rng, scheme(1e-3), 0.0), std::invalid_argument);
}

TEST(SimulateUntilMaxHits, Deterministic) {
  const auto a = hit_path(22, 7, scheme(1e-3));
  const auto b = hit_path(22, 7, scheme(1e-3));
  EXPECT_EQ(a.w, b.w);
  EXPECT_EQ(a.times, b.times);
  EXPECT_EQ(a.hit->t_hit, b.hit->t_hit);
}

TEST(SimulateUntilMaxHits, HorizonExhaustion) {
  StepScheme s = scheme(1e-3);
  s.max_chunks = 1;
  s.initial_horizon = 1e-2;
  int thrown = 0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    auto rng = make_stream(23, i);
    try {
      simulate_until_max_hits(rng, s, 3.0);
    } catch (const HorizonExhausted&) {
      ++thrown;
    }
  }
  EXPECT_EQ(thrown, 20);
}

TEST(SimulateUntilMaxHits, InverseRootHitTimeIsHalfNormal) {
  const std::size_t n = 100000;
  std::vector<double> y;
  y.reserve(n);
  DiscretePath p;
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = make_stream(24, i);
    try {
      simulate_until_max_hits(rng, scheme(1e-4), 1.0, p);
    } catch (const HorizonExhausted&) {
      continue;
    }
    y.push_back(1.0 / std::sqrt(p.hit->t_hit));
  }
  const auto r = stats::ks_one_sample(EmpiricalSample(y), [](double x) { return laws::half_normal_cdf(x); });
  EXPECT_LT(r.d, 0.01);
}

TEST(SimulateUntilMaxHits, BrownianScalingOfMedianHitTime) {
  const std::size_t n = 100000;
  std::vector<double> t1, t2;
  DiscretePath p;
  for (std::size_t i = 0; i < n; ++i) {
    auto a = make_stream(25, i), b = make_stream(26, i);
    try {
      simulate_until_max_hits(a, scheme(1e-3), 1.0, p);
      t1.push_back(p.hit->t_hit);
      simulate_until_max_hits(b, scheme(1e-3), 2.0, p);
      t2.push_back(p.hit->t_hit);
    } catch (const HorizonExhausted&) {
    }
  }
  auto median = [](std::vector<double>& v) {
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
  };
  EXPECT_NEAR(median(t2) / median(t1), 4.0, 0.4);
}

TEST(SimulateUntilMaxHits, AdaptiveStepsMatchUniformGridInLaw) {
  // Both schemes condition on the same event (hit before the capped horizon).
  StepScheme uniform = scheme(1e-2, CrossingCorrection::none);
  uniform.coarse_steps = false;
  uniform.max_chunks = 10;
  StepScheme adaptive = uniform;
  adaptive.coarse_steps = true;
  std::vector<double> ya, yu, xa, xu;
  DiscretePath p;
  for (std::size_t i = 0; i < 20000; ++i) {
    auto a = make_stream(27, i), u = make_stream(28, i);
    try {
      const auto set = sample_triplet_set(a, adaptive, p);
      ya.push_back(set.hitting.y);
      xa.push_back(set.hitting.x);
    } catch (const HorizonExhausted&) {
    }
    try {
      const auto set = sample_triplet_set(u, uniform, p);
      yu.push_back(set.hitting.y);
      xu.push_back(set.hitting.x);
    } catch (const HorizonExhausted&) {
    }
  }
  EXPECT_GT(stats::ks_two_sample(EmpiricalSample(ya), EmpiricalSample(yu)).p_value, 1e-3);
  EXPECT_GT(stats::ks_two_sample(EmpiricalSample(xa), EmpiricalSample(xu)).p_value, 1e-3);
}

TEST(SimulateFixedHorizon, IncrementsHaveUnitRate) {
  stats::MeanAccumulator inc, sq;
  for (std::uint64_t i = 0; i < 200; ++i) {
    auto rng = make_stream(29, i);
    const auto p = simulate_fixed_horizon(rng, scheme(1e-3), 1.0);
    ASSERT_EQ(p.size(), 1001u);
    for (std::size_t k = 1; k < p.size(); ++k) {
      const double d = p.w[k] - p.w[k - 1];
      inc.add(d);
      sq.add(d * d / p.dt);
    }
  }
  EXPECT_LT(std::abs(inc.mean()) / inc.std_error(), 4.0);
  EXPECT_LT(std::abs(sq.mean() - 1.0) / sq.std_error(), 4.0);
}

TEST(LevyView, AlgebraAndSigns) {
  for (std::uint64_t i = 0; i < 30; ++i) {
    const auto p = hit_path(30, i, scheme(1e-3));
    auto rng = make_stream(31, i);
    const auto v = levy_view(p, rng);
    ASSERT_EQ(v.absB.size(), p.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
      EXPECT_GE(v.absB[k], 0.0);
      EXPECT_NEAR(v.absB[k] + p.w[k], v.loc[k], 1e-14 * (1.0 + std::abs(p.w[k])));
      if (k > 0) {
        EXPECT_GE(v.loc[k], v.loc[k - 1]);
        // One sign per excursion: a run with absB > 0 and unchanged local time.
        if (v.absB[k - 1] > 0.0 && v.loc[k] == v.loc[k - 1]) EXPECT_EQ(v.signs[k], v.signs[k - 1]);
      }
    }
  }
}

TEST(LevyView, TerminalSliceMatchesFactorization) {
  const std::size_t n = 100000;
  std::vector<double> b, l, b_ref(n), l_ref(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = make_stream(32, i);
    const auto p = simulate_fixed_horizon(rng, scheme(1.0 / 64.0), 1.0);
    const auto v = levy_view(p, rng);
    b.push_back(v.absB.back());
    l.push_back(v.loc.back());
    auto ref = make_stream(33, i);
    const auto d = laws::sample_fixed_time(ref, 1.0);
    b_ref[i] = d[0];
    l_ref[i] = d[1];
  }
  EXPECT_GT(stats::ks_two_sample(EmpiricalSample(b), EmpiricalSample(b_ref)).p_value, 1e-3);
  EXPECT_GT(stats::ks_two_sample(EmpiricalSample(l), EmpiricalSample(l_ref)).p_value, 1e-3);
  std::vector<double> sum(n), sum_ref(n);
  for (std::size_t i = 0; i < n; ++i) {
    sum[i] = b[i] + l[i];
    sum_ref[i] = b_ref[i] + l_ref[i];
  }
  EXPECT_GT(stats::ks_two_sample(EmpiricalSample(sum), EmpiricalSample(sum_ref)).p_value, 1e-3);
}

TEST(LevyView, SignAtUniformTimeIsFair) {
  const std::size_t n = 20000;
  stats::MeanAccumulator plus;
  DiscretePath p;
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = make_stream(34, i);
    try {
      const auto set = sample_triplet_set(rng, scheme(1e-3), p);
      plus.add(set.pseudo_bridge.x > 0.0 ? 1.0 : 0.0);
    } catch (const HorizonExhausted&) {
    }
  }
  EXPECT_LT(std::abs(plus.mean() - 0.5), 3.0 * plus.std_error());
}

TEST(PitmanView, AlgebraAndTerminalValue) {
  for (std::uint64_t i = 0; i < 30; ++i) {
    const auto p = hit_path(35, i, scheme(1e-3));
    const auto v = pitman_view(p);
    EXPECT_EQ(v.r[0], 0.0);
    for (std::size_t k = 0; k < p.size(); ++k) {
      EXPECT_GE(v.r[k], v.j[k]);
      EXPECT_GE(v.j[k], 0.0);
      EXPECT_NEAR(v.r[k] - v.j[k], p.m[k] - p.w[k], 1e-14 * (1.0 + std::abs(p.w[k])));
    }
    EXPECT_DOUBLE_EQ(v.r[p.hit->index], 1.0);
    EXPECT_DOUBLE_EQ(v.j[p.hit->index], 1.0);
  }
}

TEST(PitmanView, TerminalSliceIsMaxwell) {
  const std::size_t n = 100000;
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = make_stream(36, i);
    r[i] = pitman_view(simulate_fixed_horizon(rng, scheme(1.0 / 64.0), 1.0)).r.back();
  }
  EXPECT_GT(stats::ks_one_sample(EmpiricalSample(r), [](double x) { return laws::maxwell_cdf(x); }).p_value,
            1e-3);
}

TEST(EvaluateAt, GridTimesAndHitClamp) {
  const auto p = hit_path(37, 3, scheme(1e-3));
  auto rng = make_stream(38, 0);
  for (std::size_t k = 0; k + 1 < p.size(); k += 7) {
    const auto pt = evaluate_at(p, p.times[k], rng);
    EXPECT_DOUBLE_EQ(pt.w, p.w[k]);
  }
  const auto end = evaluate_at(p, p.hit->t_hit, rng);
  EXPECT_EQ(end.w, 1.0);
  EXPECT_EQ(end.m, 1.0);
  const double inside = 0.5 * (p.times[p.size() - 2] + p.hit->t_hit);
  EXPECT_EQ(evaluate_at(p, inside, rng).w, 1.0);
  EXPECT_THROW(evaluate_at(p, p.hit->t_hit * 1.01, rng), std::invalid_argument);
}

TEST(EvaluateAt, MaxDominatesValue) {
  DiscretePath p;
  for (std::uint64_t i = 0; i < 200; ++i) {
    auto rng = make_stream(39, i);
    simulate_until_max_hits(rng, scheme(1e-3), 1.0, p);
    for (int k = 0; k < 20; ++k) {
      const auto pt = evaluate_at(p, rng.uniform() * p.hit->t_hit, rng);
      EXPECT_GE(pt.m, pt.w);
      EXPECT_LE(pt.m, 1.0);
      EXPECT_GE(pt.m, 0.0);
    }
  }
}

TEST(Triplets, SupportAndCouplingInequalities) {
  DiscretePath p;
  for (std::uint64_t i = 0; i < 2000; ++i) {
    auto rng = make_stream(40, i);
    const auto s = sample_triplet_set(rng, scheme(1e-3), p);
    for (const auto& t : {s.pseudo_bridge, s.hitting, s.bessel}) {
      EXPECT_GT(t.y, 0.0);
      EXPECT_GE(t.z, 0.0);
      EXPECT_LE(t.z, 1.0);
    }
    EXPECT_GE(s.bessel.x / s.bessel.y, s.bessel.z - 1e-12);  // R >= J
    EXPECT_LE(s.hitting.x / s.hitting.y, s.hitting.z + 1e-12);  // W <= M
    const auto c1 = to_cor2(s.pseudo_bridge), c2 = to_cor2(s.hitting), c3 = to_cor2(s.bessel);
    EXPECT_NEAR(c1.x, c2.x, 1e-9);
    EXPECT_NEAR(c2.x, c3.x, 1e-9);
    EXPECT_NEAR(c1.z, c3.z, 1e-12);
  }
}

TEST(Triplets, SingleKindSamplersAreReproducible) {
  auto a = make_stream(41, 5), b = make_stream(41, 5);
  const auto x = sample_triplet_hitting(a, scheme(1e-3));
  const auto y = sample_triplet_hitting(b, scheme(1e-3));
  EXPECT_EQ(x.x, y.x);
  EXPECT_EQ(x.kind, TripletKind::hitting);
  auto c = make_stream(41, 6);
  EXPECT_EQ(sample_triplet_bessel(c, scheme(1e-3)).kind, TripletKind::bessel);
  auto d = make_stream(41, 7);
  EXPECT_EQ(sample_triplet_pseudo_bridge(d, scheme(1e-3)).kind, TripletKind::pseudo_bridge);
  EXPECT_THROW(to_cor2({0.1, 1.0, 0.5, TripletKind::reference_thm1}), std::invalid_argument);
}

TEST(Triplets, StepRefinementShrinksDistanceToReference) {
  // Without crossing correction the discrete maximum lags by O(sqrt(dt)). A
  // triplet's distance is its largest marginal KS distance to the reference.
  const std::size_t n = 100000;
  const laws::ReferenceTag tags[3] = {laws::ReferenceTag::thm1_rhs, laws::ReferenceTag::cor1_hitting_rhs,
                                      laws::ReferenceTag::cor1_bessel_rhs};
  std::vector<EmpiricalSample> ref;
  for (int k = 0; k < 3; ++k)
    for (int c = 0; c < 3; ++c) ref.emplace_back(reference_column(tags[k], c, n, 42 + k));
  auto distances = [&](double dt) {
    std::vector<std::vector<double>> cols(9);
    DiscretePath p;
    for (std::size_t i = 0; i < n; ++i) {
      auto rng = make_stream(45, i);
      try {
        const auto s = sample_triplet_set(rng, scheme(dt, CrossingCorrection::none), p);
        int k = 0;
        for (const auto& t : {s.pseudo_bridge, s.hitting, s.bessel}) {
          cols[3 * k].push_back(t.x);
          cols[3 * k + 1].push_back(t.y);
          cols[3 * k + 2].push_back(t.z);
          ++k;
        }
      } catch (const HorizonExhausted&) {
      }
    }
    std::vector<double> d(3, 0.0);
    for (int j = 0; j < 9; ++j)
      d[j / 3] = std::max(d[j / 3], stats::ks_two_sample(EmpiricalSample(cols[j]), ref[j]).d);
    return d;
  };
  const auto coarse = distances(1e-2);
  const auto fine = distances(2.5e-3);
  for (int k = 0; k < 3; ++k)
    EXPECT_GE(coarse[k] / fine[k], 1.5) << "kind " << k << ": " << coarse[k] << " vs " << fine[k];
}

TEST(Functionals, HpVariantsAgreePathwise) {
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto p = hit_path(46, i, scheme(1e-3));
    for (int q : {1, 2, 3})
      EXPECT_NEAR(functional_from_path(p, q, HpVariant::H), functional_from_path(p, q, HpVariant::Hprime),
                  1e-12);
  }
}

TEST(Functionals, FirstOrderIsNormalisedIntegralOfW) {
  const auto p = hit_path(47, 1, scheme(1e-3));
  double integral = 0.0;
  for (std::size_t k = 1; k < p.size(); ++k) integral += 0.5 * (p.w[k] + p.w[k - 1]) * (p.times[k] - p.times[k - 1]);
  EXPECT_NEAR(functional_from_path(p, 1, HpVariant::H), integral / std::pow(p.hit->t_hit, 1.5), 1e-12);
  EXPECT_THROW(functional_from_path(p, 0, HpVariant::H), std::invalid_argument);
}

TEST(FirstPassage, MonotoneInLevel) {
  const auto p = hit_path(48, 2, scheme(1e-3));
  double prev = 0.0;
  for (double l : {0.1, 0.25, 0.5, 0.75, 0.99, 1.0}) {
    const double t = first_passage_time(p, l);
    EXPECT_GE(t, prev);
    prev = t;
  }
  EXPECT_EQ(first_passage_time(p, 1.0), p.hit->t_hit);
}

TEST(Subordinator, OrderingAndDomain) {
  auto rng = make_stream(49, 0);
  for (int i = 0; i < 1000; ++i) {
    const auto s = sample_subordinator_pair(rng, 0.3);
    EXPECT_GT(s.tau_l, 0.0);
    EXPECT_GT(s.tau_1, s.tau_l);
  }
  EXPECT_THROW(sample_subordinator_pair(rng, 0.0), std::invalid_argument);
  EXPECT_THROW(sample_subordinator_pair(rng, 1.0), std::invalid_argument);
}

TEST(Subordinator, LaplaceIdentityAndMarginal) {
  auto rng = make_stream(50, 0);
  std::vector<double> stat(1000000), y(1000000);
  for (std::size_t i = 0; i < stat.size(); ++i) {
    const auto s = sample_subordinator_pair(rng, 0.5);
    stat[i] = s.tau_l / s.tau_1 * std::exp(-s.tau_1);
    y[i] = 1.0 / std::sqrt(s.tau_1);
  }
  const auto r = stats::mean_report(stat, 0.121558367217107);  // 0.5 exp(-sqrt 2)
  EXPECT_LT(std::abs(*r.z_score), 3.0);
  EXPECT_GT(stats::ks_one_sample(EmpiricalSample(y), [](double x) { return laws::half_normal_cdf(x); }).p_value,
            1e-3);
}

TEST(DirectLocalTime, MonotoneAndBounded) {
  auto rng = make_stream(51, 0);
  const auto p = simulate_fixed_horizon(rng, scheme(1e-3), 1.0);
  const auto v = levy_view(p, rng);
  const auto est = direct_local_time(p, v, 0.05);
  EXPECT_TRUE(est.regime_valid);
  for (std::size_t k = 1; k < est.estimates.size(); ++k) EXPECT_GE(est.estimates[k], est.estimates[k - 1]);
  const auto wide = direct_local_time(p, v, 10.0);
  EXPECT_LE(wide.estimates.back(), 1.0 / 20.0 + 1e-12);
  EXPECT_FALSE(direct_local_time(p, v, 0.01).regime_valid);
  EXPECT_THROW(direct_local_time(p, v, 0.0), std::invalid_argument);
}

TEST(DirectLocalTime, ConvergesToLevyLocalTime) {
  std::vector<double> gaps;
  for (double dt : {1e-2, 1e-3, 1e-4}) {
    const double eps = std::pow(dt, 0.4);
    stats::MeanAccumulator gap;
    for (std::uint64_t i = 0; i < 400; ++i) {
      auto rng = make_stream(52, i);
      const auto p = simulate_fixed_horizon(rng, scheme(dt), 1.0);
      const auto v = levy_view(p, rng);
      gap.add(std::abs(direct_local_time(p, v, eps).estimates.back() - v.loc.back()));
    }
    gaps.push_back(gap.mean());
  }
  EXPECT_LT(gaps[1], gaps[0]);
  EXPECT_LT(gaps[2], gaps[1]);
}

TEST(Richardson, RemovesDiscreteMaximumBias) {
  // Mean of 1 / sqrt(t_hit) without crossing correction; leading bias O(sqrt(dt)).
  stats::BiasLadder ladder;
  for (double dt : {4e-4, 1e-4, 2.5e-5}) {
    stats::MeanAccumulator acc;
    DiscretePath p;
    for (std::size_t i = 0; i < 20000; ++i) {
      auto rng = make_stream(53, i);
      try {
        simulate_until_max_hits(rng, scheme(dt, CrossingCorrection::none), 1.0, p);
      } catch (const HorizonExhausted&) {
        continue;
      }
      acc.add(1.0 / std::sqrt(p.hit->t_hit));
    }
    ladder.dts.push_back(dt);
    ladder.estimates.push_back(acc.mean());
    ladder.std_errors.push_back(acc.std_error());
  }
  const auto r = stats::richardson(ladder, 0.5);
  EXPECT_LT(std::abs(r.limit - laws::kSqrt2OverPi), 3.0 * r.std_error)
      << ladder.estimates[0] << " " << ladder.estimates[1] << " " << ladder.estimates[2];
}
