// SPDX-License-Identifier: Apache-2.0
//
// Exact, discretization-free samplers for the right-hand sides of the
// identities. (B_1, L_1) comes from the fixed-time factorization
// (|B_s|, L_s) = R_s (1 - U, U) with R_s = sqrt(s) times a Maxwell variable.
#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "bridgelaw/pathkit.hpp"
#include "bridgelaw/random_stream.hpp"

namespace bridgelaw::laws {

enum class ReferenceTag {
  thm1_rhs,
  cor1_hitting_rhs,
  cor1_bessel_rhs,
  cor2_rhs,
  lemma_exp_pair,
  fixed_time_factorization,
  exact_T1,
  exact_joint_descB,
};

struct ReferenceKind {
  ReferenceTag tag = ReferenceTag::thm1_rhs;
  double s = 1.0;  // time for fixed_time_factorization

  int arity() const {
    switch (tag) {
      case ReferenceTag::thm1_rhs:
      case ReferenceTag::cor1_hitting_rhs:
      case ReferenceTag::cor1_bessel_rhs:
      case ReferenceTag::cor2_rhs:
        return 3;
      case ReferenceTag::lemma_exp_pair:
      case ReferenceTag::fixed_time_factorization:
      case ReferenceTag::exact_joint_descB:
        return 2;
      case ReferenceTag::exact_T1:
        return 1;
    }
    return 0;
  }
};

struct ReferenceDraw {
  std::array<double, 3> v{};
  int arity = 0;
};

/// Norm of three independent standard Gaussians (BES(3) at time 1).
inline double sample_maxwell(RandomStream& rng) {
  const double a = rng.normal(), b = rng.normal(), c = rng.normal();
  return std::sqrt(a * a + b * b + c * c);
}

struct BrownianAtOne {
  double b = 0.0;      // B_1 with an independent fair sign
  double abs_b = 0.0;  // R_1 (1 - U)
  double l = 0.0;      // L_1 = R_1 U
  double r = 0.0;      // R_1
  double u = 0.0;      // U
};

inline BrownianAtOne sample_b1_l1(RandomStream& rng) {
  BrownianAtOne d;
  d.r = sample_maxwell(rng);
  d.u = rng.uniform();
  d.abs_b = d.r * (1.0 - d.u);
  d.l = d.r * d.u;
  d.b = rng.sign() * d.abs_b;
  return d;
}

/// (|B_s|, L_s) for fixed s > 0.
inline std::array<double, 2> sample_fixed_time(RandomStream& rng, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("sample_fixed_time: s must be > 0");
  const double r = std::sqrt(s) * sample_maxwell(rng);
  const double u = rng.uniform();
  return {r * (1.0 - u), r * u};
}

inline ReferenceDraw sample_reference(const ReferenceKind& kind, RandomStream& rng) {
  ReferenceDraw out;
  out.arity = kind.arity();
  switch (kind.tag) {
    case ReferenceTag::thm1_rhs: {
      const auto d = sample_b1_l1(rng);
      out.v = {0.5 * d.b, d.l, rng.uniform()};
      break;
    }
    case ReferenceTag::cor1_hitting_rhs: {
      const auto d = sample_b1_l1(rng);
      const double lam = rng.uniform();
      out.v = {lam * d.l - 0.5 * d.abs_b, d.l, lam};
      break;
    }
    case ReferenceTag::cor1_bessel_rhs: {
      const auto d = sample_b1_l1(rng);
      const double lam = rng.uniform();
      out.v = {lam * d.l + 0.5 * d.abs_b, d.l, lam};
      break;
    }
    case ReferenceTag::cor2_rhs: {
      const double u = rng.uniform();
      const double lam = rng.uniform();
      out.v = {0.5 * (1.0 / u - 1.0), lam, sample_maxwell(rng)};
      break;
    }
    case ReferenceTag::lemma_exp_pair:
      out.v = {rng.exponential(), rng.exponential(), 0.0};
      break;
    case ReferenceTag::fixed_time_factorization: {
      const auto p = sample_fixed_time(rng, kind.s);
      out.v = {p[0], p[1], 0.0};
      break;
    }
    case ReferenceTag::exact_T1: {
      const double n = rng.normal();
      out.v = {1.0 / (n * n), 0.0, 0.0};  // T_1, so that 1 / sqrt(T_1) = |N|
      break;
    }
    case ReferenceTag::exact_joint_descB: {
      // (1 / sqrt(T_1), B_{U T_1}) = (R_1 U, Lambda - (1/U - 1) / 2) with the same U.
      const double r = sample_maxwell(rng);
      const double u = rng.uniform();
      out.v = {r * u, rng.uniform() - 0.5 * (1.0 / u - 1.0), 0.0};
      break;
    }
  }
  return out;
}

/// Reference triplet tagged with its kind; only for three-coordinate tags.
inline pathkit::TripletSample sample_reference_triplet(ReferenceTag tag, RandomStream& rng) {
  using pathkit::TripletKind;
  TripletKind kind;
  switch (tag) {
    case ReferenceTag::thm1_rhs: kind = TripletKind::reference_thm1; break;
    case ReferenceTag::cor1_hitting_rhs: kind = TripletKind::reference_cor1_hitting; break;
    case ReferenceTag::cor1_bessel_rhs: kind = TripletKind::reference_cor1_bessel; break;
    case ReferenceTag::cor2_rhs: kind = TripletKind::reference_cor2; break;
    default: throw std::invalid_argument("sample_reference_triplet: tag has fewer than three coordinates");
  }
  const auto d = sample_reference({tag}, rng);
  return {d.v[0], d.v[1], d.v[2], kind};
}

/// Lambda L_1 - c |B_1|.
inline double sample_alpha_c(RandomStream& rng, double c) {
  const auto d = sample_b1_l1(rng);
  return rng.uniform() * d.l - c * d.abs_b;
}

/// A_c = Lambda U - c (1 - U).
inline double sample_a_c(RandomStream& rng, double c) {
  const double lam = rng.uniform(), u = rng.uniform();
  return lam * u - c * (1.0 - u);
}

inline std::string to_string(ReferenceTag t) {
  switch (t) {
    case ReferenceTag::thm1_rhs: return "thm1_rhs";
    case ReferenceTag::cor1_hitting_rhs: return "cor1_hitting_rhs";
    case ReferenceTag::cor1_bessel_rhs: return "cor1_bessel_rhs";
    case ReferenceTag::cor2_rhs: return "cor2_rhs";
    case ReferenceTag::lemma_exp_pair: return "lemma_exp_pair";
    case ReferenceTag::fixed_time_factorization: return "fixed_time_factorization";
    case ReferenceTag::exact_T1: return "exact_T1";
    case ReferenceTag::exact_joint_descB: return "exact_joint_descB";
  }
  return "?";
}

}  // namespace bridgelaw::laws
