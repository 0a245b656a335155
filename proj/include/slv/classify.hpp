#pragma once

// Algebraic classification of the interaction matrix. All quantities are
// 1-based in the comments, 0-based in code.
//
//   alpha_1 = a22 - a12   alpha_2 = a33 - a23   alpha_3 = a11 - a31
//   beta_1  = a13 - a33   beta_2  = a21 - a11   beta_3  = a32 - a22
//   zeta    = beta_1 beta_2 beta_3 - alpha_1 alpha_2 alpha_3
//   gamma_ij = r (a_ii - a_ji)
//   beta_ij  = r (a_jj - a_ij) / (a_ii a_jj - a_ij a_ji)
//   w_ij     = r (1 - a_ji / a_ii)
//   vartheta = w12 w23 w31 + w21 w13 w32
//
// With equal growth and death rates the sign patterns below are independent
// of r (r > 0 scales every gamma and w). Class membership is checked over
// all 6 relabelings sigma of the species, (A^sigma)_ij = a_{sigma(i)sigma(j)},
// in lexicographic order; the first match wins.
//
//   class 26:  gamma_12>0, gamma_13>0, gamma_21<0, gamma_23<0,
//              gamma_31>0, gamma_32<0,
//              a12 beta_23 + a13 beta_32 > r,  a21 beta_13 + a23 beta_31 < r
//   class 27:  gamma_12>0, gamma_13<0, gamma_21<0, gamma_23>0,
//              gamma_31>0, gamma_32<0
//
// On class 27, sgn(vartheta) = -sgn(zeta). A beta_ij denominator within
// 1e-12 of zero makes the membership test indeterminate; such specs are
// flagged Unresolved rather than guessed.

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "fixedpoints.hpp"
#include "model.hpp"
#include "types.hpp"

namespace slv {

struct InvariantBundle {
  std::array<double, 3> alpha{};
  std::array<double, 3> beta{};
  double zeta = 0.0;
  // order: (1,2) (1,3) (2,1) (2,3) (3,1) (3,2)
  std::array<double, 6> gamma{};
  std::array<double, 6> beta_pairs{};  // NaN where the denominator vanishes
  double vartheta = 0.0;
  double detA = 0.0;
};

namespace detail {
inline constexpr std::array<std::array<int, 3>, 6> kPerms{{{0, 1, 2},
                                                           {0, 2, 1},
                                                           {1, 0, 2},
                                                           {1, 2, 0},
                                                           {2, 0, 1},
                                                           {2, 1, 0}}};
inline constexpr std::array<std::array<int, 2>, 6> kPairs{
    {{0, 1}, {0, 2}, {1, 0}, {1, 2}, {2, 0}, {2, 1}}};

inline Mat3 permuted(const Mat3& A, const std::array<int, 3>& sig) {
  Mat3 B;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) B(i, j) = A(sig[i], sig[j]);
  return B;
}
}  // namespace detail

inline InvariantBundle compute_invariants(const ModelSpec& s) {
  require_valid(s);
  const Mat3& A = s.A;
  const double r = s.b * s.phi - s.mu * (1.0 - s.phi);
  InvariantBundle inv;
  for (int i = 0; i < 3; ++i) {
    const int n = (i + 1) % 3;  // cyclic successor
    inv.alpha[i] = A(n, n) - A(i, n);
    inv.beta[i] = A(i, (i + 2) % 3) - A((i + 2) % 3, (i + 2) % 3);
  }
  inv.zeta = inv.beta[0] * inv.beta[1] * inv.beta[2] -
             inv.alpha[0] * inv.alpha[1] * inv.alpha[2];
  for (int p = 0; p < 6; ++p) {
    const int i = detail::kPairs[p][0], j = detail::kPairs[p][1];
    inv.gamma[p] = r * (A(i, i) - A(j, i));
    const double den = A(i, i) * A(j, j) - A(i, j) * A(j, i);
    inv.beta_pairs[p] = (std::abs(den) < 1e-12)
                            ? std::numeric_limits<double>::quiet_NaN()
                            : r * (A(j, j) - A(i, j)) / den;
  }
  const auto w = [&](int i, int j) { return r * (1.0 - A(j, i) / A(i, i)); };
  inv.vartheta = w(0, 1) * w(1, 2) * w(2, 0) + w(1, 0) * w(0, 2) * w(2, 1);
  inv.detA = A.determinant();
  return inv;
}

struct ClassMatch {
  std::optional<std::array<int, 3>> sigma;
  // a relabeling matched the sign pattern but a beta_ij denominator was
  // within 1e-12 of zero, so conditions (ii)/(iii) could not be evaluated
  bool degenerate = false;
};

namespace detail {

inline bool gamma_pattern_26(const Mat3& B) {
  return B(0, 0) > B(1, 0) && B(0, 0) > B(2, 0) && B(1, 1) < B(0, 1) &&
         B(1, 1) < B(2, 1) && B(2, 2) > B(0, 2) && B(2, 2) < B(1, 2);
}
inline bool gamma_pattern_27(const Mat3& B) {
  return B(0, 0) > B(1, 0) && B(0, 0) < B(2, 0) && B(1, 1) < B(0, 1) &&
         B(1, 1) > B(2, 1) && B(2, 2) > B(0, 2) && B(2, 2) < B(1, 2);
}

}  // namespace detail

// gamma_ij = r (a_ii - a_ji) with r > 0, so the sign patterns reduce to
// entrywise comparisons of the permuted matrix:
//   gamma_12>0 <=> a11>a21, gamma_13>0 <=> a11>a31, gamma_21<0 <=> a22<a12,
//   gamma_23<0 <=> a22<a32, gamma_31>0 <=> a33>a13, gamma_32<0 <=> a33<a23
// (class 26), and analogously for class 27 with gamma_13<0, gamma_23>0.
inline ClassMatch is_class_26(const ModelSpec& s) {
  require_valid(s);
  const double r = s.b * s.phi - s.mu * (1.0 - s.phi);
  ClassMatch out;
  for (const auto& sig : detail::kPerms) {
    const Mat3 B = detail::permuted(s.A, sig);
    if (!detail::gamma_pattern_26(B)) continue;
    const double d23 = B(1, 1) * B(2, 2) - B(1, 2) * B(2, 1);
    const double d13 = B(0, 0) * B(2, 2) - B(0, 2) * B(2, 0);
    if (std::abs(d23) < 1e-12 || std::abs(d13) < 1e-12) {
      out.degenerate = true;
      continue;
    }
    const double b23 = r * (B(2, 2) - B(1, 2)) / d23;
    const double b32 = r * (B(1, 1) - B(2, 1)) / d23;
    const double b13 = r * (B(2, 2) - B(0, 2)) / d13;
    const double b31 = r * (B(0, 0) - B(2, 0)) / d13;
    if (B(0, 1) * b23 + B(0, 2) * b32 > r && B(1, 0) * b13 + B(1, 2) * b31 < r) {
      out.sigma = sig;
      return out;
    }
  }
  return out;
}

inline ClassMatch is_class_27(const ModelSpec& s) {
  require_valid(s);
  ClassMatch out;
  for (const auto& sig : detail::kPerms) {
    if (detail::gamma_pattern_27(detail::permuted(s.A, sig))) {
      out.sigma = sig;
      return out;
    }
  }
  return out;
}

enum class ClassLabel {
  NoPositiveFP,
  Classes19to25,
  Class26,
  Class27,
  Classes28to33,
  Unresolved
};

inline const char* class_label_name(ClassLabel c) {
  switch (c) {
    case ClassLabel::NoPositiveFP: return "NoPositiveFP";
    case ClassLabel::Classes19to25: return "Classes19to25";
    case ClassLabel::Class26: return "Class26";
    case ClassLabel::Class27: return "Class27";
    case ClassLabel::Classes28to33: return "Classes28to33";
    default: return "Unresolved";
  }
}

struct DynamicsVerdict {
  ClassLabel label = ClassLabel::Unresolved;
  char subcase = 0;  // 'a' (zeta<0), 'b' (zeta>0), 'c' (zeta=0) for 26/27
  InvariantBundle invariants;
  std::optional<std::array<int, 3>> sigma;
  bool has_positive_fp = false;
  std::string prediction;
};

inline DynamicsVerdict dynamics_verdict(const ModelSpec& s) {
  require_valid(s);
  DynamicsVerdict v;
  v.invariants = compute_invariants(s);
  const double ez = eps_zeta(s.A);
  const double zeta = v.invariants.zeta;

  const auto xhat = autonomous_positive_equilibrium(s.A, s.b);
  v.has_positive_fp = xhat.has_value();
  if (!xhat) {
    v.label = ClassLabel::NoPositiveFP;
    v.prediction = "no coexistence fixed point; every orbit converges to a boundary fixed point";
    return v;
  }
  if (v.invariants.detA < 0.0) {
    v.label = ClassLabel::Classes19to25;
    v.prediction = "unique positive FP, a saddle on Sigma_P; every orbit converges to some fixed point";
    return v;
  }

  const ClassMatch c26 = is_class_26(s);
  const ClassMatch c27 = is_class_27(s);
  if (c26.sigma) {
    v.label = ClassLabel::Class26;
    v.sigma = c26.sigma;
    if (std::abs(zeta) <= ez) {
      v.subcase = 'c';
      v.prediction = "continuum of invariant closed curves enclosed by a heteroclinic cycle";
    } else if (zeta < 0.0) {
      v.subcase = 'a';
      v.prediction = "bistable: positive FP and an axial point both attract on Sigma_P; every orbit converges to some fixed point";
    } else {
      v.subcase = 'b';
      v.prediction = "positive FP repels; an axial attractor absorbs the interior of Sigma_P except a saddle manifold";
    }
    return v;
  }
  if (c27.sigma) {
    v.label = ClassLabel::Class27;
    v.sigma = c27.sigma;
    if (std::abs(zeta) <= ez) {
      v.subcase = 'c';
      v.prediction = "continuum of invariant closed curves";
    } else if (zeta < 0.0) {
      v.subcase = 'a';
      v.prediction = "positive FP globally attracting in interior of Sigma_P";
    } else {
      v.subcase = 'b';
      v.prediction = "boundary heteroclinic cycle globally attracting in interior of Sigma_P except the positive FP";
    }
    return v;
  }
  if (c26.degenerate) {
    v.label = ClassLabel::Unresolved;
    v.prediction = "membership test indeterminate: a beta_ij denominator is within 1e-12 of zero";
    return v;
  }
  if (v.invariants.detA > 0.0 && std::abs(zeta) > ez) {
    v.label = ClassLabel::Classes28to33;
    v.subcase = 0;
    v.prediction = (zeta < 0.0)
                       ? "unique positive FP attracts on Sigma_P; every orbit converges to some fixed point"
                       : "unique positive FP repels on Sigma_P; every orbit converges to some fixed point";
    return v;
  }
  v.label = ClassLabel::Unresolved;
  v.prediction = "zeta is numerically zero outside classes 26/27; no prediction";
  return v;
}

}  // namespace slv
