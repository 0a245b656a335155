#pragma once

// Shared fixtures: the reference matrices used across the suite and the
// frozen high-precision constants they were checked against (independent
// 50-digit arithmetic, truncated to double).

#include <slv/model.hpp>
#include <slv/types.hpp>

#include <string>

namespace fixtures {

using slv::Mat3;
using slv::ModelSpec;
using slv::Vec3;

// cyclic competition matrix: a_ii = 1, a_12 = a_23 = a_31 = alpha,
// a_13 = a_21 = a_32 = beta
inline Mat3 cyclic(double alpha, double beta) {
  Mat3 A;
  A << 1.0, alpha, beta, beta, 1.0, alpha, alpha, beta, 1.0;
  return A;
}

// canonical seasonal parameters used by every fixture spec
inline ModelSpec spec_with(const Mat3& A) {
  return ModelSpec{A, 1.0, 0.5, 0.5, 1.0};
}

// frozen constants for (b=1, mu=0.5, phi=0.5, omega=1)
inline constexpr double kR = 0.25;
inline constexpr double kL = 0.77880078307140486825;
inline constexpr double kRhoStar = 0.56217650088579810403;
inline constexpr double kRhoHat = 0.25;
inline constexpr double kLRhoStar = 0.43782349911420189597;

// det A = -5.82, positive equilibrium (1/3)(1,1,1) (rows sum to 3)
inline Mat3 detneg() {
  Mat3 A;
  A << 2.5, 0.3, 0.2, 1.2, 0.1, 1.7, 0.6, 1.5, 0.9;
  return A;
}

// det A = 7.1675, zeta = +0.6525, matches the two-saddle sign pattern under
// the identity permutation
inline Mat3 class26() {
  Mat3 A;
  A << 2.85, 2.15, 0.25, 0.1, 0.2, 2.0, 2.45, 0.65, 1.25;
  return A;
}

inline std::string models_dir() { return SLV_MODELS_DIR; }

}  // namespace fixtures
