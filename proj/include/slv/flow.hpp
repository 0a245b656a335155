#pragma once

// The autonomous competition flow, its variational equations, and the
// piecewise seasonal solution.
//
//   good season:  dx_i/dt = x_i (b - (A x)_i)
//   bad season:   dx/dt   = -mu x   (integrated exactly)
//   variational:  dW/dt   = Df(x(t)) W,  W(0) = I
//
// The positive octant and each coordinate plane are invariant; the
// integrator may produce coordinates a hair below zero, which are clamped
// back to the invariant boundary (band 1e-12).

#include <Eigen/Dense>
#include <cmath>
#include <optional>

#include "errors.hpp"
#include "integrate.hpp"
#include "model.hpp"
#include "types.hpp"

namespace slv {

inline Vec3 lv_vector_field(const Mat3& A, double b, const Vec3& x) {
  return x.cwiseProduct(Vec3::Constant(b) - A * x);
}

inline Mat3 lv_jacobian(const Mat3& A, double b, const Vec3& x) {
  const Vec3 g = Vec3::Constant(b) - A * x;
  Mat3 J;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) J(i, j) = -x[i] * A(i, j) + (i == j ? g[i] : 0.0);
  return J;
}

struct FlowResult {
  Vec3 state;
  std::optional<Mat3> jacobian;  // dPhi_t/dx0, present when requested
  double t = 0.0;
};

inline Vec3 clamp_negatives(Vec3 x) {
  for (int i = 0; i < 3; ++i)
    if (x[i] < 0.0 && x[i] > -1e-12) x[i] = 0.0;
  return x;
}

inline void require_nonnegative(const Vec3& x) {
  if ((x.array() < 0.0).any())
    throw ValidationError(errc::precondition_failed, "state must be componentwise >= 0");
}

inline FlowResult flow_autonomous(const Mat3& A, double b, const Vec3& x0, double t,
                                  double tol = tolerances::integrator,
                                  bool with_variational = false) {
  require_nonnegative(x0);
  if (!with_variational) {
    Dopri5<3> ode(tol);
    const Vec3 y =
        ode.solve([&](const Vec3& x) { return lv_vector_field(A, b, x); }, x0, t);
    return {clamp_negatives(y), std::nullopt, t};
  }
  using V12 = Eigen::Matrix<double, 12, 1>;
  V12 y0;
  y0.head<3>() = x0;
  Eigen::Map<Mat3>(y0.data() + 3) = Mat3::Identity();
  // state slots: pure relative; variational slots start at non-invariant
  // zeros and need an absolute floor
  V12 atol = V12::Constant(tol);
  atol.head<3>().setConstant(tol * 1e-20);
  Dopri5<12> ode(atol, tol);
  const V12 out = ode.solve(
      [&](const V12& s) {
        const Vec3 x = s.head<3>();
        const Eigen::Map<const Mat3> W(s.data() + 3);
        V12 d;
        d.head<3>() = lv_vector_field(A, b, x);
        Eigen::Map<Mat3>(d.data() + 3) = lv_jacobian(A, b, x) * W;
        return d;
      },
      y0, t);
  return {clamp_negatives(out.head<3>()), Mat3(Eigen::Map<const Mat3>(out.data() + 3)), t};
}

// Solution of the full seasonal system at absolute time t from x at time 0.
// Each year is the exact bad-season decay x -> l x followed by the good
// season; full years are marched one at a time so long horizons accumulate
// no phase error.
inline Vec3 seasonal_solution(const ModelSpec& s, Vec3 x, double t,
                              double tol = tolerances::integrator) {
  require_valid(s);
  require_nonnegative(x);
  if (t < 0.0)
    throw ValidationError(errc::precondition_failed, "time must be >= 0");

  const double bad = (1.0 - s.phi) * s.omega;
  const double l = std::exp(-s.mu * bad);
  long full = static_cast<long>(std::floor(t / s.omega));
  double rem = t - static_cast<double>(full) * s.omega;
  if (rem < 0.0) {  // guard against floor/rounding disagreement
    rem += s.omega;
    --full;
  }
  for (long k = 0; k < full; ++k)
    x = flow_autonomous(s.A, s.b, l * x, s.phi * s.omega, tol).state;
  if (rem > 0.0) {
    if (rem <= bad)
      x *= std::exp(-s.mu * rem);
    else
      x = flow_autonomous(s.A, s.b, l * x, rem - bad, tol).state;
  }
  return x;
}

}  // namespace slv
