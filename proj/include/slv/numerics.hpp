#pragma once

// Small numeric utilities: adaptive Simpson quadrature, a matrix-exponential
// wrapper, and a minimum-norm linear solve used by the damped Newton steps.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <cmath>

#include "errors.hpp"
#include "types.hpp"

namespace slv {

// Pade scaling-and-squaring matrix exponential.
inline Mat3 expm(const Mat3& M) { return M.exp(); }

namespace detail {

template <class F>
double simpson_rec(F&& f, double a, double fa, double b, double fb, double m,
                   double fm, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0)
    throw NumericalError(errc::step_failure, "adaptive quadrature: depth exhausted");
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Adaptive Simpson rule on [a, b] with absolute tolerance tol.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol = 1e-10) {
  if (a == b) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fb = f(b), fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, 48);
}

// Minimum-norm solution of J dx = rhs via SVD with relative rank threshold.
// Tolerant of (near-)singular J; used for Newton steps where DP - I can be
// rank deficient along a curve of fixed points.
inline Eigen::VectorXd minimum_norm_solve(const Eigen::MatrixXd& J,
                                          const Eigen::VectorXd& rhs,
                                          double threshold = 1e-10) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(threshold);
  return svd.solve(rhs);
}

}  // namespace slv
