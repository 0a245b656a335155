#pragma once

#include <Eigen/Dense>

namespace slv {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Numerical thresholds shared across modules. Keeping them in one place
// guarantees that e.g. the orbit fate detector and the portrait sampler
// agree on what "converged" means.
namespace tolerances {
inline constexpr double integrator = 1e-10;       // default abs/rel ODE tolerance
inline constexpr double fp_residual = 1e-9;       // fixed-point acceptance ||P(x)-x||
inline constexpr double converged_step = 1e-9;    // fate: ConvergedTo
inline constexpr double boundary_min_coord = 1e-3;  // fate: NearBoundaryCycle
inline constexpr double boundary_min_norm = 0.05;
inline constexpr double curve_fit = 1e-4;         // fate: OnInvariantCurve residual
inline constexpr int curve_check_window = 50;     // iterates that must sit on the fitted curve
inline constexpr int curve_fit_window = 240;      // iterates used to fit the curve
inline constexpr double eta_eps = 1e-6;           // rotation-number rationality test
inline constexpr int q_max = 64;                  // largest denominator tried for eta
inline constexpr double bracket_target = 1e-4;    // simplex per-ray width target
inline constexpr double newton_step = 1e-12;      // Newton convergence ||dx||
inline constexpr int newton_max_iter = 50;
}  // namespace tolerances

inline double inf_norm(const Mat3& A) { return A.cwiseAbs().rowwise().sum().maxCoeff(); }

// Scale-aware degeneracy thresholds for the interaction matrix.
inline double eps_det(const Mat3& A) {
  const double n = inf_norm(A);
  return 1e-9 * n * n * n;
}
inline double eps_zeta(const Mat3& A) {
  const double n = inf_norm(A);
  return 1e-10 * n * n * n;
}

}  // namespace slv
