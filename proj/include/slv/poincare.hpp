#pragma once

// The season-to-season return map and its conjugacy with the autonomous
// flow. One application of the map is the exact bad-season decay x -> l x
// followed by the good-season flow over phi omega:
//
//   P(x) = Phi_{phi omega}(l x),      DP(x) = D Phi_{phi omega}(l x) * l.
//
// Because growth and death rates are equal across species, P is conjugate
// to the autonomous time-rho_hat map:  P^k(x) = rho* Phi(k rho_hat, x/rho*).
// conjugacy_residual measures how well the implementation honors this.
//
// iterate() also classifies the long-run fate of an orbit:
//   ConvergedTo       confirmed convergence to a (polished) fixed point
//   NearBoundaryCycle the orbit hugs the boundary heteroclinic cycle
//   OnInvariantCurve  the tail fits a smooth closed curve
//   Undecided         anything else (by design this includes near-resonant
//                     orbits clustering on q points, which cover no curve)

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "flow.hpp"
#include "model.hpp"
#include "numerics.hpp"
#include "types.hpp"

namespace slv {

inline Vec3 poincare_map(const ModelSpec& s, const Vec3& x,
                         double tol = tolerances::integrator) {
  require_valid(s);
  require_nonnegative(x);
  const DerivedConstants c = derive_constants(s);
  return flow_autonomous(s.A, s.b, c.l * x, s.phi * s.omega, tol).state;
}

// Returns {P(x), DP(x)}.
inline std::pair<Vec3, Mat3> poincare_jacobian(const ModelSpec& s, const Vec3& x,
                                               double tol = tolerances::integrator) {
  require_valid(s);
  require_nonnegative(x);
  const DerivedConstants c = derive_constants(s);
  const FlowResult fr = flow_autonomous(s.A, s.b, c.l * x, s.phi * s.omega, tol, true);
  return {fr.state, Mat3(*fr.jacobian * c.l)};
}

// || P^k(x) - rho* Phi(k rho_hat, x / rho*) ||. The left side composes k
// yearly maps; the right side is one long autonomous integration, so the two
// routes share no intermediate states.
inline double conjugacy_residual(const ModelSpec& s, const Vec3& x, int k,
                                 double tol = tolerances::integrator) {
  require_valid(s);
  require_nonnegative(x);
  if (k < 0) throw ValidationError(errc::precondition_failed, "k must be >= 0");
  const DerivedConstants c = derive_constants(s);
  Vec3 lhs = x;
  for (int i = 0; i < k; ++i) lhs = poincare_map(s, lhs, tol);
  const Vec3 rhs =
      c.rho_star *
      flow_autonomous(s.A, s.b, x / c.rho_star, k * c.rho_hat, tol).state;
  return (lhs - rhs).norm();
}

enum class FateKind { ConvergedTo, NearBoundaryCycle, OnInvariantCurve, Undecided };

inline const char* fate_name(FateKind f) {
  switch (f) {
    case FateKind::ConvergedTo: return "ConvergedTo";
    case FateKind::NearBoundaryCycle: return "NearBoundaryCycle";
    case FateKind::OnInvariantCurve: return "OnInvariantCurve";
    default: return "Undecided";
  }
}

struct Fate {
  FateKind kind = FateKind::Undecided;
  std::optional<Vec3> limit;  // present for ConvergedTo
  int iterations = 0;
  // true if min coordinate < 1e-3 while ||x|| > 0.05 was ever observed;
  // recorded independently of the final kind.
  bool boundary_flag = false;
};

struct OrbitTrace {
  std::vector<Vec3> points;  // points[0] = x0; size k+1 unless stopped early
  int k = 0;
  Fate fate;
};

namespace detail {

// Verify that a candidate limit is a genuine non-expanding fixed point.
// Small steps alone are ambiguous: an orbit creeping past a boundary saddle
// also moves by < 1e-9 per iterate. Polishing with Newton and checking the
// spectrum rejects saddles while accepting attractors and points on curves
// of fixed points (where DP - I is singular, hence the min-norm solve).
inline std::optional<Vec3> confirm_limit(const ModelSpec& s, const Vec3& x, double tol) {
  Vec3 z = x;
  Mat3 dp;
  for (int it = 0; it < 10; ++it) {
    auto [pz, J] = poincare_jacobian(s, z, tol);
    dp = J;
    const Vec3 F = pz - z;
    if (!F.allFinite()) return std::nullopt;
    if (F.norm() <= 1e-13) break;
    const Eigen::VectorXd dz = minimum_norm_solve(J - Mat3::Identity(), (-F).eval(), 1e-8);
    if (dz.norm() > 0.05) return std::nullopt;
    z = clamp_negatives(z + Vec3(dz));
    if ((z.array() < 0.0).any()) return std::nullopt;
    if (dz.norm() < 1e-14) break;
  }
  if ((poincare_map(s, z, tol) - z).norm() > tolerances::converged_step) return std::nullopt;
  if ((z - x).norm() > 0.02) return std::nullopt;
  const Eigen::EigenSolver<Mat3> es(dp);
  for (int i = 0; i < 3; ++i)
    if (std::abs(es.eigenvalues()[i]) > 1.0 + 1e-6) return std::nullopt;
  return z;
}

struct CurveFit {
  bool ok = false;
  double max_residual = std::numeric_limits<double>::infinity();
};

// Fit the orbit tail to a closed curve: PCA plane through the last
// fit_window points, then a trigonometric least-squares model for radius
// and height as functions of the polar angle. The fit uses a long tail (to
// cover slow rotations) but the residual is judged on the last check_window
// iterates only.
inline CurveFit fit_invariant_curve(const std::vector<Vec3>& pts, int fit_window,
                                    int check_window) {
  CurveFit out;
  const int n = static_cast<int>(pts.size());
  const int m = std::min(fit_window, n);
  if (m < 40) return out;
  const int first = n - m;

  Vec3 c = Vec3::Zero();
  for (int i = first; i < n; ++i) c += pts[i];
  c /= m;
  Mat3 cov = Mat3::Zero();
  for (int i = first; i < n; ++i) {
    const Vec3 d = pts[i] - c;
    cov += d * d.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  const Vec3 e1 = es.eigenvectors().col(2);  // largest variance
  const Vec3 e2 = es.eigenvectors().col(1);
  const Vec3 e3 = es.eigenvectors().col(0);

  std::vector<double> th(m), rad(m), ht(m);
  double mean_rad = 0.0;
  for (int i = 0; i < m; ++i) {
    const Vec3 d = pts[first + i] - c;
    const double u = d.dot(e1), v = d.dot(e2);
    th[i] = std::atan2(v, u);
    rad[i] = std::hypot(u, v);
    ht[i] = d.dot(e3);
    mean_rad += rad[i];
  }
  mean_rad /= m;
  if (mean_rad < 20.0 * tolerances::curve_fit) return out;  // degenerate loop

  // angular coverage: the largest gap between consecutive angles must be small
  std::vector<double> sorted = th;
  std::sort(sorted.begin(), sorted.end());
  double gap = 2.0 * M_PI - (sorted.back() - sorted.front());
  for (int i = 1; i < m; ++i) gap = std::max(gap, sorted[i] - sorted[i - 1]);
  if (gap > 1.0) return out;

  const int deg = (m >= 150) ? 6 : 4;
  Eigen::MatrixXd X(m, 2 * deg + 1);
  Eigen::MatrixXd Y(m, 2);
  for (int i = 0; i < m; ++i) {
    X(i, 0) = 1.0;
    for (int j = 1; j <= deg; ++j) {
      X(i, 2 * j - 1) = std::cos(j * th[i]);
      X(i, 2 * j) = std::sin(j * th[i]);
    }
    Y(i, 0) = rad[i];
    Y(i, 1) = ht[i];
  }
  const Eigen::MatrixXd coef = X.colPivHouseholderQr().solve(Y);
  const Eigen::MatrixXd fitted = X * coef;

  double worst = 0.0;
  const int cw = std::min(check_window, m);
  for (int i = m - cw; i < m; ++i)
    worst = std::max(worst, std::hypot(rad[i] - fitted(i, 0), ht[i] - fitted(i, 1)));
  out.max_residual = worst;
  out.ok = worst < tolerances::curve_fit;
  return out;
}

}  // namespace detail

inline OrbitTrace iterate(const ModelSpec& s, const Vec3& x0, int k,
                          double tol = tolerances::integrator) {
  require_valid(s);
  require_nonnegative(x0);
  if (k < 0) throw ValidationError(errc::precondition_failed, "k must be >= 0");

  OrbitTrace tr;
  tr.points.reserve(static_cast<size_t>(k) + 1);
  tr.points.push_back(x0);
  Vec3 x = x0;
  int small_run = 0, cooldown = 0;

  for (int i = 1; i <= k; ++i) {
    const Vec3 xn = poincare_map(s, x, tol);
    tr.points.push_back(xn);
    const double step = (xn - x).norm();
    x = xn;
    if (x.minCoeff() < tolerances::boundary_min_coord &&
        x.norm() > tolerances::boundary_min_norm)
      tr.fate.boundary_flag = true;
    if (cooldown > 0) --cooldown;
    if (step < tolerances::converged_step && cooldown == 0) {
      if (++small_run >= 4) {
        if (const auto limit = detail::confirm_limit(s, x, tol)) {
          tr.fate.kind = FateKind::ConvergedTo;
          tr.fate.limit = *limit;
          tr.fate.iterations = i;
          tr.k = i;
          return tr;
        }
        small_run = 0;
        cooldown = 250;  // saddle passage: do not re-test until well past it
      }
    } else if (step >= tolerances::converged_step) {
      small_run = 0;
    }
  }

  tr.k = k;
  tr.fate.iterations = k;
  const auto cf = detail::fit_invariant_curve(tr.points, tolerances::curve_fit_window,
                                              tolerances::curve_check_window);
  if (cf.ok) {
    tr.fate.kind = FateKind::OnInvariantCurve;
    return tr;
  }
  const int mm = std::min<int>(100, static_cast<int>(tr.points.size()));
  int near = 0;
  for (int i = static_cast<int>(tr.points.size()) - mm;
       i < static_cast<int>(tr.points.size()); ++i) {
    const Vec3& p = tr.points[i];
    if (p.minCoeff() < tolerances::boundary_min_coord &&
        p.norm() > tolerances::boundary_min_norm)
      ++near;
  }
  const bool final_near = x.minCoeff() < tolerances::boundary_min_coord &&
                          x.norm() > tolerances::boundary_min_norm;
  tr.fate.kind = (2 * near >= mm || final_near) ? FateKind::NearBoundaryCycle
                                                : FateKind::Undecided;
  return tr;
}

}  // namespace slv
