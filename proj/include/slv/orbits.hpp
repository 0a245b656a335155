#pragma once

// Closed orbits of the autonomous flow and the resonance construction.
//
// When zeta = 0 the interior of the autonomous carrying simplex is foliated
// by closed orbits. Scaled by rho*, each such orbit Gamma becomes an
// invariant curve of the return map, on which P acts as the time-rho_hat
// flow; the rotation number is eta = rho_hat / T_Gamma. Rational eta with
// small denominator q gives q-periodic points (eta integer: a curve of
// fixed points); otherwise orbits fill the curve densely.
//
// construct_multiplicity exploits this: given a zero-zeta matrix it finds a
// closed orbit, then sets omega* = (b/r) T_Gamma so that rho_hat = T_Gamma
// exactly and rho* Gamma becomes a continuum of fixed points of P.
//
// find_periodic_orbit locates the closed orbit through a seed: settle the
// transient, collect one-sided crossings of a section through the interior
// equilibrium, then refine (point, period) by a damped Gauss-Newton shooting
// iteration. The Jacobian column for the period is the vector field at the
// return point; the section-plane columns use the variational flow. Failure
// modes are honest: no section return -> no_return, returns that drift or a
// collapse onto the equilibrium (the zeta != 0 case) -> not_closed.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "classify.hpp"
#include "fixedpoints.hpp"
#include "flow.hpp"
#include "model.hpp"
#include "numerics.hpp"
#include "poincare.hpp"
#include "types.hpp"

namespace slv {

struct SectionRecord {
  Vec3 anchor = Vec3::Zero();
  Vec3 normal = Vec3::Zero();
};

struct PeriodicOrbit {
  std::vector<Vec3> points;  // sampled at equal time steps T_gamma / n
  double T_gamma = 0.0;
  SectionRecord section;
  double residual = 0.0;  // || Phi_{T_gamma}(points[0]) - points[0] ||
};

enum class CurveKind { FixedCurve, PeriodicOrbits, DenseOrbits, Indeterminate };

inline const char* curve_kind_name(CurveKind k) {
  switch (k) {
    case CurveKind::FixedCurve: return "FixedCurve";
    case CurveKind::PeriodicOrbits: return "PeriodicOrbits";
    case CurveKind::DenseOrbits: return "DenseOrbits";
    default: return "Indeterminate";
  }
}

struct CurveClass {
  double eta = 0.0;
  CurveKind kind = CurveKind::Indeterminate;
  int q = 0;          // denominator for PeriodicOrbits (1 for FixedCurve)
  double evidence = 0.0;  // |q eta - round(q eta)| for the verdict
};

namespace detail {

struct Shooting {
  Vec3 p;
  double T;
  bool ok = false;
};

inline Shooting refine_orbit(const Mat3& A, double b, Vec3 p, double T,
                             const Vec3& e1, const Vec3& e2, double t_ref,
                             double t_max, double tol) {
  Shooting sh{p, T, false};
  for (int it = 0; it < 30; ++it) {
    const FlowResult fr = flow_autonomous(A, b, sh.p, sh.T, tol, true);
    const Vec3 F = fr.state - sh.p;
    const double fn = F.norm();
    if (fn < 1e-11 * (1.0 + sh.p.norm())) {
      sh.ok = true;
      return sh;
    }
    const Mat3 WI = *fr.jacobian - Mat3::Identity();
    Mat3 J;
    J.col(0) = WI * e1;
    J.col(1) = WI * e2;
    J.col(2) = lv_vector_field(A, b, fr.state);
    const Eigen::VectorXd d = minimum_norm_solve(J, (-F).eval(), 1e-9);
    // a negligible correction means the residual sits at the integrator
    // noise floor and cannot be reduced further
    if (d.norm() < 1e-8 * (1.0 + sh.p.norm() + std::abs(sh.T))) {
      sh.ok = fn < 100.0 * tol * (1.0 + sh.p.norm());
      return sh;
    }
    bool moved = false;
    for (double lam = 1.0; lam >= 1.0 / 64.0; lam *= 0.5) {
      const Vec3 p_try = sh.p + lam * (d[0] * e1 + d[1] * e2);
      const double T_try = sh.T + lam * d[2];
      if (!(T_try > 0.1 * t_ref) || T_try > 3.0 * t_max || !(p_try.array() > 0.0).all())
        continue;
      const double fn_try =
          (flow_autonomous(A, b, p_try, T_try, tol).state - p_try).norm();
      if (fn_try <= (1.0 - 0.25 * lam) * fn || fn_try < 1e-11) {
        sh.p = p_try;
        sh.T = T_try;
        moved = true;
        break;
      }
    }
    if (!moved) {
      sh.ok = fn < 100.0 * tol * (1.0 + sh.p.norm());
      return sh;
    }
  }
  sh.ok = (flow_autonomous(A, b, sh.p, sh.T, tol).state - sh.p).norm() <
          100.0 * tol * (1.0 + sh.p.norm());
  return sh;
}

}  // namespace detail

inline PeriodicOrbit find_periodic_orbit(const Mat3& A, double b, const Vec3& seed,
                                         double tol = tolerances::integrator,
                                         int n_points = 512) {
  if (!(b > 0.0))
    throw ValidationError(errc::precondition_failed, "b must be > 0");
  if (std::abs(A.determinant()) <= eps_det(A))
    throw ValidationError(errc::degenerate_matrix,
                          "interaction matrix is numerically singular");
  const auto xh = autonomous_positive_equilibrium(A, b);
  if (!xh)
    throw ValidationError(errc::precondition_failed,
                          "no positive equilibrium: no interior closed orbits");
  const Vec3 xhat = *xh;
  if (!(seed.array() > 0.0).all())
    throw ValidationError(errc::precondition_failed, "seed must be strictly positive");
  if ((seed - xhat).norm() < 1e-6)
    throw ValidationError(errc::precondition_failed,
                          "seed coincides with the equilibrium");
  if (n_points < 16)
    throw ValidationError(errc::precondition_failed, "n_points must be >= 16");

  // settle the fast radial transient onto the carrying simplex
  const Vec3 p0 = flow_autonomous(A, b, seed, 50.0 / b, tol).state;

  double nu = 0.0;
  {
    const Eigen::EigenSolver<Mat3> es(lv_jacobian(A, b, xhat));
    for (int i = 0; i < 3; ++i)
      nu = std::max(nu, std::abs(es.eigenvalues()[i].imag()));
  }
  const double t_ref = (nu > 1e-9) ? 2.0 * M_PI / nu : 6.0 * M_PI / b;
  const double t_max = 40.0 * t_ref;

  SectionRecord sec;
  sec.anchor = xhat;
  const Vec3 f0 = lv_vector_field(A, b, p0);
  if (f0.norm() < 1e-12)
    throw NumericalError(errc::no_return, "seed settled onto an equilibrium");
  sec.normal = f0.normalized();
  const auto sval = [&](const Vec3& x) { return sec.normal.dot(x - sec.anchor); };

  // one-sided (negative to positive) crossings of the section
  const double dt = t_ref / 64.0;
  std::vector<Vec3> cx;
  std::vector<double> ct;
  {
    Vec3 x = p0;
    double t = 0.0, s_prev = sval(x);
    while (t < t_max && cx.size() < 200) {
      const Vec3 xn = flow_autonomous(A, b, x, dt, tol).state;
      const double s_cur = sval(xn);
      if (s_prev < 0.0 && s_cur >= 0.0) {
        double lo = 0.0, hi = dt;
        Vec3 xc = xn;
        for (int it = 0; it < 80 && hi - lo > 1e-14 * t_ref; ++it) {
          const double mid = 0.5 * (lo + hi);
          const Vec3 xm = flow_autonomous(A, b, x, mid, tol).state;
          if (sval(xm) < 0.0) {
            lo = mid;
          } else {
            hi = mid;
            xc = xm;
          }
        }
        cx.push_back(xc);
        ct.push_back(t + hi);
      }
      x = xn;
      s_prev = s_cur;
      t += dt;
    }
  }
  if (cx.size() < 2)
    throw NumericalError(errc::no_return, "orbit does not return to the section");

  const Vec3 z0 = cx[0];
  const double amp = std::max((z0 - xhat).norm(), 1e-12);
  int jstar = -1;
  for (size_t j = 1; j < cx.size(); ++j)
    if ((cx[j] - z0).norm() <= 0.3 * amp) {
      jstar = static_cast<int>(j);
      break;
    }
  if (jstar < 0)
    throw NumericalError(errc::not_closed,
                         "section returns drift: no closed orbit through this seed");

  const Vec3 e1 = sec.normal.unitOrthogonal();
  const Vec3 e2 = sec.normal.cross(e1);

  detail::Shooting sh =
      detail::refine_orbit(A, b, z0, ct[jstar] - ct[0], e1, e2, t_ref, t_max, tol);
  if (!sh.ok)
    throw NumericalError(errc::not_closed, "shooting iteration did not close the orbit");
  if ((sh.p - xhat).norm() < 1e-4 * (1.0 + xhat.norm()))
    throw NumericalError(errc::not_closed,
                         "candidate collapsed onto the equilibrium: no closed orbit");

  // sample; detect a non-minimal period (interior near-return) and fold once
  const auto sample = [&](const Vec3& start, double period) {
    std::vector<Vec3> pts;
    pts.reserve(n_points);
    Vec3 x = start;
    const double step = period / n_points;
    for (int i = 0; i < n_points; ++i) {
      pts.push_back(x);
      x = flow_autonomous(A, b, x, step, tol).state;
    }
    return std::make_pair(pts, (x - start).norm());
  };

  for (int attempt = 0; attempt < 2; ++attempt) {
    auto [pts, closure] = sample(sh.p, sh.T);
    double scale = 0.0;
    for (const Vec3& q : pts) scale = std::max(scale, (q - xhat).norm());
    int fold = -1;
    for (int i = 1; i < n_points; ++i) {
      const double ti = sh.T * i / n_points;
      if (ti <= 1e-3 * sh.T || ti >= sh.T * (1.0 - 1e-3)) continue;
      if ((pts[i] - sh.p).norm() < 1e-3 * scale) {
        fold = i;
        break;
      }
    }
    if (fold < 0) {
      for (const Vec3& q : pts)
        if (!(q.array() > 0.0).all())
          throw NumericalError(errc::not_closed, "orbit left the open octant");
      if (closure > std::max(1e-7, 1e3 * tol) * (1.0 + sh.p.norm()))
        throw NumericalError(errc::not_closed,
                             "sampled orbit fails the closure bound");
      PeriodicOrbit orb;
      orb.points = std::move(pts);
      orb.T_gamma = sh.T;
      orb.section = sec;
      orb.residual = closure;
      return orb;
    }
    sh = detail::refine_orbit(A, b, sh.p, sh.T * fold / n_points, e1, e2, t_ref,
                              t_max, tol);
    if (!sh.ok)
      throw NumericalError(errc::not_closed,
                           "period fold did not re-close the orbit");
  }
  throw NumericalError(errc::not_closed, "orbit period is not minimal");
}

// Rotation number of P on the invariant curve rho* Gamma and its arithmetic
// type. eta is matched against rationals m/q with q <= 64 to a tolerance of
// 1e-6; "DenseOrbits" is numerical evidence, not proof.
inline CurveClass classify_curve(const ModelSpec& s, double T_gamma) {
  require_valid(s);
  CurveClass cc;
  if (!(T_gamma > 0.0) || !std::isfinite(T_gamma)) return cc;  // Indeterminate
  const DerivedConstants c = derive_constants(s);
  cc.eta = c.rho_hat / T_gamma;
  double best = std::numeric_limits<double>::infinity();
  for (int q = 1; q <= tolerances::q_max; ++q) {
    const double qe = q * cc.eta;
    const double m = std::round(qe);
    if (m < 1.0) continue;
    const double err = std::abs(qe - m);
    if (err <= tolerances::eta_eps) {
      cc.q = q;
      cc.kind = (q == 1) ? CurveKind::FixedCurve : CurveKind::PeriodicOrbits;
      cc.evidence = err;
      return cc;
    }
    best = std::min(best, err);
  }
  cc.kind = CurveKind::DenseOrbits;
  cc.evidence = best;
  return cc;
}

struct MultiplicityResult {
  ModelSpec spec;  // the input parameters with omega = omega*
  PeriodicOrbit orbit;
  double omega_star = 0.0;
};

// Tune omega so rho_hat equals the period of the closed orbit through the
// seed, making every point of rho* Gamma a fixed point of P.
inline MultiplicityResult construct_multiplicity(const Mat3& A, double b, double mu,
                                                 double phi, const Vec3& seed,
                                                 double tol = tolerances::integrator) {
  const double r = b * phi - mu * (1.0 - phi);
  if (!(r > 0.0))
    throw ValidationError(errc::r_invalid,
                          "mean growth rate r = b phi - mu (1-phi) must be > 0");
  const ModelSpec probe{A, b, mu, phi, 1.0};
  const InvariantBundle inv = compute_invariants(probe);
  if (std::abs(inv.zeta) > eps_zeta(A))
    throw ValidationError(errc::precondition_failed,
                          "zeta must vanish for a continuum of closed orbits");
  if (!(inv.detA > 0.0))
    throw ValidationError(errc::precondition_failed, "det A must be positive");
  if (!autonomous_positive_equilibrium(A, b))
    throw ValidationError(errc::precondition_failed, "no positive equilibrium");

  MultiplicityResult out;
  out.orbit = find_periodic_orbit(A, b, seed, tol);
  out.omega_star = (b / r) * out.orbit.T_gamma;
  out.spec = ModelSpec{A, b, mu, phi, out.omega_star};
  require_valid(out.spec);
  return out;
}

// Worst ||P(rho* x) - rho* x|| over n points sampled evenly from the orbit.
inline double verify_fixed_curve(const ModelSpec& s, const PeriodicOrbit& orb, int n,
                                 double tol = tolerances::integrator) {
  require_valid(s);
  if (n < 1 || orb.points.empty())
    throw ValidationError(errc::precondition_failed, "need n >= 1 and a sampled orbit");
  const DerivedConstants c = derive_constants(s);
  const int m = static_cast<int>(orb.points.size());
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vec3 x = c.rho_star * orb.points[static_cast<size_t>(i) * m / n];
    worst = std::max(worst, (poincare_map(s, x, tol) - x).norm());
  }
  return worst;
}

}  // namespace slv
