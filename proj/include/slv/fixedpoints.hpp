#pragma once

// Fixed points of the return map and their linearization.
//
// Every fixed point is rho* times an equilibrium of the autonomous flow, and
// at such a point DP = exp(Df(x/rho*) rho_hat). Consequences used here:
//   - e^{-b rho_hat} is always an eigenvalue of DP at a nontrivial fixed
//     point, with eigenvector parallel to the point itself (the radial
//     direction off the carrying simplex);
//   - at the origin DP = e^{r omega} I;
//   - the fixed point index is the parity of the number of multipliers
//     outside the unit circle (DP is a real matrix exponential, so no
//     multiplier is negative real).
// Stability is reported on the carrying simplex for nontrivial points (the
// radial multiplier is dropped); the origin is classified in full space.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "numerics.hpp"
#include "poincare.hpp"

namespace slv {

enum class FpKind { Origin = 0, Axial = 1, Planar = 2, Positive = 3 };
enum class Stability { Attractor, Repeller, Saddle, Nonhyperbolic };

inline const char* kind_name(FpKind k) {
  switch (k) {
    case FpKind::Origin: return "Origin";
    case FpKind::Axial: return "Axial";
    case FpKind::Planar: return "Planar";
    default: return "Positive";
  }
}
inline const char* stability_name(Stability s) {
  switch (s) {
    case Stability::Attractor: return "Attractor";
    case Stability::Repeller: return "Repeller";
    case Stability::Saddle: return "Saddle";
    default: return "Nonhyperbolic";
  }
}

struct FixedPointRecord {
  Vec3 location = Vec3::Zero();
  FpKind kind = FpKind::Origin;
  int which = -1;  // Axial: the nonzero axis; Planar: the zero coordinate
  std::array<std::complex<double>, 3> eigenvalues{};  // modulus-ascending
  int index = 0;
  Stability stability = Stability::Nonhyperbolic;
  bool nonhyperbolic_warning = false;
  double residual = 0.0;  // ||P(location) - location||
};

struct FixedPointCensus {
  std::vector<FixedPointRecord> records;
  std::vector<std::string> warnings;
};

// Solves A x = b 1; returns the solution only if strictly positive.
inline std::optional<Vec3> autonomous_positive_equilibrium(const Mat3& A, double b) {
  if (std::abs(A.determinant()) <= eps_det(A))
    throw ValidationError(errc::degenerate_matrix,
                          "interaction matrix is numerically singular");
  const Vec3 x = A.fullPivLu().solve(Vec3::Constant(b));
  if ((x.array() > 0.0).all()) return x;
  return std::nullopt;
}

namespace detail {

constexpr double kUnitCircleBand = 1e-7;

// Fill eigen data, index, and stability for a point already known to be
// fixed to within tolerances::fp_residual.
inline void analyze_record(const ModelSpec& s, FixedPointRecord& rec, double tol) {
  const DerivedConstants c = derive_constants(s);
  const auto [px, dp] = poincare_jacobian(s, rec.location, tol);
  rec.residual = (px - rec.location).norm();

  const Eigen::EigenSolver<Mat3> es(dp);
  std::array<std::complex<double>, 3> ev{es.eigenvalues()[0], es.eigenvalues()[1],
                                         es.eigenvalues()[2]};
  std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) {
    return std::abs(a) < std::abs(b);
  });
  rec.eigenvalues = ev;

  int outside = 0;
  rec.nonhyperbolic_warning = false;
  for (const auto& l : ev) {
    const double m = std::abs(l);
    if (m > 1.0) ++outside;
    if (std::abs(m - 1.0) < kUnitCircleBand) rec.nonhyperbolic_warning = true;
  }
  rec.index = (outside % 2 == 0) ? +1 : -1;

  if (rec.kind == FpKind::Origin) {
    // DP(0) = e^{r omega} I: repeller in full space
    rec.stability = Stability::Repeller;
    return;
  }
  // drop the radial multiplier e^{-b rho_hat}
  const double radial = std::exp(-s.b * c.rho_hat);
  int drop = 0;
  double best = std::abs(ev[0] - radial);
  for (int i = 1; i < 3; ++i) {
    const double d = std::abs(ev[i] - radial);
    if (d < best) {
      best = d;
      drop = i;
    }
  }
  bool any_band = false, all_in = true, all_out = true;
  for (int i = 0; i < 3; ++i) {
    if (i == drop) continue;
    const double m = std::abs(ev[i]);
    if (std::abs(m - 1.0) < kUnitCircleBand) any_band = true;
    if (m >= 1.0) all_in = false;
    if (m <= 1.0) all_out = false;
  }
  rec.stability = any_band ? Stability::Nonhyperbolic
                  : all_in ? Stability::Attractor
                  : all_out ? Stability::Repeller
                            : Stability::Saddle;
}

inline FixedPointRecord make_record(const ModelSpec& s, const Vec3& loc, FpKind kind,
                                    int which, double tol) {
  FixedPointRecord rec;
  rec.location = loc;
  rec.kind = kind;
  rec.which = which;
  const double res = (poincare_map(s, loc, tol) - loc).norm();
  if (res > 1e-8)
    throw ValidationError(errc::precondition_failed,
                          "point is not fixed to within 1e-8 (residual " +
                              std::to_string(res) + ")");
  analyze_record(s, rec, tol);
  return rec;
}

// Damped Newton for P(x) = x with a minimum-norm step (DP - I may be
// singular across a curve of fixed points). Returns nullopt on divergence.
inline std::optional<Vec3> newton_fixed_point(const ModelSpec& s, Vec3 z, double tol) {
  double fn_prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < tolerances::newton_max_iter; ++it) {
    const auto [pz, J] = poincare_jacobian(s, z, tol);
    const Vec3 F = pz - z;
    if (!F.allFinite()) return std::nullopt;
    const double fn = F.norm();
    if (fn > 10.0 * fn_prev + 1.0) return std::nullopt;
    fn_prev = fn;
    Eigen::VectorXd dz = minimum_norm_solve(J - Mat3::Identity(), (-F).eval(), 1e-9);
    double lam = 1.0;
    Vec3 zn = z;
    for (int h = 0; h < 7; ++h) {
      zn = clamp_negatives(z + lam * Vec3(dz));
      if ((zn.array() >= 0.0).all() &&
          (poincare_map(s, zn, tol) - zn).norm() <= (1.0 - 0.25 * lam) * fn)
        break;
      lam *= 0.5;
    }
    z = zn;
    if (lam * dz.norm() < tolerances::newton_step) {
      if ((poincare_map(s, z, tol) - z).norm() <= tolerances::fp_residual) return z;
      return std::nullopt;
    }
  }
  return std::nullopt;
}

}  // namespace detail

inline FixedPointRecord origin_fixed_point(const ModelSpec& s,
                                           double tol = tolerances::integrator) {
  require_valid(s);
  return detail::make_record(s, Vec3::Zero(), FpKind::Origin, -1, tol);
}

// q_i = (b / a_ii) rho* e_i: the one-species fixed points.
inline std::vector<FixedPointRecord> axial_fixed_points(
    const ModelSpec& s, double tol = tolerances::integrator) {
  require_valid(s);
  if (!(s.A.diagonal().array() > 0.0).all())
    throw ValidationError(errc::precondition_failed, "diagonal entries must be > 0");
  const DerivedConstants c = derive_constants(s);
  std::vector<FixedPointRecord> out;
  for (int i = 0; i < 3; ++i) {
    Vec3 loc = Vec3::Zero();
    loc[i] = (s.b / s.A(i, i)) * c.rho_star;
    out.push_back(detail::make_record(s, loc, FpKind::Axial, i, tol));
  }
  return out;
}

// Two-species fixed points v_{k}: plane x_k = 0. The candidate is rho* times
// the positive solution of the restricted 2x2 linear system, polished by a
// Newton iteration restricted to the (invariant) plane. Newton divergence is
// non-fatal: the plane is skipped with a warning.
inline FixedPointCensus planar_fixed_points(const ModelSpec& s,
                                            double tol = tolerances::integrator) {
  require_valid(s);
  const DerivedConstants c = derive_constants(s);
  FixedPointCensus out;
  for (int k = 0; k < 3; ++k) {
    const int i = (k + 1) % 3, j = (k + 2) % 3;
    const double det2 = s.A(i, i) * s.A(j, j) - s.A(i, j) * s.A(j, i);
    if (std::abs(det2) < 1e-14) {
      out.warnings.push_back("plane " + std::to_string(k) + ": restricted matrix singular");
      continue;
    }
    const double vi = (s.b * s.A(j, j) - s.b * s.A(i, j)) / det2;
    const double vj = (s.b * s.A(i, i) - s.b * s.A(j, i)) / det2;
    if (!(vi > 0.0 && vj > 0.0)) continue;

    Vec3 z = Vec3::Zero();
    z[i] = c.rho_star * vi;
    z[j] = c.rho_star * vj;
    bool converged = false;
    for (int it = 0; it < tolerances::newton_max_iter; ++it) {
      const auto [pz, J] = poincare_jacobian(s, z, tol);
      const Eigen::Vector2d F(pz[i] - z[i], pz[j] - z[j]);
      Eigen::Matrix2d J2;
      J2 << J(i, i) - 1.0, J(i, j), J(j, i), J(j, j) - 1.0;
      const Eigen::Vector2d dz = J2.fullPivLu().solve(-F);
      if (!dz.allFinite() || dz.norm() > 1.0) break;
      z[i] += dz[0];
      z[j] += dz[1];
      if (z[i] <= 0.0 || z[j] <= 0.0) break;
      if (dz.norm() < tolerances::newton_step) {
        converged = true;
        break;
      }
    }
    if (!converged || (poincare_map(s, z, tol) - z).norm() > tolerances::fp_residual) {
      out.warnings.push_back("plane " + std::to_string(k) + ": Newton divergence");
      continue;
    }
    out.records.push_back(detail::make_record(s, z, FpKind::Planar, k, tol));
  }
  return out;
}

// Interior fixed points. The principal candidate is rho* x_hat; extra seeds
// (e.g. points of an autonomous periodic orbit scaled by rho*) may be
// supplied to hunt for the non-unique case. Results are deduplicated.
inline std::vector<FixedPointRecord> positive_fixed_points(
    const ModelSpec& s, const std::vector<Vec3>& extra_seeds = {},
    double tol = tolerances::integrator) {
  require_valid(s);
  const DerivedConstants c = derive_constants(s);
  std::vector<Vec3> found;
  const auto xhat = autonomous_positive_equilibrium(s.A, s.b);
  if (xhat) {
    const auto z = detail::newton_fixed_point(s, c.rho_star * (*xhat), tol);
    if (!z)
      throw NumericalError(errc::newton_divergence,
                           "Newton failed from the principal interior candidate");
    found.push_back(*z);
  }
  for (const Vec3& seed : extra_seeds) {
    if (!(seed.array() > 0.0).all()) continue;
    const auto z = detail::newton_fixed_point(s, seed, tol);
    if (z && (z->array() > 0.0).all()) {
      bool fresh = true;
      for (const Vec3& f : found)
        if ((f - *z).norm() < 1e-6) fresh = false;
      if (fresh) found.push_back(*z);
    }
  }
  std::vector<FixedPointRecord> out;
  for (const Vec3& f : found)
    if ((f.array() > 0.0).all())
      out.push_back(detail::make_record(s, f, FpKind::Positive, -1, tol));
  return out;
}

// Full census: origin, axial, planar, interior; sorted by kind then by
// location lexicographically.
inline FixedPointCensus census(const ModelSpec& s,
                               const std::vector<Vec3>& extra_seeds = {},
                               double tol = tolerances::integrator) {
  FixedPointCensus out;
  out.records.push_back(origin_fixed_point(s, tol));
  for (auto& r : axial_fixed_points(s, tol)) out.records.push_back(r);
  FixedPointCensus pl = planar_fixed_points(s, tol);
  for (auto& r : pl.records) out.records.push_back(r);
  out.warnings = std::move(pl.warnings);
  for (auto& r : positive_fixed_points(s, extra_seeds, tol)) out.records.push_back(r);
  std::sort(out.records.begin(), out.records.end(),
            [](const FixedPointRecord& a, const FixedPointRecord& b) {
              if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
              for (int i = 0; i < 3; ++i)
                if (a.location[i] != b.location[i]) return a.location[i] < b.location[i];
              return false;
            });
  return out;
}

// Time-normalized good-season average of the flow started at l theta:
//   theta_hat = (1/omega) Int_0^{phi omega} Phi_t(l theta) dt.
// When theta is a fixed point of P, A theta_hat = r 1; the returned vector
// is the residual A theta_hat - r 1.
inline Vec3 theta_hat_check(const ModelSpec& s, const Vec3& theta,
                            double tol = tolerances::integrator) {
  require_valid(s);
  const DerivedConstants c = derive_constants(s);
  const double res = (poincare_map(s, theta, tol) - theta).norm();
  if (res > 1e-8)
    throw ValidationError(errc::precondition_failed,
                          "theta is not a fixed point (residual " + std::to_string(res) + ")");
  using V6 = Eigen::Matrix<double, 6, 1>;
  V6 y0;
  y0.head<3>() = c.l * theta;
  y0.tail<3>().setZero();
  // quadrature slots start at non-invariant zeros: absolute floor there
  V6 atol = V6::Constant(tol);
  atol.head<3>().setConstant(tol * 1e-20);
  Dopri5<6> ode(atol, tol);
  const V6 out = ode.solve(
      [&](const V6& y) {
        V6 d;
        d.head<3>() = lv_vector_field(s.A, s.b, y.head<3>());
        d.tail<3>() = y.head<3>();
        return d;
      },
      y0, s.phi * s.omega);
  const Vec3 theta_hat = out.tail<3>() / s.omega;
  return s.A * theta_hat - Vec3::Constant(c.r);
}

// Quantities behind the eigenvalue identities at an interior fixed point.
struct EigenIdentityReport {
  double dp_expm_err = 0.0;     // ||DP(p) - exp(Df(p/rho*) rho_hat)||_inf
  double radial_eig_err = 0.0;  // |lambda_closest - e^{-b rho_hat}|
  double radial_angle = 0.0;    // angle(DP p, p): zero when p is an eigenvector
  double pair_sum = 0.0;        // Re(lambda_1 + lambda_2) of Df(p/rho*), radial dropped
  double pair_sum_target = 0.0;  // b zeta / det A
  bool pair_product_sign_ok = false;  // lambda_1 lambda_2 det A > 0
};

inline EigenIdentityReport eigen_identity_report(const ModelSpec& s, const Vec3& fp,
                                                 double tol = tolerances::integrator) {
  require_valid(s);
  const DerivedConstants c = derive_constants(s);
  EigenIdentityReport rep;

  const auto [px, dp] = poincare_jacobian(s, fp, tol);
  const Vec3 xhat = fp / c.rho_star;
  rep.dp_expm_err = (dp - expm(Mat3(lv_jacobian(s.A, s.b, xhat) * c.rho_hat)))
                        .cwiseAbs()
                        .maxCoeff();

  const double radial = std::exp(-s.b * c.rho_hat);
  const Eigen::EigenSolver<Mat3> es(dp);
  double best = std::abs(es.eigenvalues()[0] - radial);
  for (int i = 1; i < 3; ++i)
    best = std::min(best, std::abs(es.eigenvalues()[i] - radial));
  rep.radial_eig_err = best;
  // eigenvector check done without the solver basis: for clustered spectra
  // the solver's choice inside the eigenspace is arbitrary, but the identity
  // DP p = e^{-b rho_hat} p makes the image of p parallel to p regardless
  const Vec3 img = dp * fp;
  const double ca =
      std::min(1.0, std::abs(img.normalized().dot(fp.normalized())));
  rep.radial_angle = std::acos(ca);

  const Eigen::EigenSolver<Mat3> ef(lv_jacobian(s.A, s.b, xhat));
  int ib = 0;
  double bb = std::abs(ef.eigenvalues()[0] + s.b);
  for (int i = 1; i < 3; ++i) {
    const double d = std::abs(ef.eigenvalues()[i] + s.b);
    if (d < bb) {
      bb = d;
      ib = i;
    }
  }
  std::complex<double> sum = 0.0, prod = 1.0;
  for (int i = 0; i < 3; ++i) {
    if (i == ib) continue;
    sum += ef.eigenvalues()[i];
    prod *= ef.eigenvalues()[i];
  }
  const double detA = s.A.determinant();
  // zeta from first principles (avoid depending on the classify module here)
  const double zeta = (s.A(0, 2) - s.A(2, 2)) * (s.A(1, 0) - s.A(0, 0)) *
                          (s.A(2, 1) - s.A(1, 1)) -
                      (s.A(1, 1) - s.A(0, 1)) * (s.A(2, 2) - s.A(1, 2)) *
                          (s.A(0, 0) - s.A(2, 0));
  rep.pair_sum = sum.real();
  rep.pair_sum_target = s.b * zeta / detA;
  rep.pair_product_sign_ok = prod.real() * detA > 0.0;
  return rep;
}

}  // namespace slv
