#pragma once

// Parameter set for the seasonally forced competition system and its derived
// constants. The year [0, omega) splits into a bad season of length
// (1-phi) omega with dx/dt = -mu x, followed by a good season of length
// phi omega with Lotka-Volterra competition dx_i/dt = x_i (b - (A x)_i).
//
// Derived quantities (all closed-form):
//   r        = b phi - mu (1 - phi)       mean per-capita growth rate
//   l        = e^{-mu (1-phi) omega}      bad-season decay factor
//   rho*     = (1 - e^{-r omega}) / (1 - e^{-b phi omega})
//   rho_hat  = r omega / b
// rho* is the fixed point of the scalar seasonal logistic map
// M(y) = rho(phi omega, l y), and rho_hat equals the accumulated logistic
// mass: the integral of rho(s, l rho*) over one good season.

#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"
#include "types.hpp"

namespace slv {

struct ModelSpec {
  Mat3 A;        // interaction matrix, all entries > 0
  double b;      // good-season growth rate, > 0
  double mu;     // bad-season death rate, > 0
  double phi;    // good-season fraction, in (0, 1]
  double omega;  // season period, > 0
};

struct DerivedConstants {
  double r;
  double l;
  double rho_star;
  double rho_hat;
};

struct Diagnostics {
  double r = 0.0;
  double detA = 0.0;
  double eps_det = 0.0;
  bool params_ok = false;
  bool positivity_ok = false;
  bool det_ok = false;
  bool r_positive = false;
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// Never throws; reports every violated invariant. Positivity of the matrix
// entries is diagnostic only: the classification theory assumes total
// competition, but every operation below runs fine with zero off-diagonal
// entries, and several useful reference matrices have them.
inline Diagnostics validate(const ModelSpec& s) {
  Diagnostics d;
  d.r = s.b * s.phi - s.mu * (1.0 - s.phi);
  d.detA = s.A.determinant();
  d.eps_det = eps_det(s.A);

  d.params_ok = std::isfinite(s.b) && s.b > 0.0 && std::isfinite(s.mu) && s.mu > 0.0 &&
                std::isfinite(s.phi) && s.phi > 0.0 && s.phi <= 1.0 &&
                std::isfinite(s.omega) && s.omega > 0.0 && s.A.allFinite();
  d.positivity_ok = s.A.allFinite() && (s.A.array() > 0.0).all();
  d.det_ok = std::isfinite(d.detA) && std::abs(d.detA) > d.eps_det;
  d.r_positive = d.r > 0.0;

  if (!d.params_ok)
    d.violations.push_back("scalar parameters out of range (need b>0, mu>0, 0<phi<=1, omega>0, all finite)");
  if (!d.positivity_ok) d.violations.push_back("interaction matrix must have all entries > 0");
  if (!d.det_ok) d.violations.push_back("interaction matrix is numerically singular");
  if (!d.r_positive) d.violations.push_back("mean growth rate r = b phi - mu (1-phi) must be > 0");
  return d;
}

inline void require_valid(const ModelSpec& s) {
  const Diagnostics d = validate(s);
  if (!d.params_ok)
    throw ValidationError(errc::invalid_spec, d.violations.front());
  if (!d.det_ok)
    throw ValidationError(errc::degenerate_matrix, "interaction matrix is numerically singular");
  if (!d.r_positive)
    throw ValidationError(errc::r_invalid,
                          "mean growth rate r = b phi - mu (1-phi) must be > 0");
}

inline DerivedConstants derive_constants(const ModelSpec& s) {
  require_valid(s);
  DerivedConstants c;
  c.r = s.b * s.phi - s.mu * (1.0 - s.phi);
  c.l = std::exp(-s.mu * (1.0 - s.phi) * s.omega);
  c.rho_star = (1.0 - std::exp(-c.r * s.omega)) / (1.0 - std::exp(-s.b * s.phi * s.omega));
  c.rho_hat = c.r * s.omega / s.b;
  return c;
}

// Scalar logistic flow rho' = b rho (1 - rho) in closed form, written in the
// overflow-safe form rho0 / (rho0 + (1 - rho0) e^{-b t}).
inline double logistic_solution(double b, double rho0, double t) {
  if (rho0 == 0.0) return 0.0;
  return rho0 / (rho0 + (1.0 - rho0) * std::exp(-b * t));
}

// One-year scalar map M(y) = rho(phi omega, l y); rho* is its fixed point.
inline double seasonal_logistic_map(const ModelSpec& s, double y) {
  const double l = std::exp(-s.mu * (1.0 - s.phi) * s.omega);
  return logistic_solution(s.b, l * y, s.phi * s.omega);
}

}  // namespace slv
