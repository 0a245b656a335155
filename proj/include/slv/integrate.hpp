#pragma once

// Embedded Dormand-Prince 5(4) Runge-Kutta pair with FSAL and PI step-size
// control (safety 0.9, beta 0.04, step ratio clamped to [1/5, 10]). The
// right-hand side is autonomous: f(y) -> dy/dt. Error per step is measured
// in a mixed absolute/relative norm so trajectories that pass very close to
// an invariant boundary keep relative accuracy there.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "errors.hpp"

namespace slv {

template <int N>
class Dopri5 {
public:
  using Vec = Eigen::Matrix<double, N, 1>;

  // The one-argument form is (almost) pure relative control: trajectories
  // here pass through near-extinction bottlenecks where components shrink to
  // e^{-b rho_hat} of their size, and an absolute floor at tol would throw
  // away every significant digit there. The tiny atol only guards exactly
  // invariant zero components against 0/0. Components that start at a
  // non-invariant zero (variational and quadrature slots) need a real
  // absolute floor: give them one through the vector form.
  explicit Dopri5(double tol = 1e-10)
      : atol_(Vec::Constant(tol * 1e-20)), rtol_(tol) {}
  Dopri5(double atol, double rtol) : atol_(Vec::Constant(atol)), rtol_(rtol) {}
  Dopri5(const Vec& atol, double rtol) : atol_(atol), rtol_(rtol) {}

  // Integrate y' = f(y) from time 0 to T >= 0; returns y(T).
  template <class F>
  Vec solve(F&& f, Vec y, double T) const {
    if (!(T >= 0.0))
      throw ValidationError(errc::precondition_failed, "integration time must be >= 0");
    if (T == 0.0) return y;

    Vec k1 = f(y);
    double t = 0.0;
    double h = initial_step(f, y, k1, T);
    double facold = 1e-4;
    long steps = 0;

    while (t < T) {
      if (++steps > kMaxSteps)
        throw NumericalError(errc::step_failure,
                             "step count exceeded at t=" + std::to_string(t));
      bool last = false;
      if (h >= T - t) {
        h = T - t;  // remainder step: exempt from the underflow guard
        last = true;
      } else if (!(h > T * 1e-15)) {
        throw NumericalError(errc::step_failure,
                             "step size underflow at t=" + std::to_string(t));
      }

      const Vec k2 = f(y + h * (a21 * k1));
      const Vec k3 = f(y + h * (a31 * k1 + a32 * k2));
      const Vec k4 = f(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
      const Vec k5 = f(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      const Vec k6 = f(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      const Vec ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const Vec k7 = f(ynew);
      const Vec ev = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

      double err = 0.0;
      for (int i = 0; i < N; ++i) {
        const double sc = atol_[i] + rtol_ * std::max(std::abs(y[i]), std::abs(ynew[i]));
        const double q = ev[i] / sc;
        err += q * q;
      }
      err = std::sqrt(err / N);

      const double fac11 = std::pow(std::max(err, 1e-32), kExpo1);
      if (err <= 1.0) {
        y = ynew;
        if (last) return y;
        t += h;
        k1 = k7;  // FSAL
        double fac = fac11 / std::pow(facold, kBeta);
        fac = std::max(kInvFacMax, std::min(kInvFacMin, fac / kSafety));
        facold = std::max(err, 1e-4);
        h /= fac;
      } else {
        h /= std::min(kInvFacMin, fac11 / kSafety);
      }
    }
    return y;
  }

private:
  template <class F>
  double initial_step(F&& f, const Vec& y, const Vec& f0, double T) const {
    double dnf = 0.0, dny = 0.0;
    for (int i = 0; i < N; ++i) {
      const double sc = atol_[i] + rtol_ * std::abs(y[i]);
      dnf += (f0[i] / sc) * (f0[i] / sc);
      dny += (y[i] / sc) * (y[i] / sc);
    }
    double h0 = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * std::sqrt(dny / dnf);
    h0 = std::min(h0, T);
    const Vec f1 = f((y + h0 * f0).eval());
    double der2 = 0.0;
    for (int i = 0; i < N; ++i) {
      const double sc = atol_[i] + rtol_ * std::abs(y[i]);
      der2 += ((f1[i] - f0[i]) / sc) * ((f1[i] - f0[i]) / sc);
    }
    der2 = std::sqrt(der2) / h0;
    const double der12 = std::max(der2, std::sqrt(dnf));
    const double h1 = (der12 <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                       : std::pow(0.01 / der12, 0.2);
    return std::min({100.0 * h0, h1, T});
  }

  Vec atol_;
  double rtol_;

  static constexpr long kMaxSteps = 20'000'000;
  static constexpr double kSafety = 0.9;
  static constexpr double kBeta = 0.04;
  static constexpr double kExpo1 = 0.2 - kBeta * 0.75;
  static constexpr double kInvFacMin = 5.0;   // h may shrink by at most 1/5 per step
  static constexpr double kInvFacMax = 0.1;   // h may grow by at most 10x per step

  // Dormand-Prince tableau.
  static constexpr double a21 = 1.0 / 5.0;
  static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
  static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
  static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                          a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
  static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0,
                          a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                          a65 = -5103.0 / 18656.0;
  static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                          b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
  // e = b(5th) - b(4th): the embedded error estimate weights.
  static constexpr double e1 = b1 - 5179.0 / 57600.0;
  static constexpr double e3 = b3 - 7571.0 / 16695.0;
  static constexpr double e4 = b4 - 393.0 / 640.0;
  static constexpr double e5 = b5 + 92097.0 / 339200.0;
  static constexpr double e6 = b6 - 187.0 / 2100.0;
  static constexpr double e7 = -1.0 / 40.0;
};

}  // namespace slv
