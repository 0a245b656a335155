#pragma once

// Command line front end. Subcommands:
//
//   derive                 print derived constants (r, l, rho_star, rho_hat)
//   classify               interaction-matrix invariants and dynamics verdict
//   fixed-points           fixed point census with spectra and stability
//   simulate               sample a trajectory to CSV
//   portrait               iterate a batch of random initial states, CSV + summary
//   periodic-orbit         locate a closed orbit of the averaged system
//   construct-multiplicity tune the season length so a closed orbit becomes a
//                          curve of fixed points of the year map
//   verify                 run the identity checks for one model, print a table
//
// Exit codes: 0 success, 1 validation/usage error, 2 numerical failure.
// Errors are reported on stderr as one-line JSON {"error": code, "detail": text}.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "classify.hpp"
#include "fixedpoints.hpp"
#include "io.hpp"
#include "model.hpp"
#include "orbits.hpp"
#include "poincare.hpp"
#include "simplex.hpp"

namespace slv::cli {

namespace detail {

inline void emit_error(std::ostream& err, const std::string& code, const std::string& detail) {
  err << Json{{"error", code}, {"detail", detail}}.dump() << "\n";
}

inline void write_text(const std::string& out_path, const std::string& content,
                       std::ostream& out) {
  if (out_path.empty())
    out << content;
  else
    atomic_write_file(out_path, content);
}

inline void write_json(const std::string& out_path, const Json& j, std::ostream& out) {
  write_text(out_path, j.dump(2) + "\n", out);
}

inline Vec3 to_vec3(const std::vector<double>& v) {
  return Vec3(v.at(0), v.at(1), v.at(2));
}

struct CheckTable {
  std::ostream& out;
  bool all_ok = true;
  void row(bool ok, const std::string& name, const std::string& detail) {
    all_ok = all_ok && ok;
    out << (ok ? "[PASS] " : "[FAIL] ") << name;
    if (!detail.empty()) out << "  (" << detail << ")";
    out << "\n";
  }
};

// Identity checks for one model: quadrature value of rho_hat, fixed point of
// the seasonal logistic map, conjugacy of the year map with the averaged flow,
// and the spectral identities at the positive fixed point when there is one.
inline bool verify_model(const ModelSpec& s, double tol, std::ostream& out) {
  require_valid(s);
  const DerivedConstants c = derive_constants(s);
  CheckTable t{out};

  const double quad = adaptive_simpson(
      [&](double u) { return logistic_solution(s.b, c.l * c.rho_star, u); }, 0.0,
      s.phi * s.omega, 1e-12);
  t.row(std::abs(quad - c.rho_hat) <= 1e-8, "quadrature identity",
        "|integral - rho_hat| = " + fmt_double(std::abs(quad - c.rho_hat)));

  const double m = seasonal_logistic_map(s, c.rho_star);
  t.row(std::abs(m - c.rho_star) <= 1e-12, "aggregate map fixed point",
        "|M(rho_star) - rho_star| = " + fmt_double(std::abs(m - c.rho_star)));

  double conj = 0.0;
  for (const Vec3& x : {Vec3(0.1, 0.2, 0.3), Vec3(0.5, 0.5, 0.5), Vec3(1.0, 0.7, 0.2)})
    conj = std::max(conj, conjugacy_residual(s, x, 1, tol));
  t.row(conj <= 1e-7, "conjugacy with averaged flow", "max residual = " + fmt_double(conj));

  const FixedPointCensus cen = census(s, {}, tol);
  bool index_ok = true;
  const double detA = s.A.determinant();
  for (const FixedPointRecord& rec : cen.records) {
    // origin: three multipliers e^{r omega} > 1, odd count
    if (rec.kind == FpKind::Origin && rec.index != -1) index_ok = false;
    if (rec.kind == FpKind::Positive && !rec.nonhyperbolic_warning &&
        rec.index != (detA > 0 ? +1 : -1))
      index_ok = false;
  }
  t.row(index_ok, "index law", std::to_string(cen.records.size()) + " records");

  const auto pos = std::find_if(cen.records.begin(), cen.records.end(),
                                [](const FixedPointRecord& r) { return r.kind == FpKind::Positive; });
  if (pos != cen.records.end()) {
    const EigenIdentityReport rep = eigen_identity_report(s, pos->location, tol);
    t.row(rep.dp_expm_err <= 1e-6, "year-map derivative vs matrix exponential",
          "err = " + fmt_double(rep.dp_expm_err));
    t.row(rep.radial_eig_err <= 1e-6 && rep.radial_angle <= 1e-5, "radial eigenpair",
          "value err = " + fmt_double(rep.radial_eig_err) +
              ", angle = " + fmt_double(rep.radial_angle));
    const double ps_err = std::abs(rep.pair_sum - rep.pair_sum_target);
    t.row(ps_err <= 1e-6 * std::max(1.0, std::abs(rep.pair_sum_target)) &&
              rep.pair_product_sign_ok,
          "transverse eigenvalue pair", "sum err = " + fmt_double(ps_err));
    const Vec3 theta_res = theta_hat_check(s, pos->location, tol);
    t.row(theta_res.cwiseAbs().maxCoeff() <= 1e-6, "time-average identity",
          "residual = " + fmt_double(theta_res.cwiseAbs().maxCoeff()));
    const auto& small = pos->eigenvalues[0];
    t.row(std::abs(small.imag()) <= 1e-9 && small.real() > 0.0 && small.real() < 1.0,
          "smallest eigenvalue real in (0,1)",
          "lambda = " + fmt_double(small.real()));
  }

  const DynamicsVerdict v = dynamics_verdict(s);
  if (v.label == ClassLabel::Class27 &&
      std::abs(v.invariants.zeta) > eps_zeta(s.A)) {
    const bool sign_ok = (v.invariants.vartheta < 0) == (v.invariants.zeta > 0) &&
                         v.invariants.vartheta != 0.0;
    t.row(sign_ok, "cycle-stability sign rule",
          "vartheta = " + fmt_double(v.invariants.vartheta) +
              ", zeta = " + fmt_double(v.invariants.zeta));
  }
  return t.all_ok;
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical laboratory for the year map of a three-species "
               "seasonal Lotka-Volterra system"};
  app.require_subcommand(1);

  std::string model_path;
  std::string out_path;
  double tol = tolerances::integrator;
  std::uint64_t seed = 12345;
  int k = -1;
  int n = -1;
  std::vector<double> x0;

  const auto add_common = [&](CLI::App* sub, bool needs_x0) {
    sub->add_option("--model", model_path, "model JSON file")->required();
    sub->add_option("--out", out_path, "output file (default: stdout)");
    sub->add_option("--tol", tol, "integrator tolerance");
    if (needs_x0)
      sub->add_option("--x0", x0, "initial state (three numbers)")
          ->expected(3)
          ->delimiter(',');
    return sub;
  };

  CLI::App* c_derive = add_common(app.add_subcommand("derive", "derived constants"), false);
  CLI::App* c_classify =
      add_common(app.add_subcommand("classify", "invariants and dynamics verdict"), false);
  CLI::App* c_census =
      add_common(app.add_subcommand("fixed-points", "fixed point census"), false);
  CLI::App* c_sim = add_common(app.add_subcommand("simulate", "trajectory CSV"), true);
  c_sim->get_option("--x0")->required();
  c_sim->add_option("--k", k, "number of years (default 50)");
  c_sim->add_option("--n", n, "samples per year (default 16)");
  CLI::App* c_port =
      add_common(app.add_subcommand("portrait", "batch orbit fates"), false);
  c_port->add_option("--k", k, "iteration cap per orbit (default 2000)");
  c_port->add_option("--n", n, "number of initial states (default 100)");
  c_port->add_option("--seed", seed, "random seed");
  CLI::App* c_orbit = add_common(
      app.add_subcommand("periodic-orbit", "closed orbit of the averaged system"), true);
  c_orbit->get_option("--x0")->required();
  c_orbit->add_option("--n", n, "sample points on the orbit (default 512)");
  CLI::App* c_mult = add_common(
      app.add_subcommand("construct-multiplicity",
                         "season length that turns a closed orbit into fixed points"),
      true);
  c_mult->get_option("--x0")->required();
  CLI::App* c_verify =
      add_common(app.add_subcommand("verify", "identity checks for one model"), false);

  std::vector<std::string> argv_s;
  argv_s.reserve(args.size() + 1);
  argv_s.push_back("slv");
  for (const std::string& a : args) argv_s.push_back(a);
  std::vector<const char*> argv;
  argv.reserve(argv_s.size());
  for (const std::string& a : argv_s) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    detail::emit_error(err, errc::usage, e.what());
    return 1;
  }

  try {
    const ModelSpec spec = load_model_file(model_path);

    if (c_derive->parsed()) {
      require_valid(spec);
      detail::write_json(out_path, constants_to_json(spec, derive_constants(spec)), out);
      return 0;
    }
    if (c_classify->parsed()) {
      detail::write_json(out_path, verdict_to_json(dynamics_verdict(spec)), out);
      return 0;
    }
    if (c_census->parsed()) {
      detail::write_json(out_path, census_to_json(census(spec, {}, tol)), out);
      return 0;
    }
    if (c_sim->parsed()) {
      const int years = (k > 0) ? k : 50;
      const int per_year = (n > 0) ? n : 16;
      detail::write_text(out_path,
                         simulate_csv(spec, detail::to_vec3(x0), years, per_year, tol), out);
      return 0;
    }
    if (c_port->parsed()) {
      const int n_init = (n > 0) ? n : 100;
      const int k_max = (k > 0) ? k : 2000;
      const PortraitSummary sum = sample_portrait(spec, n_init, k_max, seed, tol);
      if (out_path.empty()) {
        out << portrait_to_csv(sum);
      } else {
        atomic_write_file(out_path, portrait_to_csv(sum));
        out << portrait_summary_json(sum).dump(2) << "\n";
      }
      return 0;
    }
    if (c_orbit->parsed()) {
      const int n_points = (n > 0) ? n : 512;
      const PeriodicOrbit orb =
          find_periodic_orbit(spec.A, spec.b, detail::to_vec3(x0), tol, n_points);
      const CurveClass cc = classify_curve(spec, orb.T_gamma);
      Json rep = orbit_to_json(orb);
      rep["curve"] = curve_class_to_json(cc);
      if (!out_path.empty()) atomic_write_file(out_path, orbit_to_csv(orb));
      out << rep.dump(2) << "\n";
      return 0;
    }
    if (c_mult->parsed()) {
      const MultiplicityResult res =
          construct_multiplicity(spec.A, spec.b, spec.mu, spec.phi, detail::to_vec3(x0), tol);
      const double fc_res = verify_fixed_curve(res.spec, res.orbit, 8, tol);
      const CurveClass cc = classify_curve(res.spec, res.orbit.T_gamma);
      Json rep{{"model", model_to_json(res.spec)},
               {"omega_star", res.omega_star},
               {"T_gamma", res.orbit.T_gamma},
               {"orbit_residual", res.orbit.residual},
               {"fixed_curve_residual", fc_res},
               {"curve", curve_class_to_json(cc)}};
      detail::write_json(out_path, rep, out);
      return 0;
    }
    if (c_verify->parsed()) {
      const bool ok = detail::verify_model(spec, tol, out);
      return ok ? 0 : 2;
    }
    detail::emit_error(err, errc::usage, "no subcommand given");
    return 1;
  } catch (const ValidationError& e) {
    detail::emit_error(err, e.code(), e.what());
    return 1;
  } catch (const NumericalError& e) {
    detail::emit_error(err, e.code(), e.what());
    return 2;
  } catch (const Json::exception& e) {
    detail::emit_error(err, errc::parse_error, e.what());
    return 1;
  } catch (const std::exception& e) {
    detail::emit_error(err, "internal", e.what());
    return 2;
  }
}

inline int run(const std::vector<std::string>& args) {
  return run(args, std::cout, std::cerr);
}

}  // namespace slv::cli
