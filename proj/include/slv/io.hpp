#pragma once

// Serialization and file output: strict JSON model parsing (unknown fields
// are errors), JSON reports, CSV writers, and atomic writes (temp + rename).
// Numbers round-trip losslessly: CSV uses %.17g, JSON uses shortest-exact
// double formatting.

#include <json.hpp>

#include <array>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "classify.hpp"
#include "fixedpoints.hpp"
#include "model.hpp"
#include "orbits.hpp"
#include "simplex.hpp"

namespace slv {

using Json = nlohmann::json;

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline Json model_to_json(const ModelSpec& s) {
  Json a = Json::array();
  for (int i = 0; i < 3; ++i) {
    Json row = Json::array();
    for (int j = 0; j < 3; ++j) row.push_back(s.A(i, j));
    a.push_back(row);
  }
  return Json{{"A", a}, {"b", s.b}, {"mu", s.mu}, {"phi", s.phi}, {"omega", s.omega}};
}

inline ModelSpec model_from_json(const Json& j) {
  if (!j.is_object())
    throw ValidationError(errc::parse_error, "model must be a JSON object");
  static constexpr std::array<const char*, 5> kFields{"A", "b", "mu", "phi", "omega"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* f : kFields)
      if (it.key() == f) known = true;
    if (!known)
      throw ValidationError(errc::parse_error, "unknown field '" + it.key() + "'");
  }
  for (const char* f : kFields)
    if (!j.contains(f))
      throw ValidationError(errc::parse_error, std::string("missing field '") + f + "'");

  const Json& a = j.at("A");
  if (!a.is_array() || a.size() != 3)
    throw ValidationError(errc::parse_error, "field 'A' must be a 3x3 array");
  ModelSpec s;
  for (int i = 0; i < 3; ++i) {
    const Json& row = a.at(i);
    if (!row.is_array() || row.size() != 3)
      throw ValidationError(errc::parse_error, "field 'A' must be a 3x3 array");
    for (int jj = 0; jj < 3; ++jj) {
      if (!row.at(jj).is_number())
        throw ValidationError(errc::parse_error, "entries of 'A' must be numbers");
      s.A(i, jj) = row.at(jj).get<double>();
    }
  }
  for (const char* f : {"b", "mu", "phi", "omega"})
    if (!j.at(f).is_number())
      throw ValidationError(errc::parse_error, std::string("field '") + f + "' must be a number");
  s.b = j.at("b").get<double>();
  s.mu = j.at("mu").get<double>();
  s.phi = j.at("phi").get<double>();
  s.omega = j.at("omega").get<double>();
  return s;
}

inline ModelSpec load_model_file(const std::string& path) {
  std::ifstream f(path);
  if (!f)
    throw ValidationError(errc::io_error, "cannot read model file: " + path);
  Json j;
  try {
    f >> j;
  } catch (const Json::exception& e) {
    throw ValidationError(errc::parse_error, std::string("model JSON: ") + e.what());
  }
  return model_from_json(j);
}

inline void atomic_write_file(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path dir = target.parent_path().empty() ? fs::path(".") : target.parent_path();
  std::error_code ec;
  if (!fs::is_directory(dir, ec))
    throw ValidationError(errc::io_error,
                          "output directory does not exist: " + dir.string());
  static std::atomic<unsigned> counter{0};
  const fs::path tmp =
      dir / (target.filename().string() + ".tmp" + std::to_string(counter++));
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f)
      throw ValidationError(errc::io_error, "cannot open " + tmp.string());
    f << content;
    f.flush();
    if (!f) {
      fs::remove(tmp, ec);
      throw ValidationError(errc::io_error, "write failed: " + tmp.string());
    }
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw ValidationError(errc::io_error, "rename failed for " + path);
  }
}

inline Json constants_to_json(const ModelSpec& s, const DerivedConstants& c) {
  return Json{{"model", model_to_json(s)},
              {"constants",
               Json{{"r", c.r}, {"l", c.l}, {"rho_star", c.rho_star}, {"rho_hat", c.rho_hat}}}};
}

inline Json census_to_json(const FixedPointCensus& cen) {
  Json recs = Json::array();
  for (const FixedPointRecord& r : cen.records) {
    Json ev = Json::array();
    for (const auto& l : r.eigenvalues)
      ev.push_back(Json{{"re", l.real()}, {"im", l.imag()}});
    recs.push_back(Json{{"kind", kind_name(r.kind)},
                        {"which", r.which},
                        {"location", {r.location[0], r.location[1], r.location[2]}},
                        {"eigenvalues", ev},
                        {"index", r.index},
                        {"stability", stability_name(r.stability)},
                        {"nonhyperbolic_warning", r.nonhyperbolic_warning},
                        {"residual", r.residual}});
  }
  return Json{{"records", recs}, {"warnings", cen.warnings}};
}

inline Json verdict_to_json(const DynamicsVerdict& v) {
  Json out{{"class", class_label_name(v.label)},
           {"subcase", v.subcase ? std::string(1, v.subcase) : std::string()},
           {"zeta", v.invariants.zeta},
           {"vartheta", v.invariants.vartheta},
           {"detA", v.invariants.detA},
           {"gamma", v.invariants.gamma},
           {"prediction", v.prediction},
           {"has_positive_fp", v.has_positive_fp}};
  if (v.sigma) {
    Json sig = Json::array();
    for (int i : *v.sigma) sig.push_back(i + 1);  // 1-based for readability
    out["sigma"] = sig;
  }
  return out;
}

inline Json curve_class_to_json(const CurveClass& cc) {
  return Json{{"eta", cc.eta},
              {"kind", curve_kind_name(cc.kind)},
              {"q", cc.q},
              {"evidence", cc.evidence}};
}

inline Json orbit_to_json(const PeriodicOrbit& orb) {
  return Json{{"T_gamma", orb.T_gamma},
              {"residual", orb.residual},
              {"n_points", orb.points.size()},
              {"section",
               Json{{"anchor", {orb.section.anchor[0], orb.section.anchor[1], orb.section.anchor[2]}},
                    {"normal", {orb.section.normal[0], orb.section.normal[1], orb.section.normal[2]}}}}};
}

inline std::string orbit_to_csv(const PeriodicOrbit& orb) {
  std::ostringstream os;
  os << "t,x1,x2,x3\n";
  const int n = static_cast<int>(orb.points.size());
  for (int i = 0; i < n; ++i) {
    const Vec3& p = orb.points[i];
    os << fmt_double(orb.T_gamma * i / n) << ',' << fmt_double(p[0]) << ','
       << fmt_double(p[1]) << ',' << fmt_double(p[2]) << '\n';
  }
  return os.str();
}

inline std::string portrait_to_csv(const PortraitSummary& sum) {
  std::ostringstream os;
  os << "x0_1,x0_2,x0_3,fate,limit_1,limit_2,limit_3,iterations,boundary_flag,matched\n";
  for (const PortraitRow& r : sum.rows) {
    const Vec3 lim = r.limit ? *r.limit : r.last;
    os << fmt_double(r.x0[0]) << ',' << fmt_double(r.x0[1]) << ',' << fmt_double(r.x0[2])
       << ',' << fate_name(r.fate) << ',' << fmt_double(lim[0]) << ','
       << fmt_double(lim[1]) << ',' << fmt_double(lim[2]) << ',' << r.iterations << ','
       << (r.boundary_flag ? 1 : 0) << ',' << r.matched << '\n';
  }
  return os.str();
}

inline Json portrait_summary_json(const PortraitSummary& sum) {
  return Json{{"n", sum.rows.size()},
              {"fate_counts", sum.fate_counts},
              {"boundary_ever", sum.boundary_ever}};
}

// Rays that failed their bracket are omitted.
inline std::string mesh_to_csv(const SimplexMesh& mesh) {
  std::ostringstream os;
  os << "u1,u2,u3,radius\n";
  for (size_t i = 0; i < mesh.rays.size(); ++i) {
    if (!mesh.ok[i]) continue;
    os << fmt_double(mesh.rays[i][0]) << ',' << fmt_double(mesh.rays[i][1]) << ','
       << fmt_double(mesh.rays[i][2]) << ',' << fmt_double(mesh.radii[i]) << '\n';
  }
  return os.str();
}

// Trajectory of the seasonal system sampled n_per_year times per year for
// `years` years. Sampling restarts from the year-start state, so samples are
// exact restrictions of the year map composition.
inline std::string simulate_csv(const ModelSpec& s, const Vec3& x0, int years,
                                int n_per_year, double tol = tolerances::integrator) {
  require_valid(s);
  require_nonnegative(x0);
  if (years < 1 || n_per_year < 1)
    throw ValidationError(errc::precondition_failed, "need years >= 1 and samples >= 1");
  const double bad = (1.0 - s.phi) * s.omega;
  const double l = std::exp(-s.mu * bad);
  std::ostringstream os;
  os << "t,x1,x2,x3\n";
  const auto row = [&](double t, const Vec3& x) {
    os << fmt_double(t) << ',' << fmt_double(x[0]) << ',' << fmt_double(x[1]) << ','
       << fmt_double(x[2]) << '\n';
  };
  row(0.0, x0);
  Vec3 xk = x0;
  for (int k = 0; k < years; ++k) {
    Vec3 last = xk;
    for (int j = 1; j <= n_per_year; ++j) {
      const double tau = s.omega * j / n_per_year;
      Vec3 x;
      if (tau <= bad)
        x = xk * std::exp(-s.mu * tau);
      else
        x = flow_autonomous(s.A, s.b, l * xk, tau - bad, tol).state;
      row(k * s.omega + tau, x);
      last = x;
    }
    xk = (n_per_year == 1) ? last : flow_autonomous(s.A, s.b, l * xk, s.phi * s.omega, tol).state;
  }
  return os.str();
}

}  // namespace slv
