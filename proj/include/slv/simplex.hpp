#pragma once

// Radial mesh approximation of the carrying simplex, boundary-cycle
// diagnostics, and randomized phase portraits.
//
// The simplex is the graph of a radius function R(u) over unit directions u
// in the closed positive octant. It is approximated by a two-sided graph
// transform: start from a sphere well inside (R_lo) and one enclosing the
// attractor (R_hi), push each surface through the map, and read the image
// back as a radial graph by local quadratic moving-least-squares fits of
// the scattered image radii. Nestedness of the mapped regions keeps the two
// sequences on opposite sides of the invariant surface, so their gap plus
// the surface's own invariance defect is an honest per-ray error width. A
// node whose image lands back on its own ray (axes, and the diagonal for
// symmetric matrices) adopts the image radius directly, making those rays
// exact up to the integrator.
//
// Intra-ray orbit comparisons carry no usable side information here (for
// equal rates, scaling a seed along its ray only shifts the asymptotic
// phase), which is why the bracket is built from whole surfaces rather than
// per-ray orbits.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "classify.hpp"
#include "fixedpoints.hpp"
#include "parallel.hpp"
#include "poincare.hpp"
#include "types.hpp"

namespace slv {

struct SimplexMesh {
  std::vector<Vec3> rays;      // unit directions, closed positive octant
  std::vector<double> radii;   // simplex distance from the origin along each ray
  std::vector<double> widths;  // per-ray error bracket (gap + invariance defect)
  std::vector<char> ok;        // 0 = bracket failure: ray should be skipped
  int failed = 0;
};

namespace simplex_detail {

// n_rays output directions: the three axes, the main diagonal, then a
// golden-spiral fill of the open octant. Deterministic in n_rays.
inline std::vector<Vec3> make_rays(int n_rays) {
  std::vector<Vec3> rays;
  rays.reserve(n_rays);
  rays.push_back(Vec3::UnitX());
  rays.push_back(Vec3::UnitY());
  rays.push_back(Vec3::UnitZ());
  rays.push_back(Vec3::Ones().normalized());
  if (static_cast<int>(rays.size()) >= n_rays) {
    rays.resize(n_rays);
    return rays;
  }
  const double ga = M_PI * (3.0 - std::sqrt(5.0));
  for (long m = 8L * n_rays + 64L;; m *= 2) {
    std::vector<Vec3> fill;
    for (long i = 0; i < m; ++i) {
      const double z = 1.0 - (2.0 * i + 1.0) / static_cast<double>(m);
      const double rr = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double th = ga * static_cast<double>(i);
      const Vec3 u(rr * std::cos(th), rr * std::sin(th), z);
      if (u.minCoeff() > 0.01) fill.push_back(u.normalized());
    }
    if (static_cast<int>(fill.size()) + 4 >= n_rays) {
      for (const Vec3& u : fill) {
        if (static_cast<int>(rays.size()) >= n_rays) break;
        rays.push_back(u);
      }
      return rays;
    }
  }
}

// Interpolation nodes: the output rays plus a barycentric lattice over the
// octant (covers the boundary edges the spiral avoids).
inline std::vector<Vec3> make_nodes(const std::vector<Vec3>& rays, int lattice_n) {
  std::vector<Vec3> nodes = rays;
  for (int p = 0; p <= lattice_n; ++p)
    for (int q = 0; q <= lattice_n - p; ++q) {
      const int s = lattice_n - p - q;
      Vec3 u(static_cast<double>(p), static_cast<double>(q), static_cast<double>(s));
      u.normalize();
      bool dup = false;
      for (const Vec3& r : rays)
        if ((u - r).norm() < 1e-9) {
          dup = true;
          break;
        }
      if (!dup) nodes.push_back(u);
    }
  return nodes;
}

// Weighted quadratic moving-least-squares estimate of a radius field at
// direction d from scattered (direction, radius) samples. An exact
// directional hit short-circuits the fit.
inline double mls_radius(const Vec3& d, const std::vector<Vec3>& dirs,
                         const std::vector<double>& vals, int k_neighbors) {
  const int n = static_cast<int>(dirs.size());
  const int K = std::min(k_neighbors, n);
  std::vector<std::pair<double, int>> dist(n);
  for (int j = 0; j < n; ++j) dist[j] = {(dirs[j] - d).squaredNorm(), j};
  std::partial_sort(dist.begin(), dist.begin() + K, dist.end());
  if (dist[0].first < 1e-18) return vals[dist[0].second];

  const Vec3 t1 = d.unitOrthogonal();
  const Vec3 t2 = d.cross(t1);
  const double h = std::max(std::sqrt(dist[K / 2].first), 1e-8);

  Eigen::MatrixXd X(K, 6);
  Eigen::VectorXd y(K);
  for (int a = 0; a < K; ++a) {
    const Vec3& e = dirs[dist[a].second];
    const double xi = (e - d).dot(t1), et = (e - d).dot(t2);
    const double w = std::exp(-dist[a].first / (h * h));
    const double sw = std::sqrt(w);
    X(a, 0) = sw;
    X(a, 1) = sw * xi;
    X(a, 2) = sw * et;
    X(a, 3) = sw * xi * xi;
    X(a, 4) = sw * xi * et;
    X(a, 5) = sw * et * et;
    y(a) = sw * vals[dist[a].second];
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() >= 6) {
    const double c0 = qr.solve(y)(0);
    if (std::isfinite(c0)) return c0;
  }
  // degenerate sample geometry: fall back to the weighted mean
  double num = 0.0, den = 0.0;
  for (int a = 0; a < K; ++a) {
    const double w = std::exp(-dist[a].first / (h * h));
    num += w * vals[dist[a].second];
    den += w;
  }
  return num / den;
}

// One graph-transform sweep: push the current radial graph through the map
// and reinterpolate it as a graph over the fixed node set.
template <class MapFn>
void advance(const MapFn& map, const std::vector<Vec3>& nodes, std::vector<double>& R,
             double r_cap) {
  const int n = static_cast<int>(nodes.size());
  std::vector<Vec3> img_dir(n);
  std::vector<double> img_rad(n);
  parallel_for(n, [&](int j) {
    const Vec3 y = map((R[j] * nodes[j]).eval());
    const double s = y.norm();
    if (s > 1e-300 && y.allFinite()) {
      img_dir[j] = y / s;
      img_rad[j] = s;
    } else {
      img_dir[j] = nodes[j];
      img_rad[j] = 1e-8;
    }
  });
  std::vector<double> Rn(n);
  parallel_for(n, [&](int i) {
    double v = mls_radius(nodes[i], img_dir, img_rad, 14);
    if (!std::isfinite(v)) v = R[i];
    Rn[i] = std::min(std::max(v, 1e-10), r_cap);
  });
  R = std::move(Rn);
}

template <class MapFn>
SimplexMesh graph_transform_mesh(const MapFn& map, const Mat3& A, double b,
                                 int n_rays, int k_iters, double radial_scale) {
  const std::vector<Vec3> rays = make_rays(n_rays);
  const std::vector<Vec3> nodes = make_nodes(rays, 40);
  const int n = static_cast<int>(nodes.size());

  double ax_min = std::numeric_limits<double>::infinity(), ax_max = 0.0;
  for (int i = 0; i < 3; ++i) {
    ax_min = std::min(ax_min, b / A(i, i));
    ax_max = std::max(ax_max, b / A(i, i));
  }
  // {x : x_i <= b/a_ii} is forward invariant and absorbing, so the simplex
  // radius along any direction is at most sqrt(3) ax_max (times the radial
  // scale rho* for the map version).
  const double r_lo0 = 0.02 * radial_scale * ax_min;
  const double r_hi0 = 2.0 * std::sqrt(3.0) * radial_scale * ax_max;
  std::vector<double> R_lo(n, r_lo0), R_hi(n, r_hi0);

  for (int it = 0; it < k_iters; ++it) {
    const std::vector<double> prev_lo = R_lo, prev_hi = R_hi;
    advance(map, nodes, R_lo, r_hi0);
    advance(map, nodes, R_hi, r_hi0);
    double delta = 0.0;
    for (int i = 0; i < n; ++i)
      delta = std::max({delta, std::abs(R_lo[i] - prev_lo[i]),
                        std::abs(R_hi[i] - prev_hi[i])});
    if (delta < 1e-13 * radial_scale * ax_max) break;
  }

  // consensus surface + honest widths: side gap and invariance defect
  std::vector<double> R(n);
  for (int i = 0; i < n; ++i) R[i] = 0.5 * (R_lo[i] + R_hi[i]);
  std::vector<double> widths(n);
  parallel_for(n, [&](int i) {
    const Vec3 y = map((R[i] * nodes[i]).eval());
    const double s = y.norm();
    double inv_defect = std::numeric_limits<double>::infinity();
    if (s > 1e-300 && y.allFinite())
      inv_defect = std::abs(s - mls_radius((y / s).eval(), nodes, R, 14));
    widths[i] = std::max(std::abs(R_hi[i] - R_lo[i]), inv_defect);
  });

  SimplexMesh mesh;
  mesh.rays = rays;
  const int nr = static_cast<int>(rays.size());
  mesh.radii.resize(nr);
  mesh.widths.resize(nr);
  mesh.ok.resize(nr);
  for (int i = 0; i < nr; ++i) {
    mesh.radii[i] = R[i];
    mesh.widths[i] = widths[i];
    mesh.ok[i] = (std::isfinite(R[i]) && std::isfinite(widths[i]) &&
                  widths[i] <= tolerances::bracket_target)
                     ? 1
                     : 0;
    if (!mesh.ok[i]) ++mesh.failed;
  }
  return mesh;
}

}  // namespace simplex_detail

// Carrying simplex of the return map P.
inline SimplexMesh approximate_carrying_simplex(const ModelSpec& s, int n_rays = 256,
                                                int k_iters = 96,
                                                double tol = tolerances::integrator) {
  require_valid(s);
  if (n_rays < 4 || k_iters < 1)
    throw ValidationError(errc::precondition_failed, "need n_rays >= 4, k_iters >= 1");
  if (!(s.A.diagonal().array() > 0.0).all())
    throw ValidationError(errc::precondition_failed,
                          "diagonal entries must be > 0 for the radial bracket");
  const DerivedConstants c = derive_constants(s);
  return simplex_detail::graph_transform_mesh(
      [&](const Vec3& x) { return poincare_map(s, x, tol); }, s.A, s.b, n_rays,
      k_iters, c.rho_star);
}

// Carrying simplex of the autonomous flow, computed through the time-h map.
// h defaults to 1/b; any h > 0 yields the same invariant surface, which is
// what the scaling test P-simplex = rho* flow-simplex exploits.
inline SimplexMesh approximate_carrying_simplex_flow(const Mat3& A, double b,
                                                     int n_rays = 256,
                                                     int k_iters = 96, double h = 0.0,
                                                     double tol = tolerances::integrator) {
  if (!(b > 0.0))
    throw ValidationError(errc::precondition_failed, "b must be > 0");
  if (std::abs(A.determinant()) <= eps_det(A))
    throw ValidationError(errc::degenerate_matrix,
                          "interaction matrix is numerically singular");
  if (n_rays < 4 || k_iters < 1)
    throw ValidationError(errc::precondition_failed, "need n_rays >= 4, k_iters >= 1");
  if (!(A.diagonal().array() > 0.0).all())
    throw ValidationError(errc::precondition_failed,
                          "diagonal entries must be > 0 for the radial bracket");
  if (h <= 0.0) h = 1.0 / b;
  return simplex_detail::graph_transform_mesh(
      [&](const Vec3& x) { return flow_autonomous(A, b, x, h, tol).state; }, A, b,
      n_rays, k_iters, 1.0);
}

struct HeteroclinicReport {
  bool present = false;                // boundary of Sigma_P is a heteroclinic cycle
  std::optional<bool> attracting;      // sign of vartheta; empty if |vartheta| ~ 0
  double vartheta = 0.0;
};

// The boundary is a heteroclinic cycle exactly when the gamma pattern is
// class 27 and no coordinate plane carries an interior fixed point.
inline HeteroclinicReport heteroclinic_cycle_check(const ModelSpec& s,
                                                   double tol = tolerances::integrator) {
  require_valid(s);
  HeteroclinicReport rep;
  rep.vartheta = compute_invariants(s).vartheta;
  const bool pattern = is_class_27(s).sigma.has_value();
  const bool no_planar = planar_fixed_points(s, tol).records.empty();
  rep.present = pattern && no_planar;
  if (rep.present && std::abs(rep.vartheta) > 1e-12) rep.attracting = rep.vartheta < 0.0;
  return rep;
}

struct PortraitRow {
  Vec3 x0 = Vec3::Zero();
  FateKind fate = FateKind::Undecided;
  Vec3 last = Vec3::Zero();                 // final iterate
  std::optional<Vec3> limit;                // for ConvergedTo
  int iterations = 0;
  bool boundary_flag = false;
  std::string matched;  // census record the limit coincides with, if any
};

struct PortraitSummary {
  std::vector<PortraitRow> rows;
  std::map<std::string, int> fate_counts;
  int boundary_ever = 0;  // rows whose orbit ever hugged the boundary
};

// n_init random starts, log-uniform per coordinate in [1e-3, 2 max(b/a_ii)],
// each iterated to its fate. Deterministic in rng_seed and independent of
// the worker count (per-index generators).
inline PortraitSummary sample_portrait(const ModelSpec& s, int n_init, int k_max,
                                       std::uint64_t rng_seed,
                                       double tol = tolerances::integrator) {
  require_valid(s);
  if (n_init < 1 || k_max < 1)
    throw ValidationError(errc::precondition_failed, "need n_init >= 1, k_max >= 1");
  if (!(s.A.diagonal().array() > 0.0).all())
    throw ValidationError(errc::precondition_failed,
                          "diagonal entries must be > 0 for the sampling box");

  const FixedPointCensus cen = census(s, {}, tol);
  double hi = 0.0;
  for (int i = 0; i < 3; ++i) hi = std::max(hi, 2.0 * s.b / s.A(i, i));
  const double lo = 1e-3;
  const double span = std::log(hi / lo);

  PortraitSummary sum;
  sum.rows.resize(n_init);
  parallel_for(n_init, [&](int i) {
    // splitmix64 per index: reproducible regardless of thread count. The
    // row key is avalanche-mixed so per-row streams do not overlap.
    const auto mix = [](std::uint64_t z) {
      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
      z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
      return z ^ (z >> 31);
    };
    std::uint64_t st =
        mix(rng_seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(i) + 1));
    const auto next_u01 = [&]() {
      st += 0x9E3779B97F4A7C15ULL;
      return static_cast<double>(mix(st) >> 11) * 0x1.0p-53;
    };
    PortraitRow row;
    for (int c = 0; c < 3; ++c) row.x0[c] = lo * std::exp(next_u01() * span);
    const OrbitTrace tr = iterate(s, row.x0, k_max, tol);
    row.fate = tr.fate.kind;
    row.last = tr.points.back();
    row.limit = tr.fate.limit;
    row.iterations = tr.fate.iterations;
    row.boundary_flag = tr.fate.boundary_flag;
    if (row.limit) {
      for (const FixedPointRecord& rec : cen.records) {
        if ((rec.location - *row.limit).norm() < 1e-4) {
          row.matched = kind_name(rec.kind);
          if (rec.which >= 0) row.matched += "(" + std::to_string(rec.which) + ")";
          break;
        }
      }
    }
    sum.rows[i] = std::move(row);
  });
  for (const PortraitRow& row : sum.rows) {
    ++sum.fate_counts[fate_name(row.fate)];
    if (row.boundary_flag) ++sum.boundary_ever;
  }
  return sum;
}

}  // namespace slv
