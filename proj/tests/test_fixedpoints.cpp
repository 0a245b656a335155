#include <catch_amalgamated.hpp>

#include <slv/fixedpoints.hpp>

#include <complex>

#include "support/fixtures.hpp"

using namespace slv;
using fixtures::cyclic;
using fixtures::kRhoStar;
using fixtures::spec_with;

namespace {

// Transverse multiplier pair of DP at the interior fixed point of a cyclic
// system, from the circulant eigenvalues of A: the non-Perron eigenvalues of
// cyclic(alpha, beta) are (1 - (alpha+beta)/2) +- i (alpha-beta) sqrt(3)/2,
// the interior equilibrium is 1/(1+alpha+beta) (1,1,1), and the multiplier is
// exp(rho_hat * mu) for each eigenvalue mu of Df.
std::complex<double> cyclic_pair_multiplier(double alpha, double beta, double rho_hat) {
  const double rowsum = 1.0 + alpha + beta;
  const std::complex<double> lamA(1.0 - (alpha + beta) / 2.0,
                                  (alpha - beta) * std::sqrt(3.0) / 2.0);
  return std::exp(-rho_hat / rowsum * lamA);
}

int count_outside(const FixedPointRecord& r) {
  int n = 0;
  for (const auto& ev : r.eigenvalues)
    if (std::abs(ev) > 1.0) ++n;
  return n;
}

}  // namespace

TEST_CASE("origin record") {
  const auto rec = origin_fixed_point(spec_with(cyclic(1.2, 0.5)));
  CHECK(rec.kind == FpKind::Origin);
  CHECK(rec.location.norm() == 0.0);
  CHECK(rec.index == -1);
  CHECK(rec.stability == Stability::Repeller);
  CHECK_FALSE(rec.nonhyperbolic_warning);
  const double want = std::exp(0.25);  // r omega
  for (const auto& ev : rec.eigenvalues) CHECK(std::abs(ev - want) <= 1e-9);
}

TEST_CASE("axial records: locations and exact multipliers") {
  // a_ii = 1, so all three one-species points sit at rho* e_i; on axis i the
  // invader j grows at rate b - a_ji (b / a_ii), so its multiplier is
  // exp(rate * rho_hat), and the radial multiplier is always e^{-b rho_hat}
  const auto recs = axial_fixed_points(spec_with(cyclic(1.2, 0.5)));
  REQUIRE(recs.size() == 3);
  const double e_rad = std::exp(-0.25), e_dn = std::exp(-0.05), e_up = std::exp(0.125);
  for (const auto& rec : recs) {
    CAPTURE(rec.which);
    CHECK(rec.kind == FpKind::Axial);
    Vec3 want = Vec3::Zero();
    want[rec.which] = kRhoStar;
    CHECK((rec.location - want).norm() <= 1e-9);
    CHECK(std::abs(rec.eigenvalues[0] - e_rad) <= 1e-9);
    CHECK(std::abs(rec.eigenvalues[1] - e_dn) <= 1e-9);
    CHECK(std::abs(rec.eigenvalues[2] - e_up) <= 1e-9);
    CHECK(rec.index == -1);  // exactly one multiplier outside the unit circle
    CHECK(rec.stability == Stability::Saddle);
    CHECK(rec.residual <= 1e-8);
  }

  // non-symmetric diagonal: locations scale as (b / a_ii) rho*
  const auto c26 = axial_fixed_points(spec_with(fixtures::class26()));
  for (const auto& rec : c26) {
    const double aii = fixtures::class26()(rec.which, rec.which);
    CHECK(std::abs(rec.location[rec.which] - kRhoStar / aii) <= 1e-9);
  }
}

TEST_CASE("planar records: decoupled case and rational restricted solutions") {
  SECTION("identity matrix: all three planes, saddle with known spectrum") {
    const auto pl = planar_fixed_points(spec_with(Mat3::Identity()));
    REQUIRE(pl.records.size() == 3);
    CHECK(pl.warnings.empty());
    for (const auto& rec : pl.records) {
      CAPTURE(rec.which);
      CHECK(rec.kind == FpKind::Planar);
      CHECK(rec.location[rec.which] == 0.0);
      for (int i = 0; i < 3; ++i)
        if (i != rec.which) CHECK(std::abs(rec.location[i] - kRhoStar) <= 1e-9);
      // species decouple: two contracting logistic directions, one invader
      CHECK(std::abs(rec.eigenvalues[0] - std::exp(-0.25)) <= 1e-8);
      CHECK(std::abs(rec.eigenvalues[1] - std::exp(-0.25)) <= 1e-8);
      CHECK(std::abs(rec.eigenvalues[2] - std::exp(0.25)) <= 1e-8);
      CHECK(rec.index == -1);
      CHECK(rec.stability == Stability::Saddle);
    }
  }
  SECTION("two-plane case with rational solutions") {
    // restricted 2x2 solves give exact fractions of rho* for this matrix
    const auto pl = planar_fixed_points(spec_with(fixtures::class26()));
    REQUIRE(pl.records.size() == 2);
    const auto& p0 = pl.records[0];  // plane x_0 = 0
    REQUIRE(p0.which == 0);
    CHECK(std::abs(p0.location[1] - kRhoStar * 5.0 / 7.0) <= 1e-9);
    CHECK(std::abs(p0.location[2] - kRhoStar * 3.0 / 7.0) <= 1e-9);
    const auto& p1 = pl.records[1];  // plane x_1 = 0
    REQUIRE(p1.which == 1);
    CHECK(std::abs(p1.location[0] - kRhoStar * 20.0 / 59.0) <= 1e-9);
    CHECK(std::abs(p1.location[2] - kRhoStar * 8.0 / 59.0) <= 1e-9);
  }
}

TEST_CASE("interior record: cyclic attractor") {
  const auto recs = positive_fixed_points(spec_with(cyclic(1.2, 0.5)));
  REQUIRE(recs.size() == 1);
  const auto& rec = recs[0];
  CHECK(rec.kind == FpKind::Positive);
  CHECK((rec.location - Vec3::Constant(kRhoStar / 2.7)).norm() <= 1e-9);
  CHECK(rec.index == +1);
  CHECK(rec.stability == Stability::Attractor);
  CHECK_FALSE(rec.nonhyperbolic_warning);
  // radial multiplier first (smallest modulus), then the conjugate pair
  CHECK(std::abs(rec.eigenvalues[0] - std::exp(-0.25)) <= 1e-9);
  const std::complex<double> want = cyclic_pair_multiplier(1.2, 0.5, 0.25);
  CHECK(std::abs(rec.eigenvalues[1] - std::conj(rec.eigenvalues[2])) <= 1e-9);
  CHECK(std::abs(std::abs(rec.eigenvalues[1]) - std::abs(want)) <= 1e-9);
  CHECK(std::abs(rec.eigenvalues[1].real() - want.real()) <= 1e-9);
  CHECK(std::abs(std::abs(rec.eigenvalues[1].imag()) - std::abs(want.imag())) <= 1e-9);
}

TEST_CASE("interior record: symmetric repeller with a double multiplier") {
  // A = 2 ones - I has eigenvalues {5, -1, -1}: the interior point 0.2 rho* 1
  // has transverse rates +0.2 b, giving a double multiplier e^{0.05} > 1.
  // Individual eigenvalues of a double root are ill-conditioned, so assert
  // the (stable) symmetric functions instead.
  const Mat3 A = 2.0 * Mat3::Ones() - Mat3::Identity();
  const auto recs = positive_fixed_points(spec_with(A));
  REQUIRE(recs.size() == 1);
  const auto& rec = recs[0];
  CHECK((rec.location - Vec3::Constant(0.2 * kRhoStar)).norm() <= 1e-9);
  CHECK(rec.index == +1);  // det A = 5 > 0, two multipliers outside
  CHECK(rec.stability == Stability::Repeller);
  CHECK(count_outside(rec) == 2);
  const std::complex<double> sum = rec.eigenvalues[1] + rec.eigenvalues[2];
  const std::complex<double> prod = rec.eigenvalues[1] * rec.eigenvalues[2];
  CHECK(std::abs(sum - 2.0 * std::exp(0.05)) <= 1e-6);
  CHECK(std::abs(prod - std::exp(0.1)) <= 1e-6);
}

TEST_CASE("interior record: negative determinant gives a one-dimensional escape") {
  // rows of this matrix all sum to 3, so the interior point is rho*/3 (1,1,1)
  const auto recs = positive_fixed_points(spec_with(fixtures::detneg()));
  REQUIRE(recs.size() == 1);
  const auto& rec = recs[0];
  CHECK((rec.location - Vec3::Constant(kRhoStar / 3.0)).norm() <= 1e-9);
  CHECK(rec.index == -1);  // det A < 0: exactly one multiplier outside
  CHECK(count_outside(rec) == 1);
  CHECK(rec.stability == Stability::Saddle);
}

TEST_CASE("interior record: general matrix against a direct linear solve") {
  const Mat3 A = fixtures::class26();
  const Vec3 xhat = A.fullPivLu().solve(Vec3::Constant(1.0));
  REQUIRE((xhat.array() > 0.0).all());
  const auto recs = positive_fixed_points(spec_with(A));
  REQUIRE(recs.size() == 1);
  CHECK((recs[0].location - kRhoStar * xhat).norm() <= 1e-9);
  CHECK(recs[0].index == +1);
  CHECK(recs[0].stability == Stability::Repeller);
}

TEST_CASE("census: composition, ordering, and residuals") {
  SECTION("identity matrix: eight points in a fixed order") {
    const auto c = census(spec_with(Mat3::Identity()));
    REQUIRE(c.records.size() == 8);
    const std::array<FpKind, 8> kinds = {FpKind::Origin, FpKind::Axial,  FpKind::Axial,
                                         FpKind::Axial,  FpKind::Planar, FpKind::Planar,
                                         FpKind::Planar, FpKind::Positive};
    const std::array<int, 8> whichs = {-1, 2, 1, 0, 0, 1, 2, -1};
    for (int i = 0; i < 8; ++i) {
      CAPTURE(i);
      CHECK(c.records[i].kind == kinds[i]);
      CHECK(c.records[i].which == whichs[i]);
      CHECK(c.records[i].residual <= 1e-8);
    }
    CHECK((c.records[7].location - Vec3::Constant(kRhoStar)).norm() <= 1e-9);
  }
  SECTION("negative determinant: seven points, one plane empty") {
    const auto c = census(spec_with(fixtures::detneg()));
    REQUIRE(c.records.size() == 7);
    int n_axial = 0, n_planar = 0, n_positive = 0;
    for (const auto& r : c.records) {
      if (r.kind == FpKind::Axial) ++n_axial;
      if (r.kind == FpKind::Planar) ++n_planar;
      if (r.kind == FpKind::Positive) ++n_positive;
      CHECK(r.residual <= 1e-8);
    }
    CHECK(n_axial == 3);
    CHECK(n_planar == 2);
    CHECK(n_positive == 1);
    CHECK(c.warnings.empty());
    for (size_t i = 1; i < c.records.size(); ++i)
      CHECK(static_cast<int>(c.records[i - 1].kind) <= static_cast<int>(c.records[i].kind));
  }
}

TEST_CASE("nonhyperbolic pair is flagged, hyperbolic census is clean") {
  // alpha + beta = 2 puts the transverse pair exactly on the unit circle
  const auto degen = census(spec_with(cyclic(1.5, 0.5)));
  const FixedPointRecord* pos = nullptr;
  for (const auto& r : degen.records)
    if (r.kind == FpKind::Positive) pos = &r;
  REQUIRE(pos != nullptr);
  CHECK(pos->nonhyperbolic_warning);
  CHECK(pos->stability == Stability::Nonhyperbolic);
  CHECK(std::abs(std::abs(pos->eigenvalues[1]) - 1.0) <= 1e-7);
  CHECK(std::abs(std::abs(pos->eigenvalues[2]) - 1.0) <= 1e-7);

  for (const auto& r : census(spec_with(cyclic(1.2, 0.5))).records)
    CHECK_FALSE(r.nonhyperbolic_warning);
}

TEST_CASE("time-averaged orbit identity at fixed points") {
  // at a fixed point theta of P, the good-season time average theta_hat
  // satisfies A theta_hat = r 1
  for (const Mat3& A : {cyclic(1.2, 0.5), fixtures::detneg(), fixtures::class26()}) {
    const ModelSpec s = spec_with(A);
    const auto recs = positive_fixed_points(s);
    REQUIRE(recs.size() == 1);
    CHECK(theta_hat_check(s, recs[0].location).norm() <= 1e-6);
  }
  // a non-fixed interior point is rejected outright
  CHECK_THROWS_MATCHES(theta_hat_check(spec_with(cyclic(1.2, 0.5)), Vec3::Constant(0.3)),
                       ValidationError,
                       Catch::Matchers::Predicate<ValidationError>([](const ValidationError& e) {
                         return e.code() == errc::precondition_failed;
                       }));
}

TEST_CASE("eigenvalue identity report at interior points") {
  SECTION("cyclic attractor") {
    const ModelSpec s = spec_with(cyclic(1.2, 0.5));
    const auto rep = eigen_identity_report(s, Vec3::Constant(kRhoStar / 2.7));
    CHECK(rep.dp_expm_err <= 1e-6);
    CHECK(rep.radial_eig_err <= 1e-8);
    CHECK(rep.radial_angle <= 1e-5);
    // pair sum of Df(x_hat): -(2/rowsum)(1 - (alpha+beta)/2) = -1/9
    CHECK(std::abs(rep.pair_sum - (-1.0 / 9.0)) <= 1e-9);
    CHECK(std::abs(rep.pair_sum - rep.pair_sum_target) <=
          1e-6 * std::max(1.0, std::abs(rep.pair_sum_target)));
    CHECK(rep.pair_product_sign_ok);
  }
  SECTION("negative determinant") {
    const ModelSpec s = spec_with(fixtures::detneg());
    const auto rep = eigen_identity_report(s, Vec3::Constant(kRhoStar / 3.0));
    CHECK(rep.dp_expm_err <= 1e-6);
    CHECK(rep.radial_eig_err <= 1e-8);
    CHECK(rep.radial_angle <= 1e-5);
    CHECK(std::abs(rep.pair_sum - rep.pair_sum_target) <=
          1e-6 * std::max(1.0, std::abs(rep.pair_sum_target)));
    CHECK(rep.pair_product_sign_ok);
  }
}

TEST_CASE("extra seeds deduplicate against the principal point") {
  const ModelSpec s = spec_with(cyclic(1.2, 0.5));
  const Vec3 fp = Vec3::Constant(kRhoStar / 2.7);
  const auto recs = positive_fixed_points(s, {fp, fp + Vec3::Constant(1e-8), Vec3(0.1, 0.2, 0.3)});
  CHECK(recs.size() == 1);
}

TEST_CASE("error paths") {
  SECTION("nonpositive diagonal entry") {
    Mat3 A = Mat3::Identity();
    A(1, 1) = -1.0;
    CHECK_THROWS_MATCHES(axial_fixed_points(spec_with(A)), ValidationError,
                         Catch::Matchers::Predicate<ValidationError>(
                             [](const ValidationError& e) {
                               return e.code() == errc::precondition_failed;
                             }));
  }
  SECTION("singular matrix") {
    CHECK_THROWS_MATCHES(autonomous_positive_equilibrium(Mat3::Ones(), 1.0), ValidationError,
                         Catch::Matchers::Predicate<ValidationError>(
                             [](const ValidationError& e) {
                               return e.code() == errc::degenerate_matrix;
                             }));
  }
  SECTION("no positive equilibrium") {
    Mat3 A = Mat3::Identity();
    A(1, 0) = 4.0;  // x1 = 1 forces x2 = -3
    CHECK_FALSE(autonomous_positive_equilibrium(A, 1.0).has_value());
    CHECK(positive_fixed_points(spec_with(A)).empty());
  }
}
