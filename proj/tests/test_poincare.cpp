#include <catch_amalgamated.hpp>

#include <slv/poincare.hpp>

#include <random>

#include "support/fixtures.hpp"

using namespace slv;
using fixtures::cyclic;
using fixtures::spec_with;

TEST_CASE("origin and interior equilibrium are fixed") {
  const ModelSpec s = spec_with(cyclic(1.2, 0.5));
  CHECK(poincare_map(s, Vec3::Zero()).norm() == 0.0);

  // rows of the cyclic matrix sum to 2.7, so x_hat = (1/2.7)(1,1,1) and the
  // scaled copy rho* x_hat returns to itself
  const Vec3 fp = Vec3::Constant(fixtures::kRhoStar / 2.7);
  CHECK((poincare_map(s, fp) - fp).norm() <= 1e-10);

  const ModelSpec s2 = spec_with(cyclic(1.5, 0.8));
  const Vec3 fp2 = Vec3::Constant(fixtures::kRhoStar / 3.3);
  CHECK((poincare_map(s2, fp2) - fp2).norm() <= 1e-10);
}

TEST_CASE("derivative at the origin is e^{r omega} I") {
  const ModelSpec s = spec_with(cyclic(1.2, 0.5));
  const auto [p0, dp0] = poincare_jacobian(s, Vec3::Zero());
  CHECK(p0.norm() == 0.0);
  const double want = std::exp(0.25);  // r omega = 0.25
  CHECK((dp0 - want * Mat3::Identity()).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("map and jacobian routes agree") {
  const ModelSpec s = spec_with(cyclic(1.5, 0.8));
  const Vec3 x(0.3, 0.7, 0.15);
  const auto [px, dpx] = poincare_jacobian(s, x);
  // the variational route integrates 12 equations with its own step sequence,
  // so the two states agree to integration tolerance only
  CHECK((px - poincare_map(s, x)).norm() <= 1e-9);
  // finite differences against the variational derivative
  const double h = 1e-6;
  for (int j = 0; j < 3; ++j) {
    Vec3 xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    const Vec3 col = (poincare_map(s, xp) - poincare_map(s, xm)) / (2.0 * h);
    CHECK((dpx.col(j) - col).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("conjugacy with the autonomous time-rho_hat map") {
  std::mt19937 rng(314159);
  std::uniform_real_distribution<double> ux(0.01, 1.0);

  SECTION("k = 0 and k = 1") {
    const ModelSpec s = spec_with(cyclic(1.2, 0.5));
    for (int rep = 0; rep < 5; ++rep) {
      const Vec3 x(ux(rng), ux(rng), ux(rng));
      CHECK(conjugacy_residual(s, x, 0) <= 1e-12);
      CHECK(conjugacy_residual(s, x, 1) <= 1e-8);
    }
  }
  SECTION("k = 50 on the degenerate cyclic case") {
    const ModelSpec s = spec_with(cyclic(1.5, 0.5));
    for (int rep = 0; rep < 5; ++rep) {
      const Vec3 x(ux(rng), ux(rng), ux(rng));
      CAPTURE(x.transpose());
      CHECK(conjugacy_residual(s, x, 50) <= 1e-6);
    }
  }
}

TEST_CASE("derivative has an entrywise positive inverse on the open orthant") {
  const ModelSpec s = spec_with(cyclic(1.2, 0.5));
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> ux(0.05, 1.0);
  for (int rep = 0; rep < 6; ++rep) {
    const Vec3 x(ux(rng), ux(rng), ux(rng));
    const auto [px, dpx] = poincare_jacobian(s, x);
    CHECK((Mat3(dpx.inverse()).array() > 0.0).all());
  }
}

TEST_CASE("distinct states map to distinct states") {
  const ModelSpec s = spec_with(cyclic(1.5, 0.8));
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> ux(0.02, 1.2);
  for (int rep = 0; rep < 5; ++rep) {
    const Vec3 x(ux(rng), ux(rng), ux(rng));
    Vec3 y(ux(rng), ux(rng), ux(rng));
    if ((x - y).norm() < 1e-3) y[0] += 0.01;
    CHECK((poincare_map(s, x) - poincare_map(s, y)).norm() > 0.0);
  }
}

TEST_CASE("iterate returns the full trace with consistent steps") {
  const ModelSpec s = spec_with(cyclic(1.5, 0.5));
  const Vec3 x0(0.4, 0.25, 0.3);
  const OrbitTrace tr = iterate(s, x0, 30);
  REQUIRE(tr.points.size() == 31);
  CHECK(tr.k == 30);
  CHECK((tr.points[0] - x0).norm() == 0.0);
  for (int i = 0; i < 5; ++i)
    CHECK((tr.points[i + 1] - poincare_map(s, tr.points[i])).norm() <= 1e-12);
}

TEST_CASE("fate: convergence to the interior attractor") {
  const ModelSpec s = spec_with(cyclic(1.2, 0.5));
  const OrbitTrace tr = iterate(s, Vec3(0.2, 0.3, 0.4), 5000);
  REQUIRE(tr.fate.kind == FateKind::ConvergedTo);
  REQUIRE(tr.fate.limit.has_value());
  const Vec3 fp = Vec3::Constant(fixtures::kRhoStar / 2.7);
  CHECK((*tr.fate.limit - fp).norm() <= 1e-6);
  CHECK(tr.fate.iterations <= 5000);
  CHECK(tr.points.size() == static_cast<size_t>(tr.k) + 1);
}

TEST_CASE("fate: orbit hugging the boundary heteroclinic cycle") {
  const ModelSpec s = spec_with(cyclic(1.5, 0.8));
  const OrbitTrace tr = iterate(s, Vec3(0.2, 0.3, 0.4), 2500);
  CHECK(tr.fate.boundary_flag);
  CHECK(tr.fate.kind == FateKind::NearBoundaryCycle);
}

TEST_CASE("fate: orbit covering an invariant closed curve") {
  const ModelSpec s = spec_with(cyclic(1.5, 0.5));
  const OrbitTrace tr = iterate(s, Vec3(0.4, 0.25, 0.3), 2000);
  CHECK(tr.fate.kind == FateKind::OnInvariantCurve);
  CHECK_FALSE(tr.fate.boundary_flag);
}

TEST_CASE("input validation") {
  const ModelSpec s = spec_with(cyclic(1.2, 0.5));
  CHECK_THROWS_AS(poincare_map(s, Vec3(-0.1, 0.2, 0.3)), ValidationError);
  CHECK_THROWS_AS(iterate(s, Vec3(0.1, 0.2, 0.3), -1), ValidationError);
  ModelSpec bad = s;
  bad.mu = 10.0;  // r = b phi - mu (1 - phi) < 0
  CHECK_THROWS_MATCHES(poincare_map(bad, Vec3(0.1, 0.2, 0.3)), ValidationError,
                       Catch::Matchers::Predicate<ValidationError>([](const ValidationError& e) {
                         return e.code() == errc::r_invalid;
                       }));
}
