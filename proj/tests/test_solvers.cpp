/// @file test_solvers.cpp
/// @brief Round-trip, linearity, determinism, and residual-contract tests for
///        the constant-coefficient velocity–pressure and magnetic solvers.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "savmhd/errors.hpp"
#include "savmhd/fields.hpp"
#include "savmhd/operators.hpp"
#include "savmhd/solvers.hpp"
#include "testutil.hpp"

using namespace savmhd;
using testutil::FieldGen;

namespace {

/// Random discretely divergence-free velocity (vector curl of a node stream
/// function that vanishes on the boundary) — an exact solution candidate.
VectorField random_solenoidal_velocity(const StaggeredGrid& g, unsigned long long seed) {
  FieldGen gen(seed);
  const ScalarField psi = gen.nodes(g, true);
  VectorField w = curl_scalar(g, psi);
  w.bc = VectorBC::Velocity;
  return w;
}

ScalarField random_zero_mean_pressure(const StaggeredGrid& g, unsigned long long seed) {
  FieldGen gen(seed + 77);
  ScalarField p = gen.cells(g);
  const double m = cell_mean(g, p);
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n(); ++i) p.a(i, j) -= m;
  return p;
}

}  // namespace

TEST_CASE("velocity-pressure solver rejects non-positive coefficients", "[solvers]") {
  const StaggeredGrid g(8);
  REQUIRE_THROWS_AS(StokesSolver(g, 0.0, 0.01), std::invalid_argument);
  REQUIRE_THROWS_AS(StokesSolver(g, -1.0, 0.01), std::invalid_argument);
  REQUIRE_THROWS_AS(StokesSolver(g, 1.0, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(MagneticSolver(g, 0.0, 0.01), std::invalid_argument);
  REQUIRE_THROWS_AS(MagneticSolver(g, 1.0, -0.5), std::invalid_argument);
}

TEST_CASE("velocity-pressure solver recovers manufactured discrete solutions",
          "[solvers]") {
  const StaggeredGrid g(16);
  const double sigma = 16.0, nu = 0.01;
  const StokesSolver solver(g, sigma, nu);

  for (int kcase = 0; kcase < 5; ++kcase) {
    const VectorField w = random_solenoidal_velocity(g, 100 + kcase);
    const ScalarField p0 = random_zero_mean_pressure(g, 200 + kcase);
    // f = sigma*w - nu*lap(w) + grad(p0): then (w, p0) solves the system.
    const VectorField f = lincomb(
        1.0, lincomb(sigma, w, -nu, laplacian_velocity(g, w)), 1.0, gradient(g, p0));

    const StokesSolver::Result r = solver.solve(f);
    REQUIRE(testutil::rel_l2_diff(g, r.u, w) <= 1e-10);
    REQUIRE(testutil::rel_l2_diff(g, r.p, p0) <= 1e-10);
    REQUIRE(r.residual_momentum <= kSolveResidualTol);
    REQUIRE(r.residual_divergence <= kSolveResidualTol);
    REQUIRE(has_zero_normal_boundary(r.u));
  }
}

TEST_CASE("velocity-pressure solver: zero forcing and pure-gradient forcing",
          "[solvers]") {
  const StaggeredGrid g(12);
  const StokesSolver solver(g, 4.0, 0.05);

  SECTION("zero forcing gives the zero state") {
    const auto r = solver.solve(VectorField::zeros(g, VectorBC::None));
    REQUIRE(testutil::max_abs(r.u.x) <= 1e-14);
    REQUIRE(testutil::max_abs(r.u.y) <= 1e-14);
    REQUIRE(testutil::max_abs(r.p.a) <= 1e-14);
  }

  SECTION("gradient forcing is absorbed entirely by the pressure") {
    const ScalarField p0 = random_zero_mean_pressure(g, 31);
    const auto r = solver.solve(gradient(g, p0));
    const double pscale = testutil::max_abs(p0.a);
    REQUIRE(testutil::max_abs(r.u.x) <= 1e-11 * pscale);
    REQUIRE(testutil::max_abs(r.u.y) <= 1e-11 * pscale);
    REQUIRE(testutil::rel_l2_diff(g, r.p, p0) <= 1e-10);
  }
}

TEST_CASE("velocity-pressure solver is linear and deterministic", "[solvers]") {
  const StaggeredGrid g(12);
  const StokesSolver solver(g, 9.0, 0.02);
  FieldGen gen(555);
  const VectorField f1 = gen.faces(g, VectorBC::None, false);
  const VectorField f2 = gen.faces(g, VectorBC::None, false);

  SECTION("superposition") {
    const auto ra = solver.solve(f1);
    const auto rb = solver.solve(f2);
    const auto rc = solver.solve(lincomb(1.0, f1, 1.0, f2));
    const VectorField usum = lincomb(1.0, ra.u, 1.0, rb.u);
    const ScalarField psum = lincomb(1.0, ra.p, 1.0, rb.p);
    REQUIRE(testutil::rel_l2_diff(g, rc.u, usum) <= 1e-12);
    REQUIRE(testutil::rel_l2_diff(g, rc.p, psum) <= 1e-12);
  }

  SECTION("two factorizations of the same system agree bitwise") {
    const StokesSolver other(g, 9.0, 0.02);
    const auto ra = solver.solve(f1);
    const auto rb = other.solve(f1);
    REQUIRE((ra.u.x - rb.u.x).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE((ra.u.y - rb.u.y).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE((ra.p.a - rb.p.a).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("one factorization serves many right-hand sides within the residual "
          "contract",
          "[solvers]") {
  const StaggeredGrid g(16);
  const StokesSolver solver(g, 64.0, 0.01);
  for (int kcase = 0; kcase < 100; ++kcase) {
    FieldGen gen(4000 + kcase);
    const auto r = solver.solve(gen.faces(g, VectorBC::None, false));
    REQUIRE(r.residual_momentum <= kSolveResidualTol);
    REQUIRE(r.residual_divergence <= kSolveResidualTol);
    REQUIRE(std::abs(cell_mean(g, r.p)) <= 1e-13 * (1.0 + testutil::max_abs(r.p.a)));
  }
}

TEST_CASE("solved pressure never feeds energy into the velocity", "[solvers]") {
  const StaggeredGrid g(16);
  const StokesSolver solver(g, 16.0, 0.01);
  for (int kcase = 0; kcase < 10; ++kcase) {
    FieldGen gen(6100 + kcase);
    const auto r = solver.solve(gen.faces(g, VectorBC::None, false));
    // ⟨∇p, u⟩ = -⟨p, ∇·u⟩ vanishes with the divergence residual.
    const double pairing = inner_product(g, gradient(g, r.p), r.u);
    const double scale = (1.0 + norms(g, r.u).l2) * (1.0 + norms(g, r.p).l2);
    REQUIRE(std::abs(pairing) <= 1e-10 * scale);
  }
}

TEST_CASE("magnetic solver recovers manufactured discrete solutions", "[solvers]") {
  const StaggeredGrid g(16);
  const double sigma = 16.0, eta = 0.01;
  const MagneticSolver solver(g, sigma, eta);

  for (int kcase = 0; kcase < 5; ++kcase) {
    FieldGen gen(300 + kcase);
    const VectorField b0 = gen.faces(g, VectorBC::MagneticNormal, true);
    const VectorField elliptic = lincomb(1.0, curl_scalar(g, curl2d(g, b0)), -1.0,
                                         gradient(g, divergence(g, b0)));
    const VectorField f = lincomb(sigma, b0, eta, elliptic);
    const auto r = solver.solve(f);
    REQUIRE(testutil::rel_l2_diff(g, r.b, b0) <= 1e-10);
    REQUIRE(r.residual <= kSolveResidualTol);
    REQUIRE(has_zero_normal_boundary(r.b));
  }
}

TEST_CASE("magnetic solver is homogeneous of degree one and deterministic",
          "[solvers]") {
  const StaggeredGrid g(12);
  const MagneticSolver solver(g, 4.0, 0.3);
  FieldGen gen(808);
  const VectorField f = gen.faces(g, VectorBC::None, false);

  SECTION("scaling") {
    const auto r1 = solver.solve(f);
    const auto r3 = solver.solve(lincomb(3.0, f, 0.0, f));
    const VectorField scaled = lincomb(3.0, r1.b, 0.0, r1.b);
    REQUIRE(testutil::rel_l2_diff(g, r3.b, scaled) <= 1e-13);
  }

  SECTION("bitwise determinism across factorizations") {
    const MagneticSolver other(g, 4.0, 0.3);
    const auto ra = solver.solve(f);
    const auto rb = other.solve(f);
    REQUIRE((ra.b.x - rb.b.x).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE((ra.b.y - rb.b.y).cwiseAbs().maxCoeff() == 0.0);
  }
}
