#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "dense_oracle.hpp"
#include "ns2d/errors.hpp"
#include "ns2d/rng.hpp"
#include "ns2d/stokes_basis.hpp"
#include "support.hpp"

using namespace ns2d;

namespace {
const double kNu = 0.05;
}

TEST_CASE("basis invariants at n=16, k=8") {
  const StokesEigenbasis& B = ns2d_test::basis(16, kNu, 8);
  CHECK_NOTHROW(verify_basis(B));
  for (int a = 0; a < B.k; ++a) {
    for (int b = 0; b < B.k; ++b) {
      const double d = inner_L2(B.grid, B.modes[a], B.modes[b]) - (a == b ? 1.0 : 0.0);
      CHECK(std::abs(d) <= 1e-10);
    }
    CHECK(max_abs_div(B.grid, B.modes[a]) <= 1e-10);
    if (a > 0) CHECK(B.lambdas[a] >= B.lambdas[a - 1]);
    // Rayleigh quotient against the quadrature H1 norm
    const double h1 = norm_H1(B.grid, B.modes[a]);
    const double rq = kNu * h1 * h1 / inner_L2(B.grid, B.modes[a], B.modes[a]);
    CHECK(std::abs(rq - B.lambdas[a]) <= 1e-8 * B.lambdas[a]);
  }
}

TEST_CASE("eigenvalues match the dense projected-operator oracle") {
  const StokesEigenbasis& B = ns2d_test::basis(16, kNu, 8);
  const std::vector<double> ref = ns2d_test::dense_stokes_eigenvalues(B.grid, kNu, 8);
  for (int j = 0; j < 8; ++j) {
    CHECK(std::abs(B.lambdas[j] - ref[j]) <= 1e-6 * ref[j]);
  }
}

TEST_CASE("lambda_1 is grid-converged") {
  const StokesEigenbasis& a = ns2d_test::basis(12, kNu, 1);
  const StokesEigenbasis& b = ns2d_test::basis(24, kNu, 1);
  CHECK(std::abs(a.lambdas[0] - b.lambdas[0]) <= 0.02 * b.lambdas[0]);
}

TEST_CASE("stokes_apply") {
  const StokesEigenbasis& B = ns2d_test::basis(16, kNu, 8);
  const Grid& g = B.grid;

  SUBCASE("zero maps to zero") {
    VelocityField z(g);
    CHECK(max_abs(stokes_apply(g, kNu, z)) == 0.0);
  }

  SUBCASE("eigenpair residual") {
    for (int j = 0; j < B.k; ++j) {
      VelocityField r = axpy(-B.lambdas[j], B.modes[j], stokes_apply(g, kNu, B.modes[j]));
      CHECK(std::sqrt(inner_L2(g, r, r)) <= 1e-8 * B.lambdas[j]);
    }
  }

  SUBCASE("linearity") {
    Rng rng(7);
    VelocityField y1 = random_divfree_field(g, rng);
    VelocityField y2 = random_divfree_field(g, rng);
    VelocityField lhs = stokes_apply(g, kNu, axpy(1.0, y1, y2));
    VelocityField rhs = axpy(1.0, stokes_apply(g, kNu, y1), stokes_apply(g, kNu, y2));
    double worst = 0.0;
    for (size_t i = 0; i < lhs.u.size(); ++i) worst = std::max(worst, std::abs(lhs.u[i] - rhs.u[i]));
    for (size_t i = 0; i < lhs.v.size(); ++i) worst = std::max(worst, std::abs(lhs.v[i] - rhs.v[i]));
    CHECK(worst <= 1e-12 * std::max(1.0, max_abs(lhs)));
  }

  SUBCASE("non-divergence-free input rejected with the measured value") {
    Rng rng(9);
    VelocityField y = random_noslip_field(g, rng);
    CHECK_THROWS_AS(stokes_apply(g, kNu, y), PreconditionError);
  }
}

TEST_CASE("fractional powers") {
  const StokesEigenbasis& B = ns2d_test::basis(16, kNu, 8);
  const Grid& g = B.grid;
  Rng rng(13);
  std::vector<double> c(B.k);
  for (double& x : c) x = rng.gaussian();
  VelocityField y = reconstruct(B, c);

  SUBCASE("alpha = 0 is the span projection") {
    VelocityField p = frac_power_apply(B, 0.0, y);
    double worst = 0.0;
    for (size_t i = 0; i < y.u.size(); ++i) worst = std::max(worst, std::abs(p.u[i] - y.u[i]));
    CHECK(worst <= 1e-10);
  }

  SUBCASE("semigroup: half twice equals one") {
    VelocityField twice = frac_power_apply(B, 0.5, frac_power_apply(B, 0.5, y));
    VelocityField once = frac_power_apply(B, 1.0, y);
    const double diff = std::sqrt(inner_L2(g, axpy(-1.0, once, twice), axpy(-1.0, once, twice)));
    CHECK(diff <= 1e-10 * std::sqrt(inner_L2(g, once, once)));
  }

  SUBCASE("half twice equals project-then-apply") {
    VelocityField twice = frac_power_apply(B, 0.5, frac_power_apply(B, 0.5, y));
    VelocityField direct = stokes_apply(g, kNu, frac_power_apply(B, 0.0, y));
    const double diff = std::sqrt(inner_L2(g, axpy(-1.0, direct, twice), axpy(-1.0, direct, twice)));
    CHECK(diff <= 1e-8 * std::sqrt(inner_L2(g, direct, direct)));
  }

  SUBCASE("graph norm of A^1/2 realizes the H1 norm") {
    // at nu = 1 the ratio is 1; at general nu the identity picks up sqrt(nu)
    const StokesEigenbasis& B1 = ns2d_test::basis(12, 1.0, 6);
    Rng rng2(17);
    for (int rep = 0; rep < 100; ++rep) {
      std::vector<double> cc(B1.k);
      for (double& x : cc) x = rng2.gaussian();
      VelocityField z = reconstruct(B1, cc);
      VelocityField az = frac_power_apply(B1, 0.5, z);
      const double ratio = norm_H1(B1.grid, z) / std::sqrt(inner_L2(B1.grid, az, az));
      CHECK(ratio >= 0.9);
      CHECK(ratio <= 1.1);
    }
    // scaled identity at the working viscosity
    VelocityField az = frac_power_apply(B, 0.5, y);
    const double ratio = std::sqrt(kNu) * norm_H1(g, y) / std::sqrt(inner_L2(g, az, az));
    CHECK(std::abs(ratio - 1.0) <= 1e-8);
  }
}

TEST_CASE("basis cache round-trip") {
  const StokesEigenbasis& B = ns2d_test::basis(12, kNu, 5);
  const std::string path = "basis_test.stkb";
  save_basis(B, path);

  SUBCASE("bit-identical round trip") {
    StokesEigenbasis L = load_basis(path);
    CHECK(L.grid.n == B.grid.n);
    CHECK(L.nu == B.nu);
    REQUIRE(L.k == B.k);
    for (int j = 0; j < B.k; ++j) {
      CHECK(L.lambdas[j] == B.lambdas[j]);
      CHECK(L.modes[j].u == B.modes[j].u);
      CHECK(L.modes[j].v == B.modes[j].v);
    }
  }

  SUBCASE("truncated file is a format error") {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    std::ofstream out("basis_trunc.stkb", std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    out.close();
    CHECK_THROWS_AS(load_basis("basis_trunc.stkb"), FormatError);
    std::remove("basis_trunc.stkb");
  }

  SUBCASE("bad magic is a format error") {
    std::ofstream out("basis_magic.stkb", std::ios::binary | std::ios::trunc);
    out.write("NOPE", 4);
    out.close();
    CHECK_THROWS_AS(load_basis("basis_magic.stkb"), FormatError);
    std::remove("basis_magic.stkb");
  }

  SUBCASE("grid mismatch is an integrity error naming both sizes") {
    try {
      load_basis(path, 16);
      CHECK(false);
    } catch (const IntegrityError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("n=12") != std::string::npos);
      CHECK(msg.find("n=16") != std::string::npos);
    }
  }

  std::remove(path.c_str());
}

TEST_CASE("determinism of the eigensolver") {
  Grid g = build_grid(12);
  StokesEigenbasis a = compute_eigenbasis(g, kNu, 4);
  StokesEigenbasis b = compute_eigenbasis(g, kNu, 4);
  for (int j = 0; j < 4; ++j) {
    CHECK(a.lambdas[j] == b.lambdas[j]);
    CHECK(a.modes[j].u == b.modes[j].u);
    CHECK(a.modes[j].v == b.modes[j].v);
  }
}

TEST_CASE("capacity bounds") {
  Grid g = build_grid(8);
  CHECK(divfree_capacity(g) == 49);
  CHECK_THROWS_AS(compute_eigenbasis(g, kNu, 50), ConfigError);
  CHECK_THROWS_AS(compute_eigenbasis(g, kNu, 0), ConfigError);
}
