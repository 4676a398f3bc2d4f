#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "ns2d/sensitivity.hpp"
#include "ns2d/rng.hpp"
#include "support.hpp"

using namespace ns2d;

namespace {

const double kNu = 0.05;

struct Scenario {
  const StokesEigenbasis* B;
  const TrilinearTensor* T3;
  GalerkinConfig cfg;
  ForceSpec f, g;
  std::vector<double> c0;
};

// the standard regression scenario: n=32, k=32, nu=0.05, smooth f and g
Scenario regression_scenario() {
  Scenario s;
  s.B = &ns2d_test::basis(32, kNu, 32);
  s.T3 = &ns2d_test::tensor(32, kNu, 32);
  s.cfg.nu = kNu;
  s.cfg.nu0 = 1.0;
  s.cfg.dt = 2e-3;
  s.cfg.T = 0.5;
  const StokesEigenbasis& B = *s.B;
  s.f = ForceSpec::regular([&B](const Grid&, double t) {
    std::vector<double> c(B.k, 0.0);
    c[0] = 0.5 * std::cos(2.0 * t);
    c[3] = 0.3;
    c[7] = 0.2 * std::sin(3.0 * t);
    return reconstruct(B, c);
  });
  s.g = ForceSpec::regular([&B](const Grid&, double t) {
    std::vector<double> c(B.k, 0.0);
    c[1] = 0.8;
    c[4] = 0.5 * std::cos(t);
    c[10] = 0.3;
    return reconstruct(B, c);
  });
  s.c0.assign(B.k, 0.0);
  Rng rng(17);
  for (int j = 0; j < B.k; ++j) {
    s.c0[j] = 0.6 * rng.gaussian() * std::pow(B.lambdas[j], -1.0);
  }
  return s;
}

double sup_l2_diff(const Trajectory& a, const Trajectory& b, double alpha) {
  // sup_t | a - alpha b |
  double worst = 0.0;
  for (int m = 0; m <= a.steps(); ++m) {
    double s = 0.0;
    for (size_t j = 0; j < a.coeffs[m].size(); ++j) {
      const double d = a.coeffs[m][j] - alpha * b.coeffs[m][j];
      s += d * d;
    }
    worst = std::max(worst, std::sqrt(s));
  }
  return worst;
}

}  // namespace

TEST_CASE("linearized solver basics") {
  Scenario s = regression_scenario();
  Trajectory base = integrate(s.c0, s.cfg, s.T3, s.f, *s.B);

  SUBCASE("zero direction gives the zero variation") {
    Trajectory z = solve_linearized(base, ForceSpec::zero(), s.cfg, *s.T3, *s.B);
    for (const auto& c : z.coeffs) {
      for (double x : c) CHECK(x == 0.0);
    }
  }

  SUBCASE("homogeneity in the direction") {
    Trajectory z = solve_linearized(base, s.g, s.cfg, *s.T3, *s.B);
    Trajectory z3 = solve_linearized(base, ForceSpec::scaled(3.0, s.g), s.cfg, *s.T3, *s.B);
    double scale_err = 0.0, znorm = 0.0;
    for (int m = 0; m <= z.steps(); ++m) {
      for (size_t j = 0; j < z.coeffs[m].size(); ++j) {
        scale_err = std::max(scale_err, std::abs(z3.coeffs[m][j] - 3.0 * z.coeffs[m][j]));
        znorm = std::max(znorm, std::abs(z.coeffs[m][j]));
      }
    }
    CHECK(scale_err <= 1e-10 * std::max(1.0, znorm));
  }

  SUBCASE("superposition of directions") {
    const StokesEigenbasis& B = *s.B;
    ForceSpec g2 = ForceSpec::regular([&B](const Grid&, double t) {
      std::vector<double> c(B.k, 0.0);
      c[2] = 0.7 * std::sin(2.0 * t);
      c[6] = 0.4;
      return reconstruct(B, c);
    });
    Trajectory za = solve_linearized(base, s.g, s.cfg, *s.T3, *s.B);
    Trajectory zb = solve_linearized(base, g2, s.cfg, *s.T3, *s.B);
    Trajectory zab = solve_linearized(base, ForceSpec::sum({s.g, g2}), s.cfg, *s.T3, *s.B);
    double err = 0.0, scale = 0.0;
    for (int m = 0; m <= za.steps(); ++m) {
      for (size_t j = 0; j < za.coeffs[m].size(); ++j) {
        err = std::max(err, std::abs(zab.coeffs[m][j] - za.coeffs[m][j] - zb.coeffs[m][j]));
        scale = std::max(scale, std::abs(zab.coeffs[m][j]));
      }
    }
    CHECK(err <= 1e-10 * std::max(1.0, scale));
  }
}

TEST_CASE("second variation symmetry is bit-exact") {
  Scenario s = regression_scenario();
  Trajectory base = integrate(s.c0, s.cfg, s.T3, s.f, *s.B);
  const StokesEigenbasis& B = *s.B;
  ForceSpec g2 = ForceSpec::regular([&B](const Grid&, double) {
    std::vector<double> c(B.k, 0.0);
    c[5] = 1.0;
    return reconstruct(B, c);
  });
  Trajectory z1 = solve_linearized(base, s.g, s.cfg, *s.T3, *s.B);
  Trajectory z2 = solve_linearized(base, g2, s.cfg, *s.T3, *s.B);
  Trajectory w12 = solve_second(base, z1, z2, s.cfg, *s.T3, *s.B);
  Trajectory w21 = solve_second(base, z2, z1, s.cfg, *s.T3, *s.B);
  for (int m = 0; m <= w12.steps(); ++m) CHECK(w12.coeffs[m] == w21.coeffs[m]);

  SUBCASE("vanishes when one variation is zero") {
    Trajectory z0 = solve_linearized(base, ForceSpec::zero(), s.cfg, *s.T3, *s.B);
    Trajectory w = solve_second(base, z0, z2, s.cfg, *s.T3, *s.B);
    for (const auto& c : w.coeffs) {
      for (double x : c) CHECK(x == 0.0);
    }
  }
}

TEST_CASE("finite-difference validation of both derivatives") {
  Scenario s = regression_scenario();
  FdReport rep = fd_derivative_report(s.f, s.g, s.c0, s.cfg, *s.T3, *s.B);

  CHECK(rep.order1 >= 1.9);
  CHECK(rep.order1 <= 2.1);
  CHECK(rep.order2 >= 2.8);
  CHECK(rep.order2 <= 3.2);
  CHECK(rep.tiny_roundoff_dominated);

  // Taylor remainders shrink along the whole ladder
  for (size_t i = 1; i < rep.eps.size(); ++i) {
    CHECK(rep.rem1[i] < rep.rem1[i - 1]);
    CHECK(rep.rem2[i] < rep.rem2[i - 1]);
  }
}

TEST_CASE("tangent matches a one-sided difference quotient") {
  Scenario s = regression_scenario();
  Trajectory base = integrate(s.c0, s.cfg, s.T3, s.f, *s.B);
  Trajectory z = solve_linearized(base, s.g, s.cfg, *s.T3, *s.B);
  const double eps = 1e-6;
  Trajectory pert =
      integrate(s.c0, s.cfg, s.T3, ForceSpec::sum({s.f, ForceSpec::scaled(eps, s.g)}), *s.B);
  Trajectory diff = base;
  for (int m = 0; m <= diff.steps(); ++m) {
    for (size_t j = 0; j < diff.coeffs[m].size(); ++j) {
      diff.coeffs[m][j] = (pert.coeffs[m][j] - base.coeffs[m][j]) / eps;
    }
  }
  const double err = sup_l2_diff(diff, z, 1.0);
  double zscale = 0.0;
  for (int m = 0; m <= z.steps(); ++m) zscale = std::max(zscale, ns2d_test::coeff_l2(z.coeffs[m]));
  CHECK(err <= 1e-4 * std::max(1.0, zscale));  // O(eps) quotient bias dominates
}
