#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "ns2d/errors.hpp"
#include "ns2d/galerkin.hpp"
#include "ns2d/rng.hpp"
#include "support.hpp"

using namespace ns2d;

namespace {

const double kNu = 0.05;

// Naive quadrature of int ((a.grad) b) . c over cell centers, written from
// scratch as the oracle for the assembled tensor.
double naive_convective(const Grid& g, const VelocityField& a, const VelocityField& b,
                        const VelocityField& c) {
  const int n = g.n;
  auto uval = [&](const VelocityField& f, int i, int j) {  // u at center
    return 0.5 * (f.u_at(i, j) + f.u_at(i + 1, j));
  };
  auto vval = [&](const VelocityField& f, int i, int j) {
    return 0.5 * (f.v_at(i, j) + f.v_at(i, j + 1));
  };
  auto u_ghost = [&](const VelocityField& f, int i, int j) {
    if (j < 0) return -f.u_at(i, 0);
    if (j > n - 1) return -f.u_at(i, n - 1);
    return f.u_at(i, j);
  };
  auto v_ghost = [&](const VelocityField& f, int i, int j) {
    if (i < 0) return -f.v_at(0, j);
    if (i > n - 1) return -f.v_at(n - 1, j);
    return f.v_at(i, j);
  };
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double au = uval(a, i, j), av = vval(a, i, j);
      const double dxu = (b.u_at(i + 1, j) - b.u_at(i, j)) / g.h;
      const double dyv = (b.v_at(i, j + 1) - b.v_at(i, j)) / g.h;
      double dyu = 0.0, dxv = 0.0;
      for (int di = 0; di <= 1; ++di) {
        for (int dj = 0; dj <= 1; ++dj) {
          dyu += (u_ghost(b, i + di, j + dj) - u_ghost(b, i + di, j + dj - 1)) / g.h;
          dxv += (v_ghost(b, i + di, j + dj) - v_ghost(b, i + di - 1, j + dj)) / g.h;
        }
      }
      dyu *= 0.25;
      dxv *= 0.25;
      acc += (au * dxu + av * dyu) * uval(c, i, j) + (au * dxv + av * dyv) * vval(c, i, j);
    }
  }
  return acc * g.h * g.h;
}

ForceSpec span_force(const StokesEigenbasis& B, std::vector<double> coeffs, double omega) {
  return ForceSpec::regular([&B, coeffs, omega](const Grid&, double t) {
    std::vector<double> ct = coeffs;
    const double r = std::cos(omega * t);
    for (double& x : ct) x *= r;
    return reconstruct(B, ct);
  });
}

}  // namespace

TEST_CASE("trilinear tensor") {
  const StokesEigenbasis& B = ns2d_test::basis(16, kNu, 8);
  const TrilinearTensor& T3 = ns2d_test::tensor(16, kNu, 8);

  SUBCASE("skew diagonal vanishes") {
    for (int i = 0; i < B.k; ++i) {
      for (int j = 0; j < B.k; ++j) {
        CHECK(std::abs(T3.b(i, j, j)) <= 1e-10);
      }
    }
  }

  SUBCASE("skew pairs cancel") {
    Rng rng(3);
    for (int rep = 0; rep < 1000; ++rep) {
      const int i = static_cast<int>(rng.next_u64() % B.k);
      const int j = static_cast<int>(rng.next_u64() % B.k);
      const int l = static_cast<int>(rng.next_u64() % B.k);
      CHECK(std::abs(T3.b(i, j, l) + T3.b(i, l, j)) <= 1e-10);
    }
  }

  SUBCASE("entry (1,2,3) matches the independent quadrature oracle") {
    const Grid& g = B.grid;
    const double naive = 0.5 * (naive_convective(g, B.modes[1], B.modes[2], B.modes[3]) -
                                naive_convective(g, B.modes[1], B.modes[3], B.modes[2]));
    CHECK(std::abs(T3.b(1, 2, 3) - naive) <= 1e-12 * std::max(1.0, std::abs(naive)));
  }

  SUBCASE("tensor agrees with trilinear_form on mode triples") {
    const Grid& g = B.grid;
    const double direct = trilinear_form(g, B.modes[0], B.modes[4], B.modes[2]);
    CHECK(std::abs(T3.b(0, 4, 2) - direct) <= 1e-12 * std::max(1.0, std::abs(direct)));
  }
}

TEST_CASE("rhs structure") {
  const StokesEigenbasis& B = ns2d_test::basis(16, kNu, 8);
  const TrilinearTensor& T3 = ns2d_test::tensor(16, kNu, 8);
  GalerkinConfig cfg;
  cfg.nu = kNu;
  cfg.dt = 1e-3;
  cfg.T = 1.0;

  SUBCASE("zero state, zero force") {
    cfg.nu0 = 1.0;
    std::vector<double> c(B.k, 0.0);
    std::vector<double> r = rhs(c, 0.0, cfg, T3, ForceSpec::zero(), B);
    for (double x : r) CHECK(x == 0.0);
  }

  SUBCASE("pure Stokes right side is the exact diagonal") {
    cfg.nu0 = 0.0;
    Rng rng(5);
    std::vector<double> c(B.k);
    for (double& x : c) x = rng.gaussian();
    std::vector<double> r = rhs(c, 0.3, cfg, T3, ForceSpec::zero(), B);
    for (int j = 0; j < B.k; ++j) CHECK(r[j] == -B.lambdas[j] * c[j]);
  }

  SUBCASE("cubic term is energy-neutral") {
    Rng rng(7);
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<double> c(B.k);
      for (double& x : c) x = rng.gaussian();
      std::vector<double> buf;
      T3.contract(c, c, buf);
      double dot = 0.0, nc = 0.0;
      for (int j = 0; j < B.k; ++j) {
        dot += c[j] * buf[j];
        nc += c[j] * c[j];
      }
      CHECK(std::abs(dot) <= 1e-10 * std::pow(std::sqrt(nc), 3.0));
    }
  }

  SUBCASE("e1 transport is energy-neutral") {
    Rng rng(9);
    std::vector<double> e(B.k), c(B.k), buf;
    for (double& x : e) x = rng.gaussian();
    for (double& x : c) x = rng.gaussian();
    T3.contract(e, c, buf);
    double dot = 0.0;
    for (int j = 0; j < B.k; ++j) dot += c[j] * buf[j];
    CHECK(std::abs(dot) <= 1e-10);
  }
}

TEST_CASE("integrate") {
  const StokesEigenbasis& B = ns2d_test::basis(16, kNu, 8);
  const TrilinearTensor& T3 = ns2d_test::tensor(16, kNu, 8);

  SUBCASE("zero data, zero force stays identically zero") {
    GalerkinConfig cfg;
    cfg.nu = kNu;
    cfg.nu0 = 1.0;
    cfg.dt = 1e-2;
    cfg.T = 0.5;
    std::vector<double> c0(B.k, 0.0);
    Trajectory t = integrate(c0, cfg, &T3, ForceSpec::zero(), B);
    for (const auto& c : t.coeffs) {
      for (double x : c) CHECK(x == 0.0);
    }
  }

  SUBCASE("single-mode Stokes decay is the exact integrating factor") {
    GalerkinConfig cfg;
    cfg.nu = kNu;
    cfg.nu0 = 0.0;
    cfg.dt = 2e-3;
    cfg.T = 1.0;
    for (int j : {0, 3, 7}) {
      std::vector<double> c0(B.k, 0.0);
      c0[j] = 1.0;
      Trajectory t = integrate(c0, cfg, nullptr, ForceSpec::zero(), B);
      for (int m = 0; m <= t.steps(); ++m) {
        const double exact = std::exp(-B.lambdas[j] * t.times[m]);
        CHECK(std::abs(t.coeffs[m][j] - exact) <= 1e-10 * exact);
      }
    }
  }

  SUBCASE("self-convergence of the nonlinear step is second order") {
    GalerkinConfig cfg;
    cfg.nu = kNu;
    cfg.nu0 = 1.0;
    cfg.T = 0.5;
    std::vector<double> c0(B.k, 0.0);
    c0[0] = 0.8;
    c0[1] = -0.4;
    c0[4] = 0.3;
    ForceSpec F = span_force(B, {0.5, 0.0, 0.3, 0.0, 0.0, 0.2, 0.0, 0.0}, 2.0);

    auto terminal = [&](double dt) {
      GalerkinConfig c = cfg;
      c.dt = dt;
      return integrate(c0, c, &T3, F, B).coeffs.back();
    };
    std::vector<double> ref = terminal(5e-4);
    auto err = [&](double dt) {
      std::vector<double> e = terminal(dt);
      double s = 0.0;
      for (int j = 0; j < B.k; ++j) s += (e[j] - ref[j]) * (e[j] - ref[j]);
      return std::sqrt(s);
    };
    const double e1 = err(4e-3), e2 = err(2e-3);
    CHECK(e1 / e2 >= 3.0);
    CHECK(e1 / e2 <= 5.3);
  }

  SUBCASE("blow-up guard reports the failure time") {
    GalerkinConfig cfg;
    cfg.nu = kNu;
    cfg.nu0 = 0.0;
    cfg.dt = 0.05;
    cfg.T = 1.0;
    std::vector<double> c0(B.k, 0.0);
    ForceSpec big = span_force(B, {1e10, 0, 0, 0, 0, 0, 0, 0}, 0.0);
    CHECK_THROWS_AS(integrate(c0, cfg, nullptr, big, B), DivergenceError);
  }

  SUBCASE("bit-identical reruns") {
    GalerkinConfig cfg;
    cfg.nu = kNu;
    cfg.nu0 = 1.0;
    cfg.dt = 2e-3;
    cfg.T = 0.2;
    std::vector<double> c0(B.k, 0.1);
    ForceSpec F = span_force(B, {0.3, 0.1, 0, 0, 0, 0, 0, 0}, 1.0);
    Trajectory a = integrate(c0, cfg, &T3, F, B);
    Trajectory b = integrate(c0, cfg, &T3, F, B);
    for (int m = 0; m <= a.steps(); ++m) CHECK(a.coeffs[m] == b.coeffs[m]);
  }

  SUBCASE("T not a multiple of dt is a config error") {
    GalerkinConfig cfg;
    cfg.nu = kNu;
    cfg.dt = 3e-3;
    cfg.T = 1.0;
    std::vector<double> c0(B.k, 0.0);
    CHECK_THROWS_AS(integrate(c0, cfg, nullptr, ForceSpec::zero(), B), ConfigError);
  }
}

TEST_CASE("energy identity") {
  const StokesEigenbasis& B = ns2d_test::basis(16, kNu, 8);
  const TrilinearTensor& T3 = ns2d_test::tensor(16, kNu, 8);

  SUBCASE("residual converges at second order, Stokes decay") {
    std::vector<double> c0(B.k, 0.0);
    c0[0] = 1.0;
    c0[2] = 0.5;
    std::vector<double> dts = {4e-3, 2e-3, 1e-3};
    std::vector<double> maxres;
    for (double dt : dts) {
      GalerkinConfig cfg;
      cfg.nu = kNu;
      cfg.nu0 = 0.0;
      cfg.dt = dt;
      cfg.T = 0.5;
      Trajectory t = integrate(c0, cfg, nullptr, ForceSpec::zero(), B);
      maxres.push_back(energy_residual(t, cfg, nullptr, nullptr, B).max_abs);
    }
    const double o1 = std::log2(maxres[0] / maxres[1]);
    const double o2 = std::log2(maxres[1] / maxres[2]);
    CHECK(o1 >= 1.9);
    CHECK(o2 >= 1.9);
  }

  SUBCASE("unforced runs dissipate monotonically for nu0 in {0,1}") {
    Rng rng(11);
    std::vector<double> c0(B.k);
    for (double& x : c0) x = rng.gaussian();
    for (double nu0 : {0.0, 1.0}) {
      GalerkinConfig cfg;
      cfg.nu = kNu;
      cfg.nu0 = nu0;
      cfg.dt = 2e-3;
      cfg.T = 1.0;
      Trajectory t = integrate(c0, cfg, &T3, ForceSpec::zero(), B);
      for (int m = 0; m < t.steps(); ++m) {
        CHECK(t.monitors[m + 1].l2 <= t.monitors[m].l2 * (1.0 + 1e-14));
      }
    }
  }

  SUBCASE("residual order on a forced nonlinear run") {
    std::vector<double> c0(B.k, 0.0);
    c0[0] = 0.6;
    c0[3] = -0.3;
    ForceSpec F = span_force(B, {0.4, 0, 0.2, 0, 0, 0, 0, 0.1}, 3.0);
    std::vector<double> dts = {4e-3, 2e-3, 1e-3};
    std::vector<double> maxres;
    for (double dt : dts) {
      GalerkinConfig cfg;
      cfg.nu = kNu;
      cfg.nu0 = 1.0;
      cfg.dt = dt;
      cfg.T = 0.5;
      Trajectory t = integrate(c0, cfg, &T3, F, B);
      auto src = make_force_source(F, B);
      maxres.push_back(energy_residual(t, cfg, &T3, src, B).max_abs);
    }
    const double order = std::log2(maxres[0] / maxres[2]) / 2.0;
    CHECK(order >= 1.9);
  }
}

TEST_CASE("pressure recovery") {
  const StokesEigenbasis& B = ns2d_test::basis(16, kNu, 8);
  const Grid& g = B.grid;

  SUBCASE("zero flow, zero force gives zero pressure") {
    GalerkinConfig cfg;
    cfg.nu = kNu;
    cfg.dt = 1e-3;
    cfg.T = 0.1;
    VelocityField z(g);
    ScalarField p = recover_pressure(g, z, z, cfg.dt, cfg, ForceSpec::zero(), 0.0);
    CHECK(max_abs(p) <= 1e-14);
  }

  SUBCASE("pressure has zero mean and closes the Stokes momentum balance") {
    GalerkinConfig cfg;
    cfg.nu = kNu;
    cfg.nu0 = 0.0;
    cfg.dt = 2e-4;
    cfg.T = 2e-3;
    std::vector<double> c0(B.k, 0.0);
    c0[0] = 1.0;
    Trajectory t = integrate(c0, cfg, nullptr, ForceSpec::zero(), B);
    const int m = 4;
    VelocityField yb = reconstruct(B, t.coeffs[m]);
    VelocityField ya = reconstruct(B, t.coeffs[m + 1]);
    VelocityField R;
    ScalarField p = recover_pressure(g, yb, ya, cfg.dt, cfg, ForceSpec::zero(),
                                     t.times[m], nullptr, &R);
    double mean = 0.0;
    for (double x : p.a) mean += x;
    CHECK(std::abs(mean * g.h * g.h) <= 1e-12);

    const double before = std::sqrt(inner_L2(g, R, R));
    VelocityField closed = axpy(1.0, gradient(g, p), R);
    const double after = std::sqrt(inner_L2(g, closed, closed));
    CHECK(before / after >= 1e6);
  }
}

TEST_CASE("uniqueness surrogate: perturbation growth obeys a Gronwall envelope") {
  const StokesEigenbasis& B = ns2d_test::basis(16, kNu, 8);
  const TrilinearTensor& T3 = ns2d_test::tensor(16, kNu, 8);
  Rng rng(13);
  const double eps = 1e-6;
  for (int scenario = 0; scenario < 3; ++scenario) {
    std::vector<double> c0(B.k);
    for (double& x : c0) x = 1.5 * rng.gaussian();
    GalerkinConfig cfg;
    cfg.nu = kNu;
    cfg.nu0 = 1.0;
    cfg.dt = 2e-3;
    cfg.T = 0.5;
    Trajectory base = integrate(c0, cfg, &T3, ForceSpec::zero(), B);
    std::vector<double> c0p = c0;
    std::vector<double> dir(B.k);
    for (double& x : dir) x = rng.gaussian();
    const double dn = ns2d_test::coeff_l2(dir);
    for (int j = 0; j < B.k; ++j) c0p[j] += eps * dir[j] / dn;
    Trajectory pert = integrate(c0p, cfg, &T3, ForceSpec::zero(), B);

    // W(t) = int |y|_H1^2, trapezoid on the base run
    double W = 0.0;
    const double K = 2.0 / kNu;  // generous envelope constant
    for (int m = 1; m <= base.steps(); ++m) {
      const double h1a = base.monitors[m - 1].h1, h1b = base.monitors[m].h1;
      W += 0.5 * cfg.dt * (h1a * h1a + h1b * h1b);
      double s = 0.0;
      for (int j = 0; j < B.k; ++j) {
        const double d = pert.coeffs[m][j] - base.coeffs[m][j];
        s += d * d;
      }
      CHECK(std::sqrt(s) <= eps * std::exp(K * W));
    }
  }
}
