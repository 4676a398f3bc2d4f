#include "ns2d/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "ns2d/errors.hpp"

namespace ns2d {

namespace {

GalerkinConfig tangent_config(const Trajectory& y, const GalerkinConfig& cfg) {
  if (cfg.e1 || cfg.e2) {
    throw ConfigError("sensitivity solvers expect a plain base system (no e-fields)");
  }
  auto base = std::make_shared<Trajectory>(y);
  GalerkinConfig lin = cfg;
  lin.nu0 = 0.0;
  lin.e1 = make_trajectory_efield(base, cfg.nu0);
  lin.e2 = lin.e1;
  return lin;
}

}  // namespace

Trajectory solve_linearized(const Trajectory& y, const ForceSpec& G,
                            const GalerkinConfig& cfg, const TrilinearTensor& T3,
                            const StokesEigenbasis& B) {
  GalerkinConfig lin = tangent_config(y, cfg);
  std::vector<double> zero(B.k, 0.0);
  return integrate(zero, lin, &T3, G, B);
}

Trajectory solve_second(const Trajectory& y, const Trajectory& z1, const Trajectory& z2,
                        const GalerkinConfig& cfg, const TrilinearTensor& T3,
                        const StokesEigenbasis& B) {
  if (z1.steps() != y.steps() || z2.steps() != y.steps()) {
    throw PreconditionError("solve_second: variations live on a different time grid");
  }
  GalerkinConfig lin = tangent_config(y, cfg);
  auto s1 = std::make_shared<Trajectory>(z1);
  auto s2 = std::make_shared<Trajectory>(z2);
  auto src = make_quadratic_source(s1, s2, T3, -cfg.nu0, /*symmetrized=*/true);
  std::vector<double> zero(B.k, 0.0);
  return integrate(zero, lin, &T3, src, B);
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  const int n = static_cast<int>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(std::max(y[i], 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

FdReport fd_derivative_report(const ForceSpec& f, const ForceSpec& g,
                              std::span<const double> c0, const GalerkinConfig& cfg,
                              const TrilinearTensor& T3, const StokesEigenbasis& B) {
  const int k = B.k;
  Trajectory base = integrate(c0, cfg, &T3, f, B);
  Trajectory z = solve_linearized(base, g, cfg, T3, B);
  Trajectory z2 = solve_second(base, z, z, cfg, T3, B);

  auto remainders = [&](double eps, double& r1, double& r2) {
    ForceSpec fp = ForceSpec::sum({f, ForceSpec::scaled(eps, g)});
    Trajectory pert = integrate(c0, cfg, &T3, fp, B);
    r1 = 0.0;
    r2 = 0.0;
    for (int m = 0; m <= base.steps(); ++m) {
      double s1 = 0.0, s2 = 0.0;
      for (int j = 0; j < k; ++j) {
        const double d1 = pert.coeffs[m][j] - base.coeffs[m][j] - eps * z.coeffs[m][j];
        const double d2 = d1 - 0.5 * eps * eps * z2.coeffs[m][j];
        s1 += d1 * d1;
        s2 += d2 * d2;
      }
      r1 = std::max(r1, std::sqrt(s1));
      r2 = std::max(r2, std::sqrt(s2));
    }
  };

  FdReport rep;
  rep.eps = {1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4};
  rep.rem1.resize(rep.eps.size());
  rep.rem2.resize(rep.eps.size());
  for (size_t i = 0; i < rep.eps.size(); ++i) {
    remainders(rep.eps[i], rep.rem1[i], rep.rem2[i]);
  }
  // middle five rungs avoid both the truncation and the round-off ends
  std::span<const double> midx(rep.eps.data() + 1, 5);
  rep.order1 = loglog_slope(midx, std::span<const double>(rep.rem1.data() + 1, 5));
  rep.order2 = loglog_slope(midx, std::span<const double>(rep.rem2.data() + 1, 5));

  double z2max = 0.0;
  for (int m = 0; m <= z2.steps(); ++m) {
    double s = 0.0;
    for (int j = 0; j < k; ++j) s += z2.coeffs[m][j] * z2.coeffs[m][j];
    z2max = std::max(z2max, std::sqrt(s));
  }
  rep.tiny_eps = 1e-12;
  double dummy = 0.0;
  remainders(rep.tiny_eps, rep.tiny_rem1, dummy);
  const double predicted = 0.5 * rep.tiny_eps * rep.tiny_eps * z2max;
  rep.tiny_roundoff_dominated = rep.tiny_rem1 > 100.0 * predicted;
  return rep;
}

}  // namespace ns2d
