#include "ns2d/splitting.hpp"

#include <cmath>
#include <memory>
#include <string>

#include "ns2d/errors.hpp"

namespace ns2d {

Trajectory solve_stokes_rough(const ForceSpec& F, std::span<const double> c0S,
                              const GalerkinConfig& cfg, const StokesEigenbasis& B) {
  GalerkinConfig linear = cfg;
  linear.nu0 = 0.0;
  linear.e1.reset();
  linear.e2.reset();
  return integrate(c0S, linear, nullptr, F, B);
}

Trajectory solve_perturbed(const Trajectory& yS, std::span<const double> c0N,
                           const GalerkinConfig& cfg, const TrilinearTensor& T3,
                           const StokesEigenbasis& B) {
  const int steps = step_count_of(cfg);
  if (yS.steps() != steps) {
    throw PreconditionError("solve_perturbed: y_S lives on a different time grid (" +
                            std::to_string(yS.steps()) + " steps vs " +
                            std::to_string(steps) + ")");
  }
  auto ys = std::make_shared<Trajectory>(yS);
  GalerkinConfig pert = cfg;
  pert.nu0 = 1.0;
  pert.e1 = make_trajectory_efield(ys);
  pert.e2 = pert.e1;
  auto g = make_quadratic_source(ys, ys, T3, -1.0, false);
  return integrate(c0N, pert, &T3, g, B);
}

SplitReport recompose_and_compare(const Trajectory& yN, const Trajectory& yS,
                                  const ForceSpec& F, std::span<const double> c0,
                                  const GalerkinConfig& cfg, const TrilinearTensor& T3,
                                  const StokesEigenbasis& B) {
  if (yN.steps() != yS.steps()) {
    throw PreconditionError("recompose_and_compare: legs live on different time grids");
  }
  GalerkinConfig direct_cfg = cfg;
  direct_cfg.nu0 = 1.0;
  direct_cfg.e1.reset();
  direct_cfg.e2.reset();
  SplitReport rep;
  rep.direct = integrate(c0, direct_cfg, &T3, F, B);
  const int steps = yN.steps();
  if (rep.direct.steps() != steps) {
    throw PreconditionError("recompose_and_compare: direct solve time grid mismatch");
  }
  rep.times = yN.times;
  rep.discrepancy.resize(steps + 1);
  const int k = B.k;
  for (int m = 0; m <= steps; ++m) {
    double s = 0.0;
    for (int j = 0; j < k; ++j) {
      const double d = yN.coeffs[m][j] + yS.coeffs[m][j] - rep.direct.coeffs[m][j];
      s += d * d;
    }
    rep.discrepancy[m] = std::sqrt(s);
    rep.max_discrepancy = std::max(rep.max_discrepancy, rep.discrepancy[m]);
  }
  return rep;
}

}  // namespace ns2d
