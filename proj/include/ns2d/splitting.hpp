#ifndef NS2D_SPLITTING_HPP
#define NS2D_SPLITTING_HPP

#include <span>
#include <vector>

#include "ns2d/galerkin.hpp"

namespace ns2d {

/// Stokes leg of the decomposition: the linear diagonal system
///   c_j' = -lambda_j c_j + <f(t), psi_j>,
/// integrated with the exponential scheme (exact for constant moments).
/// F may contain point (Dirac) terms.
Trajectory solve_stokes_rough(const ForceSpec& F, std::span<const double> c0S,
                              const GalerkinConfig& cfg, const StokesEigenbasis& B);

/// Nonlinear remainder: the full system with nu0 = 1, e1 = e2 = y_S and
/// forcing moments g_j(t) = -b(y_S, y_S, psi_j), started from c0N.
Trajectory solve_perturbed(const Trajectory& yS, std::span<const double> c0N,
                           const GalerkinConfig& cfg, const TrilinearTensor& T3,
                           const StokesEigenbasis& B);

struct SplitReport {
  std::vector<double> times;
  std::vector<double> discrepancy;  // |(y_N + y_S) - y_direct|_L2 per time
  double max_discrepancy = 0.0;
  Trajectory direct;
};

/// Recomposes y = y_N + y_S and compares against a direct solve of the full
/// system with the same force and initial data (valid for regular F; for
/// point forces the Galerkin moments are still well-defined, so the direct
/// solve runs there too).
SplitReport recompose_and_compare(const Trajectory& yN, const Trajectory& yS,
                                  const ForceSpec& F, std::span<const double> c0,
                                  const GalerkinConfig& cfg, const TrilinearTensor& T3,
                                  const StokesEigenbasis& B);

}  // namespace ns2d

#endif
