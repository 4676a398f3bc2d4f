#ifndef NS2D_SENSITIVITY_HPP
#define NS2D_SENSITIVITY_HPP

#include <span>
#include <vector>

#include "ns2d/galerkin.hpp"

namespace ns2d {

/// First variation of the solution map around a solved base trajectory:
///   z' = -lambda z - nu0 [ b(y, z, .) + b(z, y, .) ] + <g, .>,  z(0) = 0.
/// The base enters at the integrator's own stage states (stored predictors),
/// so z is the exact tangent of the discrete flow. cfg must be the base
/// configuration (plain system: no e-fields).
Trajectory solve_linearized(const Trajectory& y, const ForceSpec& G,
                            const GalerkinConfig& cfg, const TrilinearTensor& T3,
                            const StokesEigenbasis& B);

/// Second variation along two first variations z1, z2 (solved against the
/// same base): same linear operator, source -nu0 [ b(z2, z1, .) + b(z1, z2, .) ],
/// zero initial data. Symmetric in (z1, z2) bit-exactly.
Trajectory solve_second(const Trajectory& y, const Trajectory& z1, const Trajectory& z2,
                        const GalerkinConfig& cfg, const TrilinearTensor& T3,
                        const StokesEigenbasis& B);

struct FdReport {
  std::vector<double> eps;
  std::vector<double> rem1;  // sup_t |y(f+eps g) - y(f) - eps z|_L2
  std::vector<double> rem2;  // sup_t |...  - eps^2/2 z2|_L2
  double order1 = 0.0;       // log-log slope over the middle rungs
  double order2 = 0.0;
  double tiny_eps = 0.0;     // round-off probe
  double tiny_rem1 = 0.0;
  bool tiny_roundoff_dominated = false;
};

/// Finite-difference validation of both derivative solvers on the fixed
/// ladder eps in {1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4}; slopes are
/// least-squares fits over the middle five rungs.
FdReport fd_derivative_report(const ForceSpec& f, const ForceSpec& g,
                              std::span<const double> c0, const GalerkinConfig& cfg,
                              const TrilinearTensor& T3, const StokesEigenbasis& B);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace ns2d

#endif
