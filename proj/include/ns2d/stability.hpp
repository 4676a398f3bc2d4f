#ifndef NS2D_STABILITY_HPP
#define NS2D_STABILITY_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "ns2d/galerkin.hpp"

namespace ns2d {

struct SteadyState {
  std::vector<double> coeffs;
  double residual = 0.0;  // L2 norm of the per-mode residual
  double l2 = 0.0, h1 = 0.0, l4 = 0.0;
  bool converged = false;
  bool contracting = false;  // Picard step shrank; outside this: large-data regime
  int iterations = 0;
};

struct SteadySolveOptions {
  bool use_newton = true;
  int max_iterations = 400;
  std::optional<std::vector<double>> start;  // default: Stokes solution
};

/// Steady states of  lambda_j c_j + nu0 * b(y,y,psi_j) = f_j  by Stokes-
/// preconditioned Picard iteration, switching to Newton once the Picard step
/// contracts. Non-convergence is reported through the flags, not thrown.
SteadyState solve_steady(const ForceSpec& F, const GalerkinConfig& cfg,
                         const TrilinearTensor& T3, const StokesEigenbasis& B,
                         const SteadySolveOptions& opts = {});

struct EmpiricalConstants {
  double C1 = 0.0;  // max |b(y,y,w)| / (|w|_L4 |y|_H1^2)
  double C3 = 0.0;  // max |z|_L2 / |z|_H1
  int samples = 0;
  int argmax_c1 = -1;
  int argmax_c3 = -1;
};

/// Empirical constants over a seeded ensemble of divergence-free span fields
/// (sample 0 is the ground mode; the rest have spectral decay lambda^{-s},
/// s cycling {0.5, 1.0, 1.5}). `scale` multiplies every sample; the reported
/// ratios are invariant under it.
EmpiricalConstants empirical_constants(const Grid& g, const StokesEigenbasis& B,
                                       const TrilinearTensor& T3, int samples,
                                       std::uint64_t seed = 1, double scale = 1.0);

struct DecayResult {
  double alpha_fit = 0.0;
  double r2 = 0.0;
  bool passed = false;
  bool monotone_after_transient = false;
  std::vector<double> times;
  std::vector<double> dist;  // |y(t) - y_inf|_L2
  SteadyState steady;
};

/// Runs the solver from y0 towards the steady state of F and fits the decay
/// exponent of log |y(t) - y_inf| on the window dist in [1e-8, dist(0)/2].
DecayResult decay_experiment(const ForceSpec& F, std::span<const double> y0,
                             const GalerkinConfig& cfg, const TrilinearTensor& T3,
                             const StokesEigenbasis& B);

struct SmallnessReport {
  double c1_yinf_l4 = 0.0;   // C1 * |y_inf|_L4
  double margin = 0.0;       // nu - C1 |y_inf|_L4
  double alpha_pred = 0.0;   // margin / C3^2 when margin > 0
  bool claim = false;        // margin > 0
  SteadyState steady;
};

/// The operative smallness condition from the decay proof: a positive margin
/// nu - C1 |y_inf|_L4 predicts exponential decay at rate margin / C3^2.
SmallnessReport smallness_report(const ForceSpec& F, const EmpiricalConstants& consts,
                                 const GalerkinConfig& cfg, const TrilinearTensor& T3,
                                 const StokesEigenbasis& B);

}  // namespace ns2d

#endif
