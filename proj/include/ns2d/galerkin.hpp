#ifndef NS2D_GALERKIN_HPP
#define NS2D_GALERKIN_HPP

#include <memory>
#include <span>
#include <vector>

#include "ns2d/forcing.hpp"
#include "ns2d/grid.hpp"
#include "ns2d/stokes_basis.hpp"

namespace ns2d {

/// All k^3 convective form values b(psi_i, psi_j, psi_l): transporter i,
/// transported j, test l. Assembled in split (skew-symmetrized) form, so
/// b(i, j, l) = -b(i, l, j) holds to machine precision and the nonlinearity
/// is exactly energy-neutral.
struct TrilinearTensor {
  int k = 0;
  std::vector<double> data;  // data[(i*k + j)*k + l]

  double b(int i, int j, int l) const {
    return data[(static_cast<size_t>(i) * k + j) * k + l];
  }
  /// out[l] = sum_{i,j} a[i] c[j] b(i,j,l); exact zeros in a or c are skipped.
  void contract(std::span<const double> a, std::span<const double> c,
                std::vector<double>& out) const;
  /// sum_l contract(a,c)[l] * w[l]
  double form(std::span<const double> a, std::span<const double> c,
              std::span<const double> w) const;
};

TrilinearTensor assemble_trilinear(const StokesEigenbasis& B);

/// Direct quadrature of the split convective form for arbitrary grid fields:
///   1/2 [ int (a.grad b).c - int (a.grad c).b ]
/// (midpoint rule on cell centers). This is the same object the tensor holds
/// when a, b, c are basis modes.
double trilinear_form(const Grid& g, const VelocityField& a, const VelocityField& b,
                      const VelocityField& c);

/// Plain (un-split) quadrature int (a.grad b).c dx; the split form averages
/// two of these.
double convective_integral(const Grid& g, const VelocityField& a,
                           const VelocityField& b, const VelocityField& c);

// ---------------------------------------------------------------------------

struct StepMonitor {
  double l2 = 0.0;
  double h1 = 0.0;
  double l4 = 0.0;
};

/// Galerkin coefficient trajectory. stage_coeffs holds the integrator's
/// predictor state per step so that linearizations of a run can follow the
/// exact tangent of the discrete flow.
struct Trajectory {
  std::vector<double> times;                      // steps+1 entries, t_m = m dt
  std::vector<std::vector<double>> coeffs;        // steps+1 entries
  std::vector<std::vector<double>> stage_coeffs;  // steps entries
  std::vector<StepMonitor> monitors;              // steps+1 entries

  int steps() const { return static_cast<int>(times.size()) - 1; }
};

/// Quadrature estimate of the L^q(I; L^4) norm of a trajectory (trapezoid in
/// time over the stored L^4 monitor).
double lq_l4_norm(const Trajectory& traj, double q);

/// Advecting field for the general system, expanded in the basis and
/// evaluated on the integrator's time grid. stage values belong to the
/// predictor stage of the step (for trajectories produced by integrate this
/// is the stored predictor; constants are constant).
class EField {
 public:
  virtual ~EField() = default;
  virtual std::span<const double> at_step(int m) const = 0;
  virtual std::span<const double> at_stage(int m) const = 0;

  /// Precontracted blocks for an out-of-span steady residual part r:
  ///   as_transporter[l*k + j] = b(r, psi_l, psi_j)
  ///   as_transported[i*k + j] = b(psi_i, r, psi_j)
  struct Residual {
    int k = 0;
    std::vector<double> as_transporter;
    std::vector<double> as_transported;
    double l2 = 0.0;  // norm of the dropped grid part
  };
  virtual const Residual* residual() const { return nullptr; }
};

std::shared_ptr<const EField> make_constant_efield(std::vector<double> coeffs);
/// Expands a steady grid field in the basis; the out-of-span remainder is
/// kept as precontracted residual blocks applied by direct quadrature.
std::shared_ptr<const EField> make_constant_efield(const StokesEigenbasis& B,
                                                   const VelocityField& e);
/// View of a solved trajectory, optionally scaled (coefficients multiplied).
std::shared_ptr<const EField> make_trajectory_efield(std::shared_ptr<const Trajectory> t,
                                                     double scale = 1.0);

/// Galerkin moment source g_j evaluated at integrator stages. stage 0 is the
/// step start t_m (m in [0, steps]); stage 1 is the predictor stage of step m
/// (m in [0, steps-1]) at time t_{m+1}.
class MomentSource {
 public:
  virtual ~MomentSource() = default;
  virtual void eval(int step, int stage, double t, std::vector<double>& out) const = 0;
};

std::shared_ptr<const MomentSource> make_zero_source();
std::shared_ptr<const MomentSource> make_force_source(ForceSpec F, const StokesEigenbasis& B);
/// g_j = factor * [ b(A, C, psi_j) + (symmetrized ? b(C, A, psi_j) : 0) ]
/// with A, C read from trajectories at the stage-consistent states.
std::shared_ptr<const MomentSource> make_quadratic_source(
    std::shared_ptr<const Trajectory> A, std::shared_ptr<const Trajectory> C,
    const TrilinearTensor& T3, double factor, bool symmetrized);

// ---------------------------------------------------------------------------

enum class Scheme { etd2rk };

/// Parameters of the general system: nu0 switches the self-convection,
/// e1/e2 are the advecting fields of the Oseen terms.
struct GalerkinConfig {
  double nu = 0.05;
  double nu0 = 0.0;
  std::shared_ptr<const EField> e1;
  std::shared_ptr<const EField> e2;
  double dt = 1e-3;
  double T = 1.0;
  Scheme scheme = Scheme::etd2rk;
  double blowup_threshold = 1e8;
};

/// Number of integrator steps for a config; throws ConfigError unless T is
/// an integral multiple of dt.
int step_count_of(const GalerkinConfig& cfg);

/// Full right-hand side of the Galerkin ODE at state c and time t:
///   g_j - lambda_j c_j - nu0 b(y,y,psi_j) - b(e1,y,psi_j) - b(y,e2,psi_j).
std::vector<double> rhs(std::span<const double> c, double t, const GalerkinConfig& cfg,
                        const TrilinearTensor& T3, const ForceSpec& F,
                        const StokesEigenbasis& B);

/// Exponential two-stage integrator (ETD2RK): the Stokes diagonal is applied
/// through exp(-lambda_j dt) and phi-functions, so pure decay and constant
/// forcing are integrated exactly; convection and forcing are explicit.
/// T must be an integral multiple of dt. The force source is evaluated at
/// t + dt/2 instead of t = 0 on the very first stage, which keeps amplitudes
/// with an integrable singularity at t = 0 finite.
Trajectory integrate(std::span<const double> c0, const GalerkinConfig& cfg,
                     const TrilinearTensor* T3,
                     std::shared_ptr<const MomentSource> source,
                     const StokesEigenbasis& B);

/// Convenience overload taking a ForceSpec.
Trajectory integrate(std::span<const double> c0, const GalerkinConfig& cfg,
                     const TrilinearTensor* T3, const ForceSpec& F,
                     const StokesEigenbasis& B);

struct EnergyResidual {
  std::vector<double> series;  // one entry per step interval
  double max_abs = 0.0;
};

/// Trapezoidal residual of the discrete energy identity
///   d/dt (1/2)|y|^2 + a(y,y) + b(y,e2,y) = <g, y>.
EnergyResidual energy_residual(const Trajectory& traj, const GalerkinConfig& cfg,
                               const TrilinearTensor* T3,
                               const std::shared_ptr<const MomentSource>& source,
                               const StokesEigenbasis& B);

/// Pressure closing the trapezoidal momentum balance between two grid states:
/// solves the Neumann problem lap p = -div R and returns zero-mean p. The
/// residual field R is returned through *residual_out when non-null (before
/// adding grad p); cfg e-fields require the basis pointer.
ScalarField recover_pressure(const Grid& g, const VelocityField& y_before,
                             const VelocityField& y_after, double dt,
                             const GalerkinConfig& cfg, const ForceSpec& F, double t,
                             const StokesEigenbasis* B = nullptr,
                             VelocityField* residual_out = nullptr);

}  // namespace ns2d

#endif
