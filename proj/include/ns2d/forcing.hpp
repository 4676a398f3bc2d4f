#ifndef NS2D_FORCING_HPP
#define NS2D_FORCING_HPP

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ns2d/grid.hpp"
#include "ns2d/stokes_basis.hpp"

namespace ns2d {

/// Admissibility window for rough forcing: 4/3 <= p < 2 and q > 2p/(p-1).
/// These together imply q > 4; p_conj = p/(p-1).
struct AdmissibilityParams {
  double p = 0.0;
  double q = 0.0;
  double p_conj = 0.0;
};

/// Throws ConfigError naming the violated inequality.
AdmissibilityParams validate_params(double p, double q);

/// A time-dependent force: a regular field, a point (Dirac) force, or a
/// scaled sum of such. Immutable after construction; evaluation is pure.
class ForceSpec {
 public:
  using FieldBuilder = std::function<VelocityField(const Grid&, double)>;
  using Amplitude = std::function<std::array<double, 2>(double)>;

  static ForceSpec zero();
  static ForceSpec regular(FieldBuilder builder);
  /// Point force at x0 strictly inside the domain (checked against the
  /// evaluation grid: distance >= 2h from every wall).
  static ForceSpec point(std::array<double, 2> x0, Amplitude amplitude);
  static ForceSpec scaled(double factor, ForceSpec inner);
  static ForceSpec sum(std::vector<ForceSpec> terms);

  bool is_zero() const;
  bool has_point() const;

  /// Galerkin moments <f(t), psi_j>. Point terms pair against the bilinear
  /// interpolation of each mode at x0; regular terms by face quadrature.
  std::vector<double> moments(const StokesEigenbasis& B, double t) const;

  /// Force represented at cell centers, per component (point terms spread as
  /// a bilinear discrete delta of total mass amplitude(t)).
  void eval_on_centers(const Grid& g, double t, ScalarField& fx, ScalarField& fy) const;

  /// Force represented on faces (point terms spread as face deltas).
  VelocityField eval_on_faces(const Grid& g, double t) const;

  struct Node;  // representation detail, defined in forcing.cpp

 private:
  std::shared_ptr<const Node> node_;
};

std::vector<double> force_moments(const ForceSpec& F, const StokesEigenbasis& B, double t);

/// Numerical surrogate of the W^{-1,p} norm: solve -lap W = f componentwise
/// with zero boundary values and return the L^p norm of grad W. Meaningful as
/// a W^{-1,p} representative for p < 2; larger p (up to 4) is allowed as a
/// refinement probe.
double dual_norm_estimate(const ForceSpec& F, const Grid& g, double t, double p);

}  // namespace ns2d

#endif
