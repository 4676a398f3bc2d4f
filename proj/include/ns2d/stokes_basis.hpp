#ifndef NS2D_STOKES_BASIS_HPP
#define NS2D_STOKES_BASIS_HPP

#include <span>
#include <string>
#include <vector>

#include "ns2d/grid.hpp"

namespace ns2d {

/// Leading eigenpairs of the discrete Stokes operator A = -nu P lap on the
/// divergence-free subspace. Modes are L2-orthonormal (face quadrature) and
/// the lambdas ascend.
struct StokesEigenbasis {
  Grid grid;
  double nu = 0.0;
  int k = 0;
  std::vector<double> lambdas;
  std::vector<VelocityField> modes;
};

/// Dimension of the discretely divergence-free space: (n-1)^2.
int divfree_capacity(const Grid& g);

/// A y = -nu * leray_project(laplacian(y)). Requires y divergence-free up to
/// 1e-8 * max(1, |y|_inf); violations raise PreconditionError with the
/// measured divergence.
VelocityField stokes_apply(const Grid& g, double nu, const VelocityField& y);

/// Block inverse iteration with Rayleigh-Ritz extraction on the projected
/// Laplacian. Deterministic: fixed seed for the start block, sign convention
/// makes the first nonzero component of each mode positive.
StokesEigenbasis compute_eigenbasis(const Grid& g, double nu, int k);

/// Sum_j lambda_j^alpha <y, psi_j> psi_j (spectral calculus on span(B)).
VelocityField frac_power_apply(const StokesEigenbasis& B, double alpha,
                               const VelocityField& y);

/// Coefficients <y, psi_j> for j = 0..k-1.
std::vector<double> project_coeffs(const StokesEigenbasis& B, const VelocityField& y);

/// Sum_j c_j psi_j.
VelocityField reconstruct(const StokesEigenbasis& B, std::span<const double> coeffs);

/// Little-endian binary cache. Header: magic "STKB", u32 version, u32 n,
/// u32 k, f64 nu; then lambdas, then modes in face-major order (u block then
/// v block per mode). Round-trips bit-exactly.
void save_basis(const StokesEigenbasis& B, const std::string& path);

/// Loads and re-verifies the basis invariants (FormatError for malformed
/// files, IntegrityError for invariant violations). When expect_n >= 0, a
/// grid-size mismatch is an IntegrityError naming both values.
StokesEigenbasis load_basis(const std::string& path, int expect_n = -1);

/// Invariant check shared by compute and load: orthonormality and divergence
/// within 1e-10, eigen-residual within 1e-8 * lambda, ascending lambdas.
void verify_basis(const StokesEigenbasis& B);

/// Solves the discrete Stokes saddle problem -lap y + grad q = b, div y = 0
/// (i.e. applies (-P lap)^{-1} to b). Exposed for reuse; factorization is
/// cached per grid size.
VelocityField stokes_saddle_solve(const Grid& g, const VelocityField& b);

}  // namespace ns2d

#endif
