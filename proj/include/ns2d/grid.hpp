#ifndef NS2D_GRID_HPP
#define NS2D_GRID_HPP

#include <vector>

namespace ns2d {

/// Uniform MAC (staggered) discretization of the unit square with no-slip
/// walls. Velocity components live on cell faces, scalars at cell centers.
struct Grid {
  int n = 0;     // cells per side
  double h = 0;  // mesh width, exactly 1/n
};

/// n >= 8 required.
Grid build_grid(int n);

/// Staggered velocity field.
///   u(i,j): first component at vertical faces  (i*h, (j+1/2)*h), i=0..n, j=0..n-1
///   v(i,j): second component at horizontal faces ((i+1/2)*h, j*h), i=0..n-1, j=0..n
/// No-slip convention: boundary-normal faces (u at i=0,n and v at j=0,n) hold
/// zero; the tangential condition enters operators through ghost reflection.
struct VelocityField {
  int n = 0;
  std::vector<double> u;  // (n+1) x n, row-major in i
  std::vector<double> v;  // n x (n+1)

  VelocityField() = default;
  explicit VelocityField(const Grid& g)
      : n(g.n), u(static_cast<size_t>(g.n + 1) * g.n, 0.0),
        v(static_cast<size_t>(g.n) * (g.n + 1), 0.0) {}

  double& u_at(int i, int j) { return u[static_cast<size_t>(i) * n + j]; }
  double u_at(int i, int j) const { return u[static_cast<size_t>(i) * n + j]; }
  double& v_at(int i, int j) { return v[static_cast<size_t>(i) * (n + 1) + j]; }
  double v_at(int i, int j) const { return v[static_cast<size_t>(i) * (n + 1) + j]; }
};

/// Cell-centered scalar field, values at ((i+1/2)*h, (j+1/2)*h), i,j=0..n-1.
struct ScalarField {
  int n = 0;
  std::vector<double> a;

  ScalarField() = default;
  explicit ScalarField(const Grid& g)
      : n(g.n), a(static_cast<size_t>(g.n) * g.n, 0.0) {}

  double& at(int i, int j) { return a[static_cast<size_t>(i) * n + j]; }
  double at(int i, int j) const { return a[static_cast<size_t>(i) * n + j]; }
};

// ---------------------------------------------------------------------------
// Differential operators

/// Centered MAC divergence at cell centers.
ScalarField divergence(const Grid& g, const VelocityField& y);

/// Discrete gradient of a cell-centered scalar onto interior faces; boundary
/// faces get zero so that <div y, p> = -<y, grad p> holds exactly.
VelocityField gradient(const Grid& g, const ScalarField& p);

/// Componentwise 5-point Laplacian with ghost reflection for the tangential
/// no-slip condition. Output boundary-normal faces are zero.
VelocityField laplacian(const Grid& g, const VelocityField& y);

/// Leray/Helmholtz projection: y - grad H with  div grad H = div y  (Neumann,
/// zero-mean H). The result is discretely divergence-free.
VelocityField leray_project(const Grid& g, const VelocityField& y);

// ---------------------------------------------------------------------------
// Inner products and norms

/// L2 inner product of velocity fields (face quadrature, h^2 weights).
double inner_L2(const Grid& g, const VelocityField& y1, const VelocityField& y2);

/// L2 inner product of cell-centered scalars.
double inner_center(const Grid& g, const ScalarField& p, const ScalarField& q);

/// L^r norm, r >= 1: midpoint quadrature of |y|^r where the squared magnitude
/// is interpolated to cell centers by averaging the squares of the two
/// adjacent face values per component. For r = 2 this reproduces inner_L2
/// exactly, so the L2 norm and the projection geometry share one quadrature.
double norm_Lr(const Grid& g, const VelocityField& y, double r);

/// L2 norm of the discrete gradient. Tangential wall differences use ghost
/// reflection over half-width cells, which makes <-lap(y), y> = norm_H1(y)^2
/// an exact identity.
double norm_H1(const Grid& g, const VelocityField& y);

/// W^{1,p} seminorm by the same center quadrature applied to |grad y|.
/// norm_W1p(y, 2) == norm_H1(y) exactly.
double norm_W1p(const Grid& g, const VelocityField& y, double p);

double max_abs(const VelocityField& y);
double max_abs(const ScalarField& p);
double max_abs_div(const Grid& g, const VelocityField& y);

// ---------------------------------------------------------------------------
// Cached sparse Poisson solvers (direct factorizations, one per grid size)

/// Solves  lap_N(H) = rhs  with pure Neumann walls; both the rhs and the
/// returned field are mean-corrected. Throws NumericalError on a bad solve.
ScalarField solve_poisson_neumann(const Grid& g, const ScalarField& rhs);

/// Solves  -lap_D(W) = rhs  with homogeneous Dirichlet walls (ghost cells).
ScalarField solve_poisson_dirichlet(const Grid& g, const ScalarField& rhs);

// ---------------------------------------------------------------------------
// Field helpers

VelocityField axpy(double a, const VelocityField& x, const VelocityField& y);
VelocityField scale(double a, const VelocityField& x);

/// Divergence-free random field: curl of a random interior stream function.
VelocityField random_divfree_field(const Grid& g, class Rng& rng);

/// Random no-slip field (not divergence-free in general).
VelocityField random_noslip_field(const Grid& g, class Rng& rng);

}  // namespace ns2d

#endif
