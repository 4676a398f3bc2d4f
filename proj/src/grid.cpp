#include "ns2d/grid.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "ns2d/errors.hpp"
#include "ns2d/rng.hpp"

namespace ns2d {

Grid build_grid(int n) {
  if (n < 8) {
    throw ConfigError("grid resolution n must be >= 8, got " + std::to_string(n));
  }
  return Grid{n, 1.0 / n};
}

namespace {

void check_conforming(const Grid& g, const VelocityField& y, const char* where) {
  if (y.n != g.n || y.u.size() != static_cast<size_t>(g.n + 1) * g.n ||
      y.v.size() != static_cast<size_t>(g.n) * (g.n + 1)) {
    throw DimensionError(std::string(where) + ": velocity field does not conform to grid n=" +
                         std::to_string(g.n));
  }
}

void check_conforming(const Grid& g, const ScalarField& p, const char* where) {
  if (p.n != g.n || p.a.size() != static_cast<size_t>(g.n) * g.n) {
    throw DimensionError(std::string(where) + ": scalar field does not conform to grid n=" +
                         std::to_string(g.n));
  }
}

}  // namespace

ScalarField divergence(const Grid& g, const VelocityField& y) {
  check_conforming(g, y, "divergence");
  const int n = g.n;
  const double ih = 1.0 / g.h;
  ScalarField d(g);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      d.at(i, j) = (y.u_at(i + 1, j) - y.u_at(i, j) + y.v_at(i, j + 1) - y.v_at(i, j)) * ih;
    }
  }
  return d;
}

VelocityField gradient(const Grid& g, const ScalarField& p) {
  check_conforming(g, p, "gradient");
  const int n = g.n;
  const double ih = 1.0 / g.h;
  VelocityField out(g);
  for (int i = 1; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      out.u_at(i, j) = (p.at(i, j) - p.at(i - 1, j)) * ih;
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 1; j < n; ++j) {
      out.v_at(i, j) = (p.at(i, j) - p.at(i, j - 1)) * ih;
    }
  }
  return out;
}

VelocityField laplacian(const Grid& g, const VelocityField& y) {
  check_conforming(g, y, "laplacian");
  const int n = g.n;
  const double ih2 = 1.0 / (g.h * g.h);
  VelocityField out(g);
  // u component: interior vertical faces only; tangential walls at j=0,n-1.
  for (int i = 1; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double c = y.u_at(i, j);
      const double below = (j > 0) ? y.u_at(i, j - 1) : -c;
      const double above = (j < n - 1) ? y.u_at(i, j + 1) : -c;
      out.u_at(i, j) =
          (y.u_at(i + 1, j) + y.u_at(i - 1, j) + above + below - 4.0 * c) * ih2;
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 1; j < n; ++j) {
      const double c = y.v_at(i, j);
      const double left = (i > 0) ? y.v_at(i - 1, j) : -c;
      const double right = (i < n - 1) ? y.v_at(i + 1, j) : -c;
      out.v_at(i, j) =
          (y.v_at(i, j + 1) + y.v_at(i, j - 1) + left + right - 4.0 * c) * ih2;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Poisson solvers

namespace {

class PoissonNeumann {
 public:
  explicit PoissonNeumann(const Grid& g) : n_(g.n), h_(g.h) {
    const int n = n_;
    const int N = n * n;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(5) * N);
    const double ih2 = 1.0 / (h_ * h_);
    auto idx = [n](int i, int j) { return i * n + j; };
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const int row = idx(i, j);
        if (row == 0) {
          // pinned cell removes the constant null space
          trip.emplace_back(0, 0, 1.0);
          continue;
        }
        double diag = 0.0;
        auto nb = [&](int ii, int jj) {
          if (ii < 0 || ii >= n || jj < 0 || jj >= n) return;  // Neumann: drop
          trip.emplace_back(row, idx(ii, jj), ih2);
          diag -= ih2;
        };
        nb(i - 1, j);
        nb(i + 1, j);
        nb(i, j - 1);
        nb(i, j + 1);
        trip.emplace_back(row, row, diag);
      }
    }
    Eigen::SparseMatrix<double> A(N, N);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    lu_.compute(A);
    if (lu_.info() != Eigen::Success) {
      throw NumericalError("Neumann Poisson factorization failed at n=" + std::to_string(n));
    }
  }

  ScalarField solve(const ScalarField& rhs) const {
    const int n = n_;
    const int N = n * n;
    Eigen::VectorXd b(N);
    double mean = 0.0;
    for (int i = 0; i < N; ++i) mean += rhs.a[i];
    mean /= N;
    for (int i = 0; i < N; ++i) b[i] = rhs.a[i] - mean;  // enforce compatibility
    b[0] = 0.0;  // pinned cell
    Eigen::VectorXd x = lu_.solve(b);
    if (lu_.info() != Eigen::Success) {
      throw NumericalError("Neumann Poisson solve failed");
    }
    double xm = x.mean();
    ScalarField out;
    out.n = n;
    out.a.resize(N);
    for (int i = 0; i < N; ++i) out.a[i] = x[i] - xm;
    return out;
  }

 private:
  int n_;
  double h_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
};

class PoissonDirichlet {
 public:
  explicit PoissonDirichlet(const Grid& g) : n_(g.n), h_(g.h) {
    const int n = n_;
    const int N = n * n;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(5) * N);
    const double ih2 = 1.0 / (h_ * h_);
    auto idx = [n](int i, int j) { return i * n + j; };
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const int row = idx(i, j);
        double diag = 4.0 * ih2;
        auto nb = [&](int ii, int jj) {
          if (ii < 0 || ii >= n || jj < 0 || jj >= n) {
            diag += ih2;  // ghost value = -center
            return;
          }
          trip.emplace_back(row, idx(ii, jj), -ih2);
        };
        nb(i - 1, j);
        nb(i + 1, j);
        nb(i, j - 1);
        nb(i, j + 1);
        trip.emplace_back(row, row, diag);
      }
    }
    Eigen::SparseMatrix<double> A(N, N);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    lu_.compute(A);
    if (lu_.info() != Eigen::Success) {
      throw NumericalError("Dirichlet Poisson factorization failed at n=" + std::to_string(n));
    }
  }

  ScalarField solve(const ScalarField& rhs) const {
    const int N = n_ * n_;
    Eigen::VectorXd b(N);
    for (int i = 0; i < N; ++i) b[i] = rhs.a[i];
    Eigen::VectorXd x = lu_.solve(b);
    if (lu_.info() != Eigen::Success) {
      throw NumericalError("Dirichlet Poisson solve failed");
    }
    ScalarField out;
    out.n = n_;
    out.a.assign(x.data(), x.data() + N);
    return out;
  }

 private:
  int n_;
  double h_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
};

// Factorizations are immutable once built; the registry hands out shared
// const instances keyed by grid size.
template <class Solver>
const Solver& cached_solver(const Grid& g) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<Solver>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(g.n);
  if (it == cache.end()) {
    it = cache.emplace(g.n, std::make_unique<Solver>(g)).first;
  }
  return *it->second;
}

}  // namespace

ScalarField solve_poisson_neumann(const Grid& g, const ScalarField& rhs) {
  check_conforming(g, rhs, "solve_poisson_neumann");
  return cached_solver<PoissonNeumann>(g).solve(rhs);
}

ScalarField solve_poisson_dirichlet(const Grid& g, const ScalarField& rhs) {
  check_conforming(g, rhs, "solve_poisson_dirichlet");
  return cached_solver<PoissonDirichlet>(g).solve(rhs);
}

VelocityField leray_project(const Grid& g, const VelocityField& y) {
  check_conforming(g, y, "leray_project");
  ScalarField d = divergence(g, y);
  ScalarField H = solve_poisson_neumann(g, d);
  VelocityField gh = gradient(g, H);
  VelocityField out(g);
  for (size_t i = 0; i < y.u.size(); ++i) out.u[i] = y.u[i] - gh.u[i];
  for (size_t i = 0; i < y.v.size(); ++i) out.v[i] = y.v[i] - gh.v[i];
  return out;
}

// ---------------------------------------------------------------------------
// Inner products and norms

double inner_L2(const Grid& g, const VelocityField& y1, const VelocityField& y2) {
  check_conforming(g, y1, "inner_L2");
  check_conforming(g, y2, "inner_L2");
  double acc = 0.0;
  for (size_t i = 0; i < y1.u.size(); ++i) acc += y1.u[i] * y2.u[i];
  for (size_t i = 0; i < y1.v.size(); ++i) acc += y1.v[i] * y2.v[i];
  return acc * g.h * g.h;
}

double inner_center(const Grid& g, const ScalarField& p, const ScalarField& q) {
  check_conforming(g, p, "inner_center");
  check_conforming(g, q, "inner_center");
  double acc = 0.0;
  for (size_t i = 0; i < p.a.size(); ++i) acc += p.a[i] * q.a[i];
  return acc * g.h * g.h;
}

double norm_Lr(const Grid& g, const VelocityField& y, double r) {
  if (r < 1.0) {
    throw ConfigError("norm_Lr requires r >= 1, got " + std::to_string(r));
  }
  check_conforming(g, y, "norm_Lr");
  const int n = g.n;
  const bool is_two = (r == 2.0);
  const double half_r = 0.5 * r;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double ul = y.u_at(i, j), ur = y.u_at(i + 1, j);
      const double vb = y.v_at(i, j), vt = y.v_at(i, j + 1);
      const double m2 = 0.5 * (ul * ul + ur * ur) + 0.5 * (vb * vb + vt * vt);
      acc += is_two ? m2 : std::pow(m2, half_r);
    }
  }
  const double integral = acc * g.h * g.h;
  return is_two ? std::sqrt(integral) : std::pow(integral, 1.0 / r);
}

namespace {

// Squared gradient magnitude interpolated to center (i,j); node-located
// tangential differences enter through the average of the four cell corners.
// Exactly the quadrature whose p=2 case reproduces <-lap(y), y>.
double grad_sq_at_center(const Grid& g, const VelocityField& y, int i, int j) {
  const int n = g.n;
  const double ih = 1.0 / g.h;
  auto duy = [&](int a, int b) {  // du/dy at node (a,b), ghost-reflected
    const double above = (b <= n - 1) ? y.u_at(a, b) : -y.u_at(a, b - 1);
    const double below = (b >= 1) ? y.u_at(a, b - 1) : -y.u_at(a, b);
    return (above - below) * ih;
  };
  auto dvx = [&](int a, int b) {  // dv/dx at node (a,b)
    const double right = (a <= n - 1) ? y.v_at(a, b) : -y.v_at(a - 1, b);
    const double left = (a >= 1) ? y.v_at(a - 1, b) : -y.v_at(a, b);
    return (right - left) * ih;
  };
  const double dux = (y.u_at(i + 1, j) - y.u_at(i, j)) * ih;
  const double dvy = (y.v_at(i, j + 1) - y.v_at(i, j)) * ih;
  double s = dux * dux + dvy * dvy;
  const double a1 = duy(i, j), a2 = duy(i + 1, j), a3 = duy(i, j + 1), a4 = duy(i + 1, j + 1);
  s += 0.25 * (a1 * a1 + a2 * a2 + a3 * a3 + a4 * a4);
  const double b1 = dvx(i, j), b2 = dvx(i + 1, j), b3 = dvx(i, j + 1), b4 = dvx(i + 1, j + 1);
  s += 0.25 * (b1 * b1 + b2 * b2 + b3 * b3 + b4 * b4);
  return s;
}

}  // namespace

double norm_H1(const Grid& g, const VelocityField& y) {
  check_conforming(g, y, "norm_H1");
  const int n = g.n;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      acc += grad_sq_at_center(g, y, i, j);
    }
  }
  return std::sqrt(acc * g.h * g.h);
}

double norm_W1p(const Grid& g, const VelocityField& y, double p) {
  if (p < 1.0) {
    throw ConfigError("norm_W1p requires p >= 1, got " + std::to_string(p));
  }
  check_conforming(g, y, "norm_W1p");
  const int n = g.n;
  const bool is_two = (p == 2.0);
  const double half_p = 0.5 * p;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double s = grad_sq_at_center(g, y, i, j);
      acc += is_two ? s : std::pow(s, half_p);
    }
  }
  const double integral = acc * g.h * g.h;
  return is_two ? std::sqrt(integral) : std::pow(integral, 1.0 / p);
}

double max_abs(const VelocityField& y) {
  double m = 0.0;
  for (double x : y.u) m = std::max(m, std::abs(x));
  for (double x : y.v) m = std::max(m, std::abs(x));
  return m;
}

double max_abs(const ScalarField& p) {
  double m = 0.0;
  for (double x : p.a) m = std::max(m, std::abs(x));
  return m;
}

double max_abs_div(const Grid& g, const VelocityField& y) {
  return max_abs(divergence(g, y));
}

VelocityField axpy(double a, const VelocityField& x, const VelocityField& y) {
  if (x.n != y.n) throw DimensionError("axpy: mismatched fields");
  VelocityField out = y;
  for (size_t i = 0; i < out.u.size(); ++i) out.u[i] += a * x.u[i];
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] += a * x.v[i];
  return out;
}

VelocityField scale(double a, const VelocityField& x) {
  VelocityField out = x;
  for (double& t : out.u) t *= a;
  for (double& t : out.v) t *= a;
  return out;
}

VelocityField random_divfree_field(const Grid& g, Rng& rng) {
  // curl of a node-based stream function vanishing on the boundary; the MAC
  // curl of any such stream function is exactly divergence-free.
  const int n = g.n;
  std::vector<double> phi(static_cast<size_t>(n + 1) * (n + 1), 0.0);
  auto ph = [&](int i, int j) -> double& { return phi[static_cast<size_t>(i) * (n + 1) + j]; };
  for (int i = 1; i < n; ++i) {
    for (int j = 1; j < n; ++j) {
      ph(i, j) = rng.uniform(-1.0, 1.0) * g.h;  // scale keeps velocities O(1)
    }
  }
  VelocityField y(g);
  const double ih = 1.0 / g.h;
  for (int i = 1; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      y.u_at(i, j) = (ph(i, j + 1) - ph(i, j)) * ih;
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 1; j < n; ++j) {
      y.v_at(i, j) = -(ph(i + 1, j) - ph(i, j)) * ih;
    }
  }
  return y;
}

VelocityField random_noslip_field(const Grid& g, Rng& rng) {
  const int n = g.n;
  VelocityField y(g);
  for (int i = 1; i < n; ++i) {
    for (int j = 0; j < n; ++j) y.u_at(i, j) = rng.uniform(-1.0, 1.0);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 1; j < n; ++j) y.v_at(i, j) = rng.uniform(-1.0, 1.0);
  }
  return y;
}

}  // namespace ns2d
