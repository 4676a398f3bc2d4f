#include "ns2d/stokes_basis.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "ns2d/errors.hpp"
#include "ns2d/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "basis cache format assumes a little-endian host");

namespace ns2d {

int divfree_capacity(const Grid& g) { return (g.n - 1) * (g.n - 1); }

VelocityField stokes_apply(const Grid& g, double nu, const VelocityField& y) {
  if (nu <= 0.0) throw ConfigError("stokes_apply requires nu > 0");
  const double div = max_abs_div(g, y);
  const double tol = 1e-8 * std::max(1.0, max_abs(y));
  if (div > tol) {
    throw PreconditionError("stokes_apply: input not divergence-free, max |div y| = " +
                            std::to_string(div));
  }
  return scale(-nu, leray_project(g, laplacian(g, y)));
}

// ---------------------------------------------------------------------------
// Sparse saddle-point Stokes solver:  -lap y + grad q = b, div y = 0.

namespace {

class StokesSaddle {
 public:
  explicit StokesSaddle(const Grid& g) : n_(g.n), h_(g.h) {
    const int n = n_;
    nu_dofs_ = (n - 1) * n;
    nv_dofs_ = n * (n - 1);
    const int nq = n * n;
    const int N = nu_dofs_ + nv_dofs_ + nq;
    const double ih2 = 1.0 / (h_ * h_);
    const double ih = 1.0 / h_;

    auto iu = [this, n](int i, int j) { return (i - 1) * n + j; };
    auto iv = [this, n](int i, int j) { return nu_dofs_ + i * (n - 1) + (j - 1); };
    auto iq = [this, n](int i, int j) { return nu_dofs_ + nv_dofs_ + i * n + j; };

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(8) * N);

    // u-momentum rows
    for (int i = 1; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const int row = iu(i, j);
        double diag = 4.0 * ih2;
        if (i > 1) trip.emplace_back(row, iu(i - 1, j), -ih2);
        if (i < n - 1) trip.emplace_back(row, iu(i + 1, j), -ih2);
        if (j > 0) trip.emplace_back(row, iu(i, j - 1), -ih2); else diag += ih2;
        if (j < n - 1) trip.emplace_back(row, iu(i, j + 1), -ih2); else diag += ih2;
        trip.emplace_back(row, row, diag);
        trip.emplace_back(row, iq(i, j), ih);
        trip.emplace_back(row, iq(i - 1, j), -ih);
      }
    }
    // v-momentum rows
    for (int i = 0; i < n; ++i) {
      for (int j = 1; j < n; ++j) {
        const int row = iv(i, j);
        double diag = 4.0 * ih2;
        if (j > 1) trip.emplace_back(row, iv(i, j - 1), -ih2);
        if (j < n - 1) trip.emplace_back(row, iv(i, j + 1), -ih2);
        if (i > 0) trip.emplace_back(row, iv(i - 1, j), -ih2); else diag += ih2;
        if (i < n - 1) trip.emplace_back(row, iv(i + 1, j), -ih2); else diag += ih2;
        trip.emplace_back(row, row, diag);
        trip.emplace_back(row, iq(i, j), ih);
        trip.emplace_back(row, iq(i, j - 1), -ih);
      }
    }
    // continuity rows; the pressure at cell (0,0) is pinned to fix the
    // constant mode (its continuity equation is implied by the others).
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const int row = iq(i, j);
        if (i == 0 && j == 0) {
          trip.emplace_back(row, row, 1.0);
          continue;
        }
        if (i > 0) trip.emplace_back(row, iu(i, j), -ih);
        if (i < n - 1) trip.emplace_back(row, iu(i + 1, j), ih);
        if (j > 0) trip.emplace_back(row, iv(i, j), -ih);
        if (j < n - 1) trip.emplace_back(row, iv(i, j + 1), ih);
      }
    }

    Eigen::SparseMatrix<double> A(N, N);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    lu_.compute(A);
    if (lu_.info() != Eigen::Success) {
      throw NumericalError("Stokes saddle factorization failed at n=" + std::to_string(n));
    }
  }

  VelocityField solve(const Grid& g, const VelocityField& b) const {
    const int n = n_;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nu_dofs_ + nv_dofs_ + n * n);
    int at = 0;
    for (int i = 1; i < n; ++i)
      for (int j = 0; j < n; ++j) rhs[at++] = b.u_at(i, j);
    for (int i = 0; i < n; ++i)
      for (int j = 1; j < n; ++j) rhs[at++] = b.v_at(i, j);
    Eigen::VectorXd x = lu_.solve(rhs);
    if (lu_.info() != Eigen::Success) {
      throw NumericalError("Stokes saddle solve failed");
    }
    VelocityField y(g);
    at = 0;
    for (int i = 1; i < n; ++i)
      for (int j = 0; j < n; ++j) y.u_at(i, j) = x[at++];
    for (int i = 0; i < n; ++i)
      for (int j = 1; j < n; ++j) y.v_at(i, j) = x[at++];
    return y;
  }

 private:
  int n_;
  double h_;
  int nu_dofs_ = 0, nv_dofs_ = 0;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
};

const StokesSaddle& cached_saddle(const Grid& g) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<StokesSaddle>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(g.n);
  if (it == cache.end()) {
    it = cache.emplace(g.n, std::make_unique<StokesSaddle>(g)).first;
  }
  return *it->second;
}

}  // namespace

VelocityField stokes_saddle_solve(const Grid& g, const VelocityField& b) {
  return cached_saddle(g).solve(g, b);
}

// ---------------------------------------------------------------------------
// Eigenbasis

namespace {

void orthonormalize(const Grid& g, std::vector<VelocityField>& X) {
  const int m = static_cast<int>(X.size());
  for (int c = 0; c < m; ++c) {
    for (int pass = 0; pass < 2; ++pass) {
      for (int b = 0; b < c; ++b) {
        const double d = inner_L2(g, X[c], X[b]);
        X[c] = axpy(-d, X[b], X[c]);
      }
    }
    const double nrm = std::sqrt(inner_L2(g, X[c], X[c]));
    if (!(nrm > 1e-14)) {
      throw NumericalError("eigensolver block became rank-deficient");
    }
    X[c] = scale(1.0 / nrm, X[c]);
  }
}

std::vector<VelocityField> rotate_block(const std::vector<VelocityField>& X,
                                        const Eigen::MatrixXd& Q) {
  const int m = static_cast<int>(X.size());
  std::vector<VelocityField> out(m);
  for (int c = 0; c < m; ++c) {
    VelocityField acc = scale(Q(0, c), X[0]);
    for (int a = 1; a < m; ++a) acc = axpy(Q(a, c), X[a], acc);
    out[c] = std::move(acc);
  }
  return out;
}

void fix_sign(VelocityField& psi) {
  const double thresh = 1e-12 * std::max(1.0, max_abs(psi));
  double lead = 0.0;
  for (double x : psi.u) {
    if (std::abs(x) > thresh) { lead = x; break; }
  }
  if (lead == 0.0) {
    for (double x : psi.v) {
      if (std::abs(x) > thresh) { lead = x; break; }
    }
  }
  if (lead < 0.0) psi = scale(-1.0, psi);
}

VelocityField apply_A(const Grid& g, double nu, const VelocityField& y) {
  return scale(-nu, leray_project(g, laplacian(g, y)));
}

}  // namespace

StokesEigenbasis compute_eigenbasis(const Grid& g, double nu, int k) {
  if (nu <= 0.0) throw ConfigError("compute_eigenbasis requires nu > 0");
  const int cap = divfree_capacity(g);
  if (k < 1 || k > cap) {
    throw ConfigError("mode count k=" + std::to_string(k) +
                      " outside [1, " + std::to_string(cap) +
                      "] for n=" + std::to_string(g.n));
  }
  const int m = std::min(cap, k + std::max(4, k / 4));

  Rng rng(0x53544b4221ULL);  // fixed seed: basis is a pure function of (n, nu, k)
  std::vector<VelocityField> X(m);
  for (int c = 0; c < m; ++c) X[c] = random_divfree_field(g, rng);
  orthonormalize(g, X);

  const int max_sweeps = 600;
  const double rel_tol = 1e-8;
  std::vector<double> theta(m, 0.0);
  double worst = 0.0;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    for (int c = 0; c < m; ++c) {
      X[c] = leray_project(g, stokes_saddle_solve(g, X[c]));
    }
    orthonormalize(g, X);

    std::vector<VelocityField> AX(m);
    for (int c = 0; c < m; ++c) AX[c] = apply_A(g, nu, X[c]);
    Eigen::MatrixXd H(m, m);
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) H(a, b) = inner_L2(g, AX[a], X[b]);
    }
    H = 0.5 * (H + H.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    if (es.info() != Eigen::Success) {
      throw NumericalError("Rayleigh-Ritz eigensolve failed");
    }
    const Eigen::MatrixXd& Q = es.eigenvectors();
    X = rotate_block(X, Q);
    AX = rotate_block(AX, Q);
    for (int c = 0; c < m; ++c) theta[c] = es.eigenvalues()[c];

    worst = 0.0;
    for (int j = 0; j < k; ++j) {
      VelocityField r = axpy(-theta[j], X[j], AX[j]);
      const double res = std::sqrt(inner_L2(g, r, r));
      worst = std::max(worst, res / theta[j]);
    }
    if (worst <= rel_tol) {
      StokesEigenbasis B;
      B.grid = g;
      B.nu = nu;
      B.k = k;
      B.lambdas.assign(theta.begin(), theta.begin() + k);
      B.modes.assign(X.begin(), X.begin() + k);
      for (auto& mode : B.modes) fix_sign(mode);
      verify_basis(B);
      return B;
    }
  }
  throw NumericalError("eigensolver did not converge after " + std::to_string(max_sweeps) +
                       " sweeps; worst relative residual " + std::to_string(worst));
}

void verify_basis(const StokesEigenbasis& B) {
  const Grid& g = B.grid;
  if (B.k <= 0 || static_cast<int>(B.lambdas.size()) != B.k ||
      static_cast<int>(B.modes.size()) != B.k) {
    throw IntegrityError("basis: inconsistent mode count");
  }
  for (int j = 0; j < B.k; ++j) {
    if (!(B.lambdas[j] > 0.0)) throw IntegrityError("basis: non-positive eigenvalue");
    if (j > 0 && B.lambdas[j] < B.lambdas[j - 1]) {
      throw IntegrityError("basis: eigenvalues not ascending");
    }
  }
  for (int a = 0; a < B.k; ++a) {
    for (int b = a; b < B.k; ++b) {
      const double d = inner_L2(g, B.modes[a], B.modes[b]) - (a == b ? 1.0 : 0.0);
      if (std::abs(d) > 1e-10) {
        throw IntegrityError("basis: orthonormality violated at (" + std::to_string(a) +
                             "," + std::to_string(b) + "), defect " + std::to_string(d));
      }
    }
  }
  for (int j = 0; j < B.k; ++j) {
    const double dv = max_abs_div(g, B.modes[j]);
    if (dv > 1e-10) {
      throw IntegrityError("basis: mode " + std::to_string(j) + " has divergence " +
                           std::to_string(dv));
    }
    VelocityField r = axpy(-B.lambdas[j], B.modes[j], apply_A(g, B.nu, B.modes[j]));
    const double res = std::sqrt(inner_L2(g, r, r));
    if (res > 1e-8 * B.lambdas[j]) {
      throw IntegrityError("basis: eigenpair residual " + std::to_string(res) +
                           " exceeds tolerance for mode " + std::to_string(j));
    }
  }
}

std::vector<double> project_coeffs(const StokesEigenbasis& B, const VelocityField& y) {
  std::vector<double> c(B.k);
  for (int j = 0; j < B.k; ++j) c[j] = inner_L2(B.grid, y, B.modes[j]);
  return c;
}

VelocityField reconstruct(const StokesEigenbasis& B, std::span<const double> coeffs) {
  if (static_cast<int>(coeffs.size()) != B.k) {
    throw DimensionError("reconstruct: coefficient count mismatch");
  }
  VelocityField out(B.grid);
  for (int j = 0; j < B.k; ++j) {
    const double c = coeffs[j];
    if (c == 0.0) continue;
    const VelocityField& m = B.modes[j];
    for (size_t i = 0; i < out.u.size(); ++i) out.u[i] += c * m.u[i];
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] += c * m.v[i];
  }
  return out;
}

VelocityField frac_power_apply(const StokesEigenbasis& B, double alpha,
                               const VelocityField& y) {
  std::vector<double> c = project_coeffs(B, y);
  for (int j = 0; j < B.k; ++j) c[j] *= std::pow(B.lambdas[j], alpha);
  return reconstruct(B, c);
}

// ---------------------------------------------------------------------------
// Binary cache

namespace {

constexpr char kMagic[4] = {'S', 'T', 'K', 'B'};
constexpr std::uint32_t kVersion = 1;

void write_bytes(std::ofstream& os, const void* p, size_t bytes) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(bytes));
}

void read_bytes(std::ifstream& is, void* p, size_t bytes, const char* what) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(bytes));
  if (static_cast<size_t>(is.gcount()) != bytes) {
    throw FormatError(std::string("basis cache truncated while reading ") + what);
  }
}

}  // namespace

void save_basis(const StokesEigenbasis& B, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot open '" + path + "' for writing");
  write_bytes(os, kMagic, 4);
  const std::uint32_t ver = kVersion, n = static_cast<std::uint32_t>(B.grid.n),
                      k = static_cast<std::uint32_t>(B.k);
  write_bytes(os, &ver, 4);
  write_bytes(os, &n, 4);
  write_bytes(os, &k, 4);
  write_bytes(os, &B.nu, 8);
  write_bytes(os, B.lambdas.data(), sizeof(double) * B.lambdas.size());
  for (const auto& mode : B.modes) {
    write_bytes(os, mode.u.data(), sizeof(double) * mode.u.size());
    write_bytes(os, mode.v.data(), sizeof(double) * mode.v.size());
  }
  if (!os) throw FormatError("write failure on '" + path + "'");
}

StokesEigenbasis load_basis(const std::string& path, int expect_n) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open '" + path + "'");
  char magic[4];
  read_bytes(is, magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError("'" + path + "' is not a basis cache (bad magic)");
  }
  std::uint32_t ver = 0, n = 0, k = 0;
  double nu = 0.0;
  read_bytes(is, &ver, 4, "version");
  if (ver != kVersion) {
    throw FormatError("basis cache version " + std::to_string(ver) + " unsupported");
  }
  read_bytes(is, &n, 4, "n");
  read_bytes(is, &k, 4, "k");
  read_bytes(is, &nu, 8, "nu");
  if (n < 8 || n > 100000 || k == 0) {
    throw FormatError("basis cache header has implausible n/k");
  }
  if (expect_n >= 0 && static_cast<int>(n) != expect_n) {
    throw IntegrityError("basis cache grid mismatch: file has n=" + std::to_string(n) +
                         ", expected n=" + std::to_string(expect_n));
  }
  StokesEigenbasis B;
  B.grid = build_grid(static_cast<int>(n));
  B.nu = nu;
  B.k = static_cast<int>(k);
  B.lambdas.resize(k);
  read_bytes(is, B.lambdas.data(), sizeof(double) * k, "lambdas");
  B.modes.resize(k);
  for (auto& mode : B.modes) {
    mode = VelocityField(B.grid);
    read_bytes(is, mode.u.data(), sizeof(double) * mode.u.size(), "mode u block");
    read_bytes(is, mode.v.data(), sizeof(double) * mode.v.size(), "mode v block");
  }
  verify_basis(B);
  return B;
}

}  // namespace ns2d
