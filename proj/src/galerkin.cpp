#include "ns2d/galerkin.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "ns2d/errors.hpp"

namespace ns2d {

// ---------------------------------------------------------------------------
// Center-interpolated mode data shared by the tensor assembly and the direct
// quadrature: plain averages for values, centered differences for gradients,
// ghost reflection at the tangential walls.

namespace {

struct CenterData {
  int n = 0;
  std::vector<double> uc, vc, dxu, dyu, dxv, dyv;  // n*n each, row-major in i
};

CenterData center_data(const Grid& g, const VelocityField& y) {
  const int n = g.n;
  const double ih = 1.0 / g.h;
  CenterData cd;
  cd.n = n;
  const size_t N2 = static_cast<size_t>(n) * n;
  cd.uc.resize(N2);
  cd.vc.resize(N2);
  cd.dxu.resize(N2);
  cd.dyu.resize(N2);
  cd.dxv.resize(N2);
  cd.dyv.resize(N2);
  auto node_duy = [&](int a, int b) {
    const double above = (b <= n - 1) ? y.u_at(a, b) : -y.u_at(a, b - 1);
    const double below = (b >= 1) ? y.u_at(a, b - 1) : -y.u_at(a, b);
    return (above - below) * ih;
  };
  auto node_dvx = [&](int a, int b) {
    const double right = (a <= n - 1) ? y.v_at(a, b) : -y.v_at(a - 1, b);
    const double left = (a >= 1) ? y.v_at(a - 1, b) : -y.v_at(a, b);
    return (right - left) * ih;
  };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const size_t c = static_cast<size_t>(i) * n + j;
      cd.uc[c] = 0.5 * (y.u_at(i, j) + y.u_at(i + 1, j));
      cd.vc[c] = 0.5 * (y.v_at(i, j) + y.v_at(i, j + 1));
      cd.dxu[c] = (y.u_at(i + 1, j) - y.u_at(i, j)) * ih;
      cd.dyv[c] = (y.v_at(i, j + 1) - y.v_at(i, j)) * ih;
      cd.dyu[c] = 0.25 * (node_duy(i, j) + node_duy(i + 1, j) + node_duy(i, j + 1) +
                          node_duy(i + 1, j + 1));
      cd.dxv[c] = 0.25 * (node_dvx(i, j) + node_dvx(i + 1, j) + node_dvx(i, j + 1) +
                          node_dvx(i + 1, j + 1));
    }
  }
  return cd;
}

double convective_integral_cd(const Grid& g, const CenterData& a, const CenterData& b,
                              const CenterData& c) {
  const size_t N2 = a.uc.size();
  double acc = 0.0;
  for (size_t i = 0; i < N2; ++i) {
    acc += (a.uc[i] * b.dxu[i] + a.vc[i] * b.dyu[i]) * c.uc[i] +
           (a.uc[i] * b.dxv[i] + a.vc[i] * b.dyv[i]) * c.vc[i];
  }
  return acc * g.h * g.h;
}

}  // namespace

double convective_integral(const Grid& g, const VelocityField& a, const VelocityField& b,
                           const VelocityField& c) {
  const CenterData ca = center_data(g, a), cb = center_data(g, b), cc = center_data(g, c);
  return convective_integral_cd(g, ca, cb, cc);
}

double trilinear_form(const Grid& g, const VelocityField& a, const VelocityField& b,
                      const VelocityField& c) {
  const CenterData ca = center_data(g, a), cb = center_data(g, b), cc = center_data(g, c);
  return 0.5 * (convective_integral_cd(g, ca, cb, cc) - convective_integral_cd(g, ca, cc, cb));
}

TrilinearTensor assemble_trilinear(const StokesEigenbasis& B) {
  const Grid& g = B.grid;
  const int k = B.k;
  const int N2 = g.n * g.n;
  using Mat = Eigen::MatrixXd;

  Mat U(N2, k), V(N2, k), DXU(N2, k), DYU(N2, k), DXV(N2, k), DYV(N2, k);
  for (int j = 0; j < k; ++j) {
    const CenterData cd = center_data(g, B.modes[j]);
    U.col(j) = Eigen::Map<const Eigen::VectorXd>(cd.uc.data(), N2);
    V.col(j) = Eigen::Map<const Eigen::VectorXd>(cd.vc.data(), N2);
    DXU.col(j) = Eigen::Map<const Eigen::VectorXd>(cd.dxu.data(), N2);
    DYU.col(j) = Eigen::Map<const Eigen::VectorXd>(cd.dyu.data(), N2);
    DXV.col(j) = Eigen::Map<const Eigen::VectorXd>(cd.dxv.data(), N2);
    DYV.col(j) = Eigen::Map<const Eigen::VectorXd>(cd.dyv.data(), N2);
  }

  TrilinearTensor T;
  T.k = k;
  T.data.assign(static_cast<size_t>(k) * k * k, 0.0);
  const double h2 = g.h * g.h;
  Mat CONVU(N2, k), CONVV(N2, k);
  for (int i = 0; i < k; ++i) {
    // transported index runs over columns: (psi_i . grad) psi_j
    CONVU = DXU.array().colwise() * U.col(i).array() +
            DYU.array().colwise() * V.col(i).array();
    CONVV = DXV.array().colwise() * U.col(i).array() +
            DYV.array().colwise() * V.col(i).array();
    Mat Graw = h2 * (CONVU.transpose() * U + CONVV.transpose() * V);  // (j, l)
    Mat S = 0.5 * (Graw - Graw.transpose());
    for (int j = 0; j < k; ++j) {
      for (int l = 0; l < k; ++l) {
        T.data[(static_cast<size_t>(i) * k + j) * k + l] = S(j, l);
      }
    }
  }
  return T;
}

void TrilinearTensor::contract(std::span<const double> a, std::span<const double> c,
                               std::vector<double>& out) const {
  out.assign(k, 0.0);
  for (int i = 0; i < k; ++i) {
    const double ai = a[i];
    if (ai == 0.0) continue;
    const double* plane = data.data() + static_cast<size_t>(i) * k * k;
    for (int j = 0; j < k; ++j) {
      const double w = ai * c[j];
      if (w == 0.0) continue;
      const double* row = plane + static_cast<size_t>(j) * k;
      for (int l = 0; l < k; ++l) out[l] += w * row[l];
    }
  }
}

double TrilinearTensor::form(std::span<const double> a, std::span<const double> c,
                             std::span<const double> w) const {
  std::vector<double> buf;
  contract(a, c, buf);
  double acc = 0.0;
  for (int l = 0; l < k; ++l) acc += buf[l] * w[l];
  return acc;
}

// ---------------------------------------------------------------------------
// EField implementations

namespace {

class ConstantE final : public EField {
 public:
  explicit ConstantE(std::vector<double> c) : c_(std::move(c)) {}
  ConstantE(std::vector<double> c, Residual r) : c_(std::move(c)), res_(std::move(r)), has_res_(true) {}
  std::span<const double> at_step(int) const override { return c_; }
  std::span<const double> at_stage(int) const override { return c_; }
  const Residual* residual() const override { return has_res_ ? &res_ : nullptr; }

 private:
  std::vector<double> c_;
  Residual res_;
  bool has_res_ = false;
};

class TrajectoryE final : public EField {
 public:
  TrajectoryE(std::shared_ptr<const Trajectory> t, double scale)
      : traj_(std::move(t)), scale_(scale) {
    if (scale_ != 1.0) {
      scaled_coeffs_ = traj_->coeffs;
      scaled_stages_ = traj_->stage_coeffs;
      for (auto& v : scaled_coeffs_)
        for (auto& x : v) x *= scale_;
      for (auto& v : scaled_stages_)
        for (auto& x : v) x *= scale_;
    }
  }
  std::span<const double> at_step(int m) const override {
    const auto& cs = (scale_ != 1.0) ? scaled_coeffs_ : traj_->coeffs;
    m = std::clamp(m, 0, static_cast<int>(cs.size()) - 1);
    return cs[m];
  }
  std::span<const double> at_stage(int m) const override {
    const auto& st = (scale_ != 1.0) ? scaled_stages_ : traj_->stage_coeffs;
    if (m >= 0 && m < static_cast<int>(st.size())) return st[m];
    return at_step(m + 1);  // fall back to linear-in-time endpoint
  }

 private:
  std::shared_ptr<const Trajectory> traj_;
  double scale_;
  std::vector<std::vector<double>> scaled_coeffs_, scaled_stages_;
};

}  // namespace

std::shared_ptr<const EField> make_constant_efield(std::vector<double> coeffs) {
  return std::make_shared<ConstantE>(std::move(coeffs));
}

std::shared_ptr<const EField> make_constant_efield(const StokesEigenbasis& B,
                                                   const VelocityField& e) {
  std::vector<double> c = project_coeffs(B, e);
  VelocityField r = axpy(-1.0, reconstruct(B, c), e);
  const double rnorm = std::sqrt(inner_L2(B.grid, r, r));
  if (rnorm <= 1e-12 * std::max(1.0, std::sqrt(inner_L2(B.grid, e, e)))) {
    return std::make_shared<ConstantE>(std::move(c));
  }
  EField::Residual res;
  res.k = B.k;
  res.l2 = rnorm;
  res.as_transporter.resize(static_cast<size_t>(B.k) * B.k);
  res.as_transported.resize(static_cast<size_t>(B.k) * B.k);
  for (int a = 0; a < B.k; ++a) {
    for (int j = 0; j < B.k; ++j) {
      res.as_transporter[static_cast<size_t>(a) * B.k + j] =
          trilinear_form(B.grid, r, B.modes[a], B.modes[j]);
      res.as_transported[static_cast<size_t>(a) * B.k + j] =
          trilinear_form(B.grid, B.modes[a], r, B.modes[j]);
    }
  }
  return std::make_shared<ConstantE>(std::move(c), std::move(res));
}

std::shared_ptr<const EField> make_trajectory_efield(std::shared_ptr<const Trajectory> t,
                                                     double scale) {
  return std::make_shared<TrajectoryE>(std::move(t), scale);
}

// ---------------------------------------------------------------------------
// Moment sources

namespace {

class ZeroSource final : public MomentSource {
 public:
  void eval(int, int, double, std::vector<double>& out) const override {
    std::fill(out.begin(), out.end(), 0.0);
  }
};

class ForceSource final : public MomentSource {
 public:
  ForceSource(ForceSpec F, const StokesEigenbasis& B) : F_(std::move(F)), B_(&B) {}
  void eval(int, int, double t, std::vector<double>& out) const override {
    out = F_.moments(*B_, t);
  }

 private:
  ForceSpec F_;
  const StokesEigenbasis* B_;
};

class QuadraticSource final : public MomentSource {
 public:
  QuadraticSource(std::shared_ptr<const Trajectory> A, std::shared_ptr<const Trajectory> C,
                  const TrilinearTensor& T3, double factor, bool symmetrized)
      : A_(std::move(A)), C_(std::move(C)), T3_(&T3), factor_(factor), sym_(symmetrized) {}

  void eval(int step, int stage, double, std::vector<double>& out) const override {
    std::span<const double> a = state(*A_, step, stage);
    std::span<const double> c = state(*C_, step, stage);
    std::vector<double> buf;
    T3_->contract(a, c, buf);
    out.assign(T3_->k, 0.0);
    for (int l = 0; l < T3_->k; ++l) out[l] = factor_ * buf[l];
    if (sym_) {
      T3_->contract(c, a, buf);
      for (int l = 0; l < T3_->k; ++l) out[l] += factor_ * buf[l];
    }
  }

 private:
  static std::span<const double> state(const Trajectory& t, int step, int stage) {
    if (stage == 0) {
      const int m = std::clamp(step, 0, static_cast<int>(t.coeffs.size()) - 1);
      return t.coeffs[m];
    }
    if (step >= 0 && step < static_cast<int>(t.stage_coeffs.size())) {
      return t.stage_coeffs[step];
    }
    const int m = std::clamp(step + 1, 0, static_cast<int>(t.coeffs.size()) - 1);
    return t.coeffs[m];
  }

  std::shared_ptr<const Trajectory> A_, C_;
  const TrilinearTensor* T3_;
  double factor_;
  bool sym_;
};

}  // namespace

std::shared_ptr<const MomentSource> make_zero_source() {
  return std::make_shared<ZeroSource>();
}

std::shared_ptr<const MomentSource> make_force_source(ForceSpec F, const StokesEigenbasis& B) {
  return std::make_shared<ForceSource>(std::move(F), B);
}

std::shared_ptr<const MomentSource> make_quadratic_source(
    std::shared_ptr<const Trajectory> A, std::shared_ptr<const Trajectory> C,
    const TrilinearTensor& T3, double factor, bool symmetrized) {
  return std::make_shared<QuadraticSource>(std::move(A), std::move(C), T3, factor, symmetrized);
}

// ---------------------------------------------------------------------------
// Integrator

namespace {

// E = exp(-x), phi1 = (1 - E)/x, phi2 = (E - 1 + x)/x^2, series-guarded.
void exp_phis(double x, double& E, double& phi1, double& phi2) {
  E = std::exp(-x);
  if (x < 1e-2) {
    phi1 = 1.0 + x * (-1.0 / 2 + x * (1.0 / 6 + x * (-1.0 / 24 + x * (1.0 / 120 + x * (-1.0 / 720 + x / 5040)))));
    phi2 = 0.5 + x * (-1.0 / 6 + x * (1.0 / 24 + x * (-1.0 / 120 + x * (1.0 / 720 + x * (-1.0 / 5040 + x / 40320)))));
  } else {
    const double em = std::expm1(-x);
    phi1 = -em / x;
    phi2 = (x + em) / (x * x);
  }
}

struct System {
  const GalerkinConfig* cfg;
  const TrilinearTensor* T3;
  const MomentSource* source;
  const StokesEigenbasis* B;

  void eval_nonstiff(std::span<const double> c, int step, int stage, double t,
                     std::vector<double>& out, std::vector<double>& buf) const {
    const int k = B->k;
    source->eval(step, stage, t, out);
    if (static_cast<int>(out.size()) != k) {
      throw DimensionError("moment source returned wrong size");
    }
    if (cfg->nu0 != 0.0) {
      T3->contract(c, c, buf);
      for (int j = 0; j < k; ++j) out[j] -= cfg->nu0 * buf[j];
    }
    if (cfg->e1) {
      std::span<const double> e = (stage == 0) ? cfg->e1->at_step(step) : cfg->e1->at_stage(step);
      T3->contract(e, c, buf);
      for (int j = 0; j < k; ++j) out[j] -= buf[j];
      if (const auto* res = cfg->e1->residual()) {
        for (int j = 0; j < k; ++j) {
          double s = 0.0;
          for (int l = 0; l < k; ++l) s += c[l] * res->as_transporter[static_cast<size_t>(l) * k + j];
          out[j] -= s;
        }
      }
    }
    if (cfg->e2) {
      std::span<const double> e = (stage == 0) ? cfg->e2->at_step(step) : cfg->e2->at_stage(step);
      T3->contract(c, e, buf);
      for (int j = 0; j < k; ++j) out[j] -= buf[j];
      if (const auto* res = cfg->e2->residual()) {
        for (int j = 0; j < k; ++j) {
          double s = 0.0;
          for (int l = 0; l < k; ++l) s += c[l] * res->as_transported[static_cast<size_t>(l) * k + j];
          out[j] -= s;
        }
      }
    }
  }
};

int step_count(const GalerkinConfig& cfg) {
  if (!(cfg.dt > 0.0) || !(cfg.T > 0.0)) throw ConfigError("dt and T must be positive");
  if (cfg.dt > cfg.T * (1.0 + 1e-12)) throw ConfigError("dt must not exceed T");
  const long long steps = std::llround(cfg.T / cfg.dt);
  if (steps < 1 || std::abs(steps * cfg.dt - cfg.T) > 1e-9 * std::max(1.0, cfg.T)) {
    throw ConfigError("T must be an integral multiple of dt");
  }
  return static_cast<int>(steps);
}

void check_cfg(const GalerkinConfig& cfg, const StokesEigenbasis& B,
               const TrilinearTensor* T3) {
  if (!(cfg.nu > 0.0)) throw ConfigError("nu must be positive");
  if (cfg.nu != B.nu) {
    throw ConfigError("config nu differs from the basis nu (eigenvalues carry nu)");
  }
  if (cfg.nu0 < 0.0) throw ConfigError("nu0 must be >= 0");
  const bool needs_tensor = (cfg.nu0 != 0.0) || cfg.e1 || cfg.e2;
  if (needs_tensor && T3 == nullptr) {
    throw ConfigError("convective terms present but no trilinear tensor supplied");
  }
  if (T3 != nullptr && T3->k != B.k) throw DimensionError("tensor size mismatch");
}

StepMonitor make_monitor(const StokesEigenbasis& B, std::span<const double> c) {
  StepMonitor m;
  double l2sq = 0.0, h1sq = 0.0;
  for (int j = 0; j < B.k; ++j) {
    l2sq += c[j] * c[j];
    h1sq += (B.lambdas[j] / B.nu) * c[j] * c[j];
  }
  m.l2 = std::sqrt(l2sq);
  m.h1 = std::sqrt(h1sq);
  m.l4 = norm_Lr(B.grid, reconstruct(B, c), 4.0);
  return m;
}

}  // namespace

int step_count_of(const GalerkinConfig& cfg) { return step_count(cfg); }

Trajectory integrate(std::span<const double> c0, const GalerkinConfig& cfg,
                     const TrilinearTensor* T3,
                     std::shared_ptr<const MomentSource> source,
                     const StokesEigenbasis& B) {
  check_cfg(cfg, B, T3);
  const int k = B.k;
  if (static_cast<int>(c0.size()) != k) {
    throw DimensionError("initial coefficient vector has wrong size");
  }
  if (!source) source = make_zero_source();
  const int steps = step_count(cfg);
  const double dt = cfg.dt;

  std::vector<double> E(k), p1(k), p2(k);
  for (int j = 0; j < k; ++j) {
    double e, f1, f2;
    exp_phis(B.lambdas[j] * dt, e, f1, f2);
    E[j] = e;
    p1[j] = dt * f1;
    p2[j] = dt * f2;
  }

  System sys{&cfg, T3, source.get(), &B};
  Trajectory traj;
  traj.times.reserve(steps + 1);
  traj.coeffs.reserve(steps + 1);
  traj.stage_coeffs.reserve(steps);
  traj.monitors.reserve(steps + 1);

  std::vector<double> c(c0.begin(), c0.end());
  traj.times.push_back(0.0);
  traj.coeffs.push_back(c);
  traj.monitors.push_back(make_monitor(B, c));

  std::vector<double> N1(k), N2(k), buf, a(k);
  for (int m = 0; m < steps; ++m) {
    const double t = m * dt;
    // the t = 0 force sample is offset to dt/2 so that q-integrable
    // singular amplitudes stay finite
    const double teval = (m == 0) ? t + 0.5 * dt : t;
    sys.eval_nonstiff(c, m, 0, teval, N1, buf);
    for (int j = 0; j < k; ++j) a[j] = E[j] * c[j] + p1[j] * N1[j];
    traj.stage_coeffs.push_back(a);
    sys.eval_nonstiff(a, m, 1, t + dt, N2, buf);
    for (int j = 0; j < k; ++j) c[j] = a[j] + p2[j] * (N2[j] - N1[j]);

    double l2sq = 0.0;
    bool finite = true;
    for (int j = 0; j < k; ++j) {
      if (!std::isfinite(c[j])) finite = false;
      l2sq += c[j] * c[j];
    }
    if (!finite) {
      throw NumericalError("non-finite coefficients at t = " + std::to_string(t + dt));
    }
    if (std::sqrt(l2sq) > cfg.blowup_threshold) {
      throw DivergenceError("blow-up guard tripped at t = " + std::to_string(t + dt) +
                            " (|c| > " + std::to_string(cfg.blowup_threshold) + ")");
    }
    traj.times.push_back((m + 1) * dt);
    traj.coeffs.push_back(c);
    traj.monitors.push_back(make_monitor(B, c));
  }
  return traj;
}

Trajectory integrate(std::span<const double> c0, const GalerkinConfig& cfg,
                     const TrilinearTensor* T3, const ForceSpec& F,
                     const StokesEigenbasis& B) {
  return integrate(c0, cfg, T3, make_force_source(F, B), B);
}

std::vector<double> rhs(std::span<const double> c, double t, const GalerkinConfig& cfg,
                        const TrilinearTensor& T3, const ForceSpec& F,
                        const StokesEigenbasis& B) {
  check_cfg(cfg, B, &T3);
  for (double x : c) {
    if (!std::isfinite(x)) throw NumericalError("rhs: non-finite input state");
  }
  const int step = (cfg.dt > 0.0) ? static_cast<int>(std::llround(t / cfg.dt)) : 0;
  auto source = make_force_source(F, B);
  System sys{&cfg, &T3, source.get(), &B};
  std::vector<double> out(B.k), buf;
  sys.eval_nonstiff(c, step, 0, t, out, buf);
  for (int j = 0; j < B.k; ++j) out[j] -= B.lambdas[j] * c[j];
  return out;
}

double lq_l4_norm(const Trajectory& traj, double q) {
  if (traj.steps() < 1) return 0.0;
  double acc = 0.0;
  for (int m = 0; m < traj.steps(); ++m) {
    const double dt = traj.times[m + 1] - traj.times[m];
    acc += 0.5 * dt * (std::pow(traj.monitors[m].l4, q) + std::pow(traj.monitors[m + 1].l4, q));
  }
  return std::pow(acc, 1.0 / q);
}

EnergyResidual energy_residual(const Trajectory& traj, const GalerkinConfig& cfg,
                               const TrilinearTensor* T3,
                               const std::shared_ptr<const MomentSource>& source,
                               const StokesEigenbasis& B) {
  check_cfg(cfg, B, T3);
  const int steps = traj.steps();
  if (steps < 1) throw PreconditionError("energy_residual needs at least two states");
  const int k = B.k;
  auto src = source ? source : make_zero_source();

  auto a_form = [&](std::span<const double> c) {
    double s = 0.0;
    for (int j = 0; j < k; ++j) s += B.lambdas[j] * c[j] * c[j];
    return s;
  };
  auto be2 = [&](std::span<const double> c, int m) {
    if (!cfg.e2) return 0.0;
    std::span<const double> e = cfg.e2->at_step(m);
    double s = T3->form(c, e, c);
    if (const auto* res = cfg.e2->residual()) {
      for (int i = 0; i < k; ++i) {
        double row = 0.0;
        for (int j = 0; j < k; ++j) row += res->as_transported[static_cast<size_t>(i) * k + j] * c[j];
        s += c[i] * row;
      }
    }
    return s;
  };
  auto g_dot = [&](std::span<const double> c, int m) {
    std::vector<double> gm(k);
    const double t = traj.times[m];
    const double teval = (m == 0 && steps > 0) ? t + 0.5 * (traj.times[1] - traj.times[0]) : t;
    src->eval(m, 0, teval, gm);
    double s = 0.0;
    for (int j = 0; j < k; ++j) s += gm[j] * c[j];
    return s;
  };

  EnergyResidual out;
  out.series.resize(steps);
  std::vector<double> half_energy(steps + 1), diss(steps + 1), be2v(steps + 1), gc(steps + 1);
  for (int m = 0; m <= steps; ++m) {
    const auto& c = traj.coeffs[m];
    double e = 0.0;
    for (int j = 0; j < k; ++j) e += c[j] * c[j];
    half_energy[m] = 0.5 * e;
    diss[m] = a_form(c);
    be2v[m] = be2(c, m);
    gc[m] = g_dot(c, m);
  }
  for (int m = 0; m < steps; ++m) {
    const double dt = traj.times[m + 1] - traj.times[m];
    const double r = (half_energy[m + 1] - half_energy[m]) / dt +
                     0.5 * (diss[m] + diss[m + 1]) + 0.5 * (be2v[m] + be2v[m + 1]) -
                     0.5 * (gc[m] + gc[m + 1]);
    out.series[m] = r;
    out.max_abs = std::max(out.max_abs, std::abs(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pressure recovery

namespace {

// (adv . grad) y at faces: centered differences, ghost reflection at walls,
// transverse component averaged from the four surrounding faces.
VelocityField face_convection(const Grid& g, const VelocityField& adv,
                              const VelocityField& y) {
  const int n = g.n;
  const double i2h = 0.5 / g.h;
  VelocityField out(g);
  for (int i = 1; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double dudx = (y.u_at(i + 1, j) - y.u_at(i - 1, j)) * i2h;
      const double up = (j < n - 1) ? y.u_at(i, j + 1) : -y.u_at(i, j);
      const double dn = (j > 0) ? y.u_at(i, j - 1) : -y.u_at(i, j);
      const double dudy = (up - dn) * i2h;
      const double vloc = 0.25 * (adv.v_at(i - 1, j) + adv.v_at(i, j) +
                                  adv.v_at(i - 1, j + 1) + adv.v_at(i, j + 1));
      out.u_at(i, j) = adv.u_at(i, j) * dudx + vloc * dudy;
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 1; j < n; ++j) {
      const double dvdy = (y.v_at(i, j + 1) - y.v_at(i, j - 1)) * i2h;
      const double rt = (i < n - 1) ? y.v_at(i + 1, j) : -y.v_at(i, j);
      const double lt = (i > 0) ? y.v_at(i - 1, j) : -y.v_at(i, j);
      const double dvdx = (rt - lt) * i2h;
      const double uloc = 0.25 * (adv.u_at(i, j - 1) + adv.u_at(i + 1, j - 1) +
                                  adv.u_at(i, j) + adv.u_at(i + 1, j));
      out.v_at(i, j) = uloc * dvdx + adv.v_at(i, j) * dvdy;
    }
  }
  return out;
}

}  // namespace

ScalarField recover_pressure(const Grid& g, const VelocityField& y_before,
                             const VelocityField& y_after, double dt,
                             const GalerkinConfig& cfg, const ForceSpec& F, double t,
                             const StokesEigenbasis* B, VelocityField* residual_out) {
  if ((cfg.e1 || cfg.e2) && B == nullptr) {
    throw ConfigError("recover_pressure: e-fields require the basis for reconstruction");
  }
  auto spatial = [&](const VelocityField& y, int m, double tt) {
    VelocityField s = scale(-cfg.nu, laplacian(g, y));
    if (cfg.nu0 != 0.0) s = axpy(cfg.nu0, face_convection(g, y, y), s);
    if (cfg.e1) {
      VelocityField e1f = reconstruct(*B, cfg.e1->at_step(m));
      s = axpy(1.0, face_convection(g, e1f, y), s);
    }
    if (cfg.e2) {
      VelocityField e2f = reconstruct(*B, cfg.e2->at_step(m));
      s = axpy(1.0, face_convection(g, y, e2f), s);
    }
    if (!F.is_zero()) s = axpy(-1.0, F.eval_on_faces(g, tt), s);
    return s;
  };
  const int m0 = (cfg.dt > 0.0) ? static_cast<int>(std::llround(t / cfg.dt)) : 0;
  VelocityField R = scale(1.0 / dt, axpy(-1.0, y_before, y_after));
  R = axpy(0.5, spatial(y_before, m0, t), R);
  R = axpy(0.5, spatial(y_after, m0 + 1, t + dt), R);

  ScalarField rhs_div = divergence(g, R);
  for (double& x : rhs_div.a) x = -x;
  ScalarField p = solve_poisson_neumann(g, rhs_div);
  if (residual_out != nullptr) *residual_out = R;
  return p;
}

}  // namespace ns2d
