#ifndef NS2D_CONFIG_HPP
#define NS2D_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ns2d/forcing.hpp"
#include "ns2d/galerkin.hpp"

namespace ns2d {

/// rho(t) multiplying a force amplitude.
struct TimeProfile {
  enum class Kind { Const, Sin, ExpDecay, TPow };
  Kind kind = Kind::Const;
  double omega = 1.0;  // sin / expdecay rate
  double beta = 0.0;   // tpow exponent: rho(t) = t^{-beta}

  double eval(double t) const;
};

/// Serializable description of a ForceSpec tree.
struct ForceConfig {
  enum class Type { None, Point, Mode, Vortex, Uniform, Sum };
  Type type = Type::None;
  double x0 = 0.5, y0 = 0.5;   // point location
  double ax = 1.0, ay = 0.0;   // point / uniform amplitude vector
  double amp = 1.0;            // mode / vortex amplitude
  int index = 0;               // mode index (0-based)
  TimeProfile profile;
  std::vector<ForceConfig> children;  // sum terms

  bool has_point() const;
};

struct InitConfig {
  enum class Type { Zero, Coeffs, ModeInit, Random };
  Type type = Type::Zero;
  std::vector<double> coeffs;
  int index = 0;
  double amp = 1.0;
};

struct RunConfig {
  int n = 32;
  int k = 16;
  double nu = 0.05;
  double nu0 = 1.0;
  double p = 1.5;
  double q = 7.0;
  double T = 1.0;
  double dt = 1e-3;
  std::uint64_t seed = 1;
  ForceConfig force;
  InitConfig initial;
  std::string out_dir = "out";
  std::string prefix = "run";
};

/// Parses the sectioned key = value format; unknown sections or keys raise
/// ConfigError naming the offender. Semantic checks included (grid bounds,
/// admissibility when a point force is present, dt/T positivity).
RunConfig parse_config(const std::string& text);

/// Canonical serialization; parse(serialize(parse(x))) == parse(x).
std::string serialize_config(const RunConfig& cfg);

RunConfig load_config_file(const std::string& path);

/// Materializes the force description. Mode-type terms need the basis.
ForceSpec build_force(const ForceConfig& fc, const StokesEigenbasis* B);

/// Initial coefficient vector of length k.
std::vector<double> build_initial(const InitConfig& ic, const StokesEigenbasis& B,
                                  std::uint64_t seed);

GalerkinConfig galerkin_config(const RunConfig& cfg);

/// Fixed-format float (17 significant digits) for reproducible text output.
std::string fmt_g17(double x);

/// time,l2,h1,l4,energy_residual rows (residual left 0 on the first row).
void write_series_csv(const std::string& path, const Trajectory& traj,
                      const EnergyResidual* res);

/// Binary coefficient dump: magic "STKC", u32 version, u32 k, u32 count,
/// then times, then coefficient rows (little-endian doubles).
void write_coeff_dump(const std::string& path, const Trajectory& traj);

}  // namespace ns2d

#endif
