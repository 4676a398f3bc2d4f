#include "ns2d/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "ns2d/errors.hpp"
#include "ns2d/rng.hpp"

namespace ns2d {

double TimeProfile::eval(double t) const {
  switch (kind) {
    case Kind::Const:
      return 1.0;
    case Kind::Sin:
      return std::sin(omega * t);
    case Kind::ExpDecay:
      return std::exp(-omega * t);
    case Kind::TPow:
      return std::pow(t, -beta);
  }
  return 1.0;
}

bool ForceConfig::has_point() const {
  if (type == Type::Point) return true;
  for (const auto& c : children) {
    if (c.has_point()) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct RawSection {
  std::map<std::string, std::string> kv;
  std::vector<std::string> order;
};

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  size_t e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& val) {
  try {
    size_t pos = 0;
    double x = std::stod(val, &pos);
    if (pos != val.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + val + "' as a number");
  }
}

long long parse_int(const std::string& key, const std::string& val) {
  try {
    size_t pos = 0;
    long long x = std::stoll(val, &pos);
    if (pos != val.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + val + "' as an integer");
  }
}

TimeProfile::Kind parse_profile(const std::string& v) {
  if (v == "const") return TimeProfile::Kind::Const;
  if (v == "sin") return TimeProfile::Kind::Sin;
  if (v == "expdecay") return TimeProfile::Kind::ExpDecay;
  if (v == "tpow") return TimeProfile::Kind::TPow;
  throw ConfigError("config key 'profile': unknown profile '" + v + "'");
}

std::string profile_name(TimeProfile::Kind k) {
  switch (k) {
    case TimeProfile::Kind::Const: return "const";
    case TimeProfile::Kind::Sin: return "sin";
    case TimeProfile::Kind::ExpDecay: return "expdecay";
    case TimeProfile::Kind::TPow: return "tpow";
  }
  return "const";
}

ForceConfig::Type parse_force_type(const std::string& v) {
  if (v == "none") return ForceConfig::Type::None;
  if (v == "point") return ForceConfig::Type::Point;
  if (v == "mode") return ForceConfig::Type::Mode;
  if (v == "vortex") return ForceConfig::Type::Vortex;
  if (v == "uniform") return ForceConfig::Type::Uniform;
  if (v == "sum") return ForceConfig::Type::Sum;
  throw ConfigError("config key 'type': unknown force type '" + v + "'");
}

std::string force_type_name(ForceConfig::Type t) {
  switch (t) {
    case ForceConfig::Type::None: return "none";
    case ForceConfig::Type::Point: return "point";
    case ForceConfig::Type::Mode: return "mode";
    case ForceConfig::Type::Vortex: return "vortex";
    case ForceConfig::Type::Uniform: return "uniform";
    case ForceConfig::Type::Sum: return "sum";
  }
  return "none";
}

ForceConfig parse_force_section(const RawSection& sec, const std::string& name) {
  ForceConfig fc;
  for (const auto& key : sec.order) {
    const std::string& val = sec.kv.at(key);
    if (key == "type") fc.type = parse_force_type(val);
    else if (key == "x0") fc.x0 = parse_double(key, val);
    else if (key == "y0") fc.y0 = parse_double(key, val);
    else if (key == "ax") fc.ax = parse_double(key, val);
    else if (key == "ay") fc.ay = parse_double(key, val);
    else if (key == "amp") fc.amp = parse_double(key, val);
    else if (key == "index") fc.index = static_cast<int>(parse_int(key, val));
    else if (key == "profile") fc.profile.kind = parse_profile(val);
    else if (key == "omega") fc.profile.omega = parse_double(key, val);
    else if (key == "beta") fc.profile.beta = parse_double(key, val);
    else throw ConfigError("unknown key '" + key + "' in section [" + name + "]");
  }
  return fc;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  std::map<std::string, RawSection> sections;
  std::vector<std::string> section_order;
  std::string current = "run";
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section header");
      }
      current = trim(line.substr(1, line.size() - 2));
      if (current.empty()) {
        throw ConfigError("config line " + std::to_string(lineno) + ": empty section name");
      }
      if (!sections.count(current)) section_order.push_back(current);
      sections[current];
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    }
    auto& sec = sections[current];
    if (!sec.kv.count(key)) sec.order.push_back(key);
    sec.kv[key] = val;
  }

  RunConfig cfg;
  for (const auto& [name, sec] : sections) {
    if (name == "run") {
      for (const auto& key : sec.order) {
        const std::string& val = sec.kv.at(key);
        if (key == "n") cfg.n = static_cast<int>(parse_int(key, val));
        else if (key == "k") cfg.k = static_cast<int>(parse_int(key, val));
        else if (key == "nu") cfg.nu = parse_double(key, val);
        else if (key == "nu0") cfg.nu0 = parse_double(key, val);
        else if (key == "p") cfg.p = parse_double(key, val);
        else if (key == "q") cfg.q = parse_double(key, val);
        else if (key == "T") cfg.T = parse_double(key, val);
        else if (key == "dt") cfg.dt = parse_double(key, val);
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(key, val));
        else throw ConfigError("unknown key '" + key + "' in section [run]");
      }
    } else if (name == "force" || name.rfind("force.", 0) == 0) {
      // handled below in order
    } else if (name == "initial") {
      for (const auto& key : sec.order) {
        const std::string& val = sec.kv.at(key);
        if (key == "type") {
          if (val == "zero") cfg.initial.type = InitConfig::Type::Zero;
          else if (val == "coeffs") cfg.initial.type = InitConfig::Type::Coeffs;
          else if (val == "mode") cfg.initial.type = InitConfig::Type::ModeInit;
          else if (val == "random") cfg.initial.type = InitConfig::Type::Random;
          else throw ConfigError("config key 'type': unknown initial type '" + val + "'");
        } else if (key == "coeffs") {
          cfg.initial.coeffs.clear();
          std::istringstream cs(val);
          std::string tok;
          while (cs >> tok) cfg.initial.coeffs.push_back(parse_double("coeffs", tok));
        } else if (key == "index") {
          cfg.initial.index = static_cast<int>(parse_int(key, val));
        } else if (key == "amp") {
          cfg.initial.amp = parse_double(key, val);
        } else {
          throw ConfigError("unknown key '" + key + "' in section [initial]");
        }
      }
    } else if (name == "output") {
      for (const auto& key : sec.order) {
        const std::string& val = sec.kv.at(key);
        if (key == "dir") cfg.out_dir = val;
        else if (key == "prefix") cfg.prefix = val;
        else throw ConfigError("unknown key '" + key + "' in section [output]");
      }
    } else {
      throw ConfigError("unknown config section [" + name + "]");
    }
  }

  size_t child_sections = 0;
  for (const auto& name : section_order) {
    if (name.rfind("force.", 0) == 0) ++child_sections;
  }
  if (sections.count("force")) {
    cfg.force = parse_force_section(sections.at("force"), "force");
    if (cfg.force.type == ForceConfig::Type::Sum) {
      for (int i = 1;; ++i) {
        const std::string child = "force." + std::to_string(i);
        if (!sections.count(child)) break;
        cfg.force.children.push_back(parse_force_section(sections.at(child), child));
      }
      if (cfg.force.children.empty()) {
        throw ConfigError("force type 'sum' needs child sections [force.1], [force.2], ...");
      }
    }
  }
  if (child_sections != cfg.force.children.size()) {
    throw ConfigError("force child sections must be contiguous [force.1..N] under a sum force");
  }

  // semantic validation
  if (cfg.n < 8) throw ConfigError("config: n must be >= 8");
  if (cfg.k < 1) throw ConfigError("config: k must be >= 1");
  if (!(cfg.nu > 0.0)) throw ConfigError("config: nu must be positive");
  if (cfg.nu0 < 0.0) throw ConfigError("config: nu0 must be >= 0");
  if (!(cfg.dt > 0.0) || !(cfg.T > 0.0)) throw ConfigError("config: dt and T must be positive");
  if (cfg.force.has_point()) {
    validate_params(cfg.p, cfg.q);  // rough force requires admissible (p, q)
  }
  return cfg;
}

namespace {

void serialize_force_section(std::ostringstream& os, const ForceConfig& fc,
                             const std::string& name) {
  os << "[" << name << "]\n";
  os << "type = " << force_type_name(fc.type) << "\n";
  switch (fc.type) {
    case ForceConfig::Type::None:
    case ForceConfig::Type::Sum:
      break;
    case ForceConfig::Type::Point:
      os << "x0 = " << fmt_g17(fc.x0) << "\n";
      os << "y0 = " << fmt_g17(fc.y0) << "\n";
      os << "ax = " << fmt_g17(fc.ax) << "\n";
      os << "ay = " << fmt_g17(fc.ay) << "\n";
      break;
    case ForceConfig::Type::Mode:
      os << "index = " << fc.index << "\n";
      os << "amp = " << fmt_g17(fc.amp) << "\n";
      break;
    case ForceConfig::Type::Vortex:
      os << "amp = " << fmt_g17(fc.amp) << "\n";
      break;
    case ForceConfig::Type::Uniform:
      os << "ax = " << fmt_g17(fc.ax) << "\n";
      os << "ay = " << fmt_g17(fc.ay) << "\n";
      break;
  }
  if (fc.type != ForceConfig::Type::None && fc.type != ForceConfig::Type::Sum) {
    os << "profile = " << profile_name(fc.profile.kind) << "\n";
    if (fc.profile.kind == TimeProfile::Kind::Sin ||
        fc.profile.kind == TimeProfile::Kind::ExpDecay) {
      os << "omega = " << fmt_g17(fc.profile.omega) << "\n";
    }
    if (fc.profile.kind == TimeProfile::Kind::TPow) {
      os << "beta = " << fmt_g17(fc.profile.beta) << "\n";
    }
  }
}

}  // namespace

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream os;
  os << "[run]\n";
  os << "n = " << cfg.n << "\n";
  os << "k = " << cfg.k << "\n";
  os << "nu = " << fmt_g17(cfg.nu) << "\n";
  os << "nu0 = " << fmt_g17(cfg.nu0) << "\n";
  os << "p = " << fmt_g17(cfg.p) << "\n";
  os << "q = " << fmt_g17(cfg.q) << "\n";
  os << "T = " << fmt_g17(cfg.T) << "\n";
  os << "dt = " << fmt_g17(cfg.dt) << "\n";
  os << "seed = " << cfg.seed << "\n";
  os << "\n";
  serialize_force_section(os, cfg.force, "force");
  for (size_t i = 0; i < cfg.force.children.size(); ++i) {
    os << "\n";
    serialize_force_section(os, cfg.force.children[i], "force." + std::to_string(i + 1));
  }
  os << "\n[initial]\n";
  switch (cfg.initial.type) {
    case InitConfig::Type::Zero:
      os << "type = zero\n";
      break;
    case InitConfig::Type::Coeffs: {
      os << "type = coeffs\n";
      os << "coeffs =";
      for (double c : cfg.initial.coeffs) os << " " << fmt_g17(c);
      os << "\n";
      break;
    }
    case InitConfig::Type::ModeInit:
      os << "type = mode\n";
      os << "index = " << cfg.initial.index << "\n";
      os << "amp = " << fmt_g17(cfg.initial.amp) << "\n";
      break;
    case InitConfig::Type::Random:
      os << "type = random\n";
      os << "amp = " << fmt_g17(cfg.initial.amp) << "\n";
      break;
  }
  os << "\n[output]\n";
  os << "dir = " << cfg.out_dir << "\n";
  os << "prefix = " << cfg.prefix << "\n";
  return os.str();
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

// ---------------------------------------------------------------------------
// Force / initial-data builders

namespace {

// smooth no-slip vortex: curl of (x(1-x)y(1-y))^2, scaled to O(1) magnitude
VelocityField vortex_field(const Grid& g, double amp) {
  VelocityField f(g);
  const int n = g.n;
  const double h = g.h;
  const double norm = 64.0 * amp;
  auto bx = [](double x) { return x * (1.0 - x); };
  for (int i = 1; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double x = i * h, y = (j + 0.5) * h;
      f.u_at(i, j) = norm * bx(x) * bx(x) * 2.0 * bx(y) * (1.0 - 2.0 * y);
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 1; j < n; ++j) {
      const double x = (i + 0.5) * h, y = j * h;
      f.v_at(i, j) = -norm * 2.0 * bx(x) * (1.0 - 2.0 * x) * bx(y) * bx(y);
    }
  }
  return f;
}

VelocityField uniform_field(const Grid& g, double ax, double ay) {
  VelocityField f(g);
  for (double& x : f.u) x = ax;
  for (double& x : f.v) x = ay;
  return f;
}

}  // namespace

ForceSpec build_force(const ForceConfig& fc, const StokesEigenbasis* B) {
  const TimeProfile prof = fc.profile;
  switch (fc.type) {
    case ForceConfig::Type::None:
      return ForceSpec::zero();
    case ForceConfig::Type::Point: {
      const double ax = fc.ax, ay = fc.ay;
      return ForceSpec::point({fc.x0, fc.y0}, [ax, ay, prof](double t) {
        const double r = prof.eval(t);
        return std::array<double, 2>{ax * r, ay * r};
      });
    }
    case ForceConfig::Type::Mode: {
      if (B == nullptr) throw ConfigError("mode-type force needs a computed basis");
      if (fc.index < 0 || fc.index >= B->k) {
        throw ConfigError("mode-type force index " + std::to_string(fc.index) +
                          " outside basis of size " + std::to_string(B->k));
      }
      const VelocityField mode = B->modes[fc.index];
      const double amp = fc.amp;
      return ForceSpec::regular([mode, amp, prof](const Grid& g, double t) {
        if (g.n != mode.n) throw DimensionError("mode force evaluated on a foreign grid");
        return scale(amp * prof.eval(t), mode);
      });
    }
    case ForceConfig::Type::Vortex: {
      const double amp = fc.amp;
      return ForceSpec::regular([amp, prof](const Grid& g, double t) {
        return vortex_field(g, amp * prof.eval(t));
      });
    }
    case ForceConfig::Type::Uniform: {
      const double ax = fc.ax, ay = fc.ay;
      return ForceSpec::regular([ax, ay, prof](const Grid& g, double t) {
        const double r = prof.eval(t);
        return uniform_field(g, ax * r, ay * r);
      });
    }
    case ForceConfig::Type::Sum: {
      std::vector<ForceSpec> terms;
      terms.reserve(fc.children.size());
      for (const auto& c : fc.children) terms.push_back(build_force(c, B));
      return ForceSpec::sum(std::move(terms));
    }
  }
  return ForceSpec::zero();
}

std::vector<double> build_initial(const InitConfig& ic, const StokesEigenbasis& B,
                                  std::uint64_t seed) {
  std::vector<double> c(B.k, 0.0);
  switch (ic.type) {
    case InitConfig::Type::Zero:
      break;
    case InitConfig::Type::Coeffs: {
      if (static_cast<int>(ic.coeffs.size()) > B.k) {
        throw ConfigError("initial coeffs list longer than basis size k=" +
                          std::to_string(B.k));
      }
      std::copy(ic.coeffs.begin(), ic.coeffs.end(), c.begin());
      break;
    }
    case InitConfig::Type::ModeInit: {
      if (ic.index < 0 || ic.index >= B.k) {
        throw ConfigError("initial mode index outside basis");
      }
      c[ic.index] = ic.amp;
      break;
    }
    case InitConfig::Type::Random: {
      Rng rng(seed ^ 0x1817ULL);
      for (int j = 0; j < B.k; ++j) {
        c[j] = ic.amp * rng.gaussian() * std::pow(B.lambdas[j], -1.0);
      }
      break;
    }
  }
  return c;
}

GalerkinConfig galerkin_config(const RunConfig& cfg) {
  GalerkinConfig g;
  g.nu = cfg.nu;
  g.nu0 = cfg.nu0;
  g.dt = cfg.dt;
  g.T = cfg.T;
  return g;
}

// ---------------------------------------------------------------------------
// Output helpers

std::string fmt_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_series_csv(const std::string& path, const Trajectory& traj,
                      const EnergyResidual* res) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw FormatError("cannot open '" + path + "' for writing");
  os << "time,l2,h1,l4,energy_residual\n";
  for (int m = 0; m <= traj.steps(); ++m) {
    const double r = (res != nullptr && m >= 1) ? res->series[m - 1] : 0.0;
    os << fmt_g17(traj.times[m]) << "," << fmt_g17(traj.monitors[m].l2) << ","
       << fmt_g17(traj.monitors[m].h1) << "," << fmt_g17(traj.monitors[m].l4) << ","
       << fmt_g17(r) << "\n";
  }
}

void write_coeff_dump(const std::string& path, const Trajectory& traj) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot open '" + path + "' for writing");
  const char magic[4] = {'S', 'T', 'K', 'C'};
  os.write(magic, 4);
  const std::uint32_t ver = 1;
  const std::uint32_t k = traj.coeffs.empty() ? 0 : static_cast<std::uint32_t>(traj.coeffs[0].size());
  const std::uint32_t count = static_cast<std::uint32_t>(traj.times.size());
  os.write(reinterpret_cast<const char*>(&ver), 4);
  os.write(reinterpret_cast<const char*>(&k), 4);
  os.write(reinterpret_cast<const char*>(&count), 4);
  os.write(reinterpret_cast<const char*>(traj.times.data()),
           static_cast<std::streamsize>(sizeof(double) * traj.times.size()));
  for (const auto& row : traj.coeffs) {
    os.write(reinterpret_cast<const char*>(row.data()),
             static_cast<std::streamsize>(sizeof(double) * row.size()));
  }
  if (!os) throw FormatError("write failure on '" + path + "'");
}

}  // namespace ns2d
