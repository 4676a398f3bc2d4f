#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <string>

#include "ns2d/config.hpp"
#include "ns2d/errors.hpp"
#include "support.hpp"

using namespace ns2d;

namespace {

const std::string kSample = R"(# sample run
[run]
n = 16
k = 6
nu = 0.05
nu0 = 1
p = 1.5
q = 7
T = 0.5
dt = 0.002
seed = 42

[force]
type = sum

[force.1]
type = point
x0 = 0.4
y0 = 0.55
ax = 1.0
ay = -0.5
profile = tpow
beta = 0.125

[force.2]
type = vortex
amp = 0.3
profile = sin
omega = 2.0

[initial]
type = coeffs
coeffs = 0.1 0 -0.05

[output]
dir = results
prefix = demo
)";

}  // namespace

TEST_CASE("config round trip is the identity") {
  RunConfig a = parse_config(kSample);
  const std::string s1 = serialize_config(a);
  RunConfig b = parse_config(s1);
  const std::string s2 = serialize_config(b);
  CHECK(s1 == s2);
  CHECK(a.n == b.n);
  CHECK(a.k == b.k);
  CHECK(a.dt == b.dt);
  CHECK(a.seed == b.seed);
  CHECK(a.force.children.size() == b.force.children.size());
  CHECK(a.initial.coeffs == b.initial.coeffs);
  CHECK(a.out_dir == b.out_dir);
}

TEST_CASE("parser names offending keys and sections") {
  SUBCASE("unknown key in [run]") {
    try {
      parse_config("[run]\nwhatever = 3\n");
      CHECK(false);
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("whatever") != std::string::npos);
    }
  }
  SUBCASE("unknown section") {
    try {
      parse_config("[extra]\nx = 1\n");
      CHECK(false);
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("extra") != std::string::npos);
    }
  }
  SUBCASE("bad number") {
    CHECK_THROWS_AS(parse_config("[run]\nnu = banana\n"), ConfigError);
  }
  SUBCASE("missing sum children") {
    CHECK_THROWS_AS(parse_config("[force]\ntype = sum\n"), ConfigError);
  }
  SUBCASE("orphan child section") {
    CHECK_THROWS_AS(parse_config("[force]\ntype = vortex\n\n[force.1]\ntype = point\n"),
                    ConfigError);
  }
}

TEST_CASE("rough forces require admissible (p, q) at parse time") {
  std::string bad = kSample;
  const auto pos = bad.find("q = 7");
  bad.replace(pos, 5, "q = 5");  // violates q > 2p/(p-1) = 6 at p = 1.5
  CHECK_THROWS_AS(parse_config(bad), ConfigError);

  // without a point force the same (p, q) passes
  std::string smooth = bad;
  const auto fpos = smooth.find("type = sum");
  smooth.replace(fpos, 10, "type = none");
  smooth.erase(smooth.find("[force.1]"), smooth.find("[initial]") - smooth.find("[force.1]"));
  CHECK_NOTHROW(parse_config(smooth));
}

TEST_CASE("force builders honor profiles and presets") {
  const StokesEigenbasis& B = ns2d_test::basis(16, 0.05, 6);
  RunConfig rc = parse_config(kSample);
  ForceSpec F = build_force(rc.force, &B);
  CHECK(F.has_point());
  // the tpow amplitude is singular at t = 0 but finite at t > 0
  std::vector<double> m = force_moments(F, B, 0.25);
  for (double x : m) CHECK(std::isfinite(x));

  SUBCASE("mode force needs a basis") {
    ForceConfig fc;
    fc.type = ForceConfig::Type::Mode;
    fc.index = 2;
    CHECK_THROWS_AS(build_force(fc, nullptr), ConfigError);
    ForceSpec fm = build_force(fc, &B);
    std::vector<double> mm = force_moments(fm, B, 0.0);
    CHECK(std::abs(mm[2] - 1.0) <= 1e-10);
  }

  SUBCASE("mode index out of range") {
    ForceConfig fc;
    fc.type = ForceConfig::Type::Mode;
    fc.index = 99;
    CHECK_THROWS_AS(build_force(fc, &B), ConfigError);
  }
}

TEST_CASE("initial data builders") {
  const StokesEigenbasis& B = ns2d_test::basis(16, 0.05, 6);

  InitConfig zero;
  CHECK(build_initial(zero, B, 1) == std::vector<double>(6, 0.0));

  InitConfig coeffs;
  coeffs.type = InitConfig::Type::Coeffs;
  coeffs.coeffs = {0.1, 0.2};
  std::vector<double> c = build_initial(coeffs, B, 1);
  CHECK(c[0] == 0.1);
  CHECK(c[1] == 0.2);
  CHECK(c[5] == 0.0);

  coeffs.coeffs.assign(7, 1.0);  // longer than k
  CHECK_THROWS_AS(build_initial(coeffs, B, 1), ConfigError);

  InitConfig rnd;
  rnd.type = InitConfig::Type::Random;
  rnd.amp = 0.5;
  std::vector<double> r1 = build_initial(rnd, B, 9);
  std::vector<double> r2 = build_initial(rnd, B, 9);
  CHECK(r1 == r2);  // seeded
  CHECK(r1 != build_initial(rnd, B, 10));
}
