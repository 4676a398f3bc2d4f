#include "ns2d/inequalities.hpp"

#include <cmath>

#include "ns2d/errors.hpp"
#include "ns2d/rng.hpp"

namespace ns2d {

std::vector<double> sample_span_coeffs(const StokesEigenbasis& B, Rng& rng, double s) {
  std::vector<double> c(B.k);
  for (int j = 0; j < B.k; ++j) {
    c[j] = rng.gaussian() * std::pow(B.lambdas[j], -s);
  }
  return c;
}

namespace {

constexpr double kDecays[3] = {0.5, 1.0, 1.5};

double coeff_l2(const std::vector<double>& c) {
  double s = 0.0;
  for (double x : c) s += x * x;
  return std::sqrt(s);
}

double coeff_h1(const StokesEigenbasis& B, const std::vector<double>& c) {
  double s = 0.0;
  for (int j = 0; j < B.k; ++j) s += (B.lambdas[j] / B.nu) * c[j] * c[j];
  return std::sqrt(s);
}

}  // namespace

RatioReport gagliardo_check(const Grid& g, const StokesEigenbasis& B, double r,
                            int samples, std::uint64_t seed, double scale) {
  if (!(r >= 2.0)) throw ConfigError("gagliardo_check requires r >= 2");
  if (samples < 100) throw ConfigError("gagliardo_check needs at least 100 samples");
  Rng rng(seed ^ 0x6a611aULL);
  RatioReport rep;
  rep.samples = samples;
  for (int i = 0; i < samples; ++i) {
    std::vector<double> c = sample_span_coeffs(B, rng, kDecays[i % 3]);
    for (double& x : c) x *= scale;
    VelocityField y = reconstruct(B, c);
    const double l2 = norm_Lr(g, y, 2.0);
    if (l2 == 0.0) continue;  // degenerate sample
    const double lr = norm_Lr(g, y, r);
    const double h1 = norm_H1(g, y);
    const double ratio = lr / (std::pow(l2, 2.0 / r) * std::pow(h1, (r - 2.0) / r));
    if (ratio > rep.max_ratio) {
      rep.max_ratio = ratio;
      rep.argmax = i;
    }
  }
  return rep;
}

SkewReport skew_check(const TrilinearTensor& T3, const StokesEigenbasis& B, int samples,
                      std::uint64_t seed) {
  if (samples < 100) throw ConfigError("skew_check needs at least 100 samples");
  Rng rng(seed ^ 0x5ce3ULL);
  SkewReport rep;
  rep.samples = samples;
  for (int i = 0; i < samples; ++i) {
    std::vector<double> u = sample_span_coeffs(B, rng, kDecays[i % 3]);
    std::vector<double> v = sample_span_coeffs(B, rng, kDecays[(i + 1) % 3]);
    std::vector<double> w = sample_span_coeffs(B, rng, kDecays[(i + 2) % 3]);
    const double nu2 = coeff_l2(u), nv2 = coeff_l2(v), nw2 = coeff_l2(w);
    if (nu2 == 0.0 || nv2 == 0.0 || nw2 == 0.0) continue;
    const double diag = std::abs(T3.form(u, v, v)) / (nu2 * nv2 * nv2);
    rep.max_normalized = std::max(rep.max_normalized, diag);
    const double pol =
        std::abs(T3.form(u, v, w) + T3.form(u, w, v)) / (nu2 * nv2 * nw2);
    rep.max_polarization = std::max(rep.max_polarization, pol);
  }
  return rep;
}

std::vector<EstimateReport> trilinear_bounds_check(const Grid& g, const StokesEigenbasis& B,
                                                   const TrilinearTensor& T3,
                                                   const AdmissibilityParams& params,
                                                   int samples, std::uint64_t seed) {
  if (samples < 100) throw ConfigError("trilinear_bounds_check needs at least 100 samples");
  const double p = params.p;
  const double pc = params.p_conj;
  Rng rng(seed ^ 0x7b17ULL);

  std::vector<EstimateReport> reps(5);
  reps[0].name = "hh_l4";          // H x H through L4 interpolation
  reps[1].name = "hw_l2pc";        // H x W through L^{2p'}
  reps[2].name = "wh_l4";          // W x H through L4
  reps[3].name = "ww_embedding";   // W x W through W^{1,p} in L4
  reps[4].name = "combined";

  // The test function is maximized exactly: sup over psi in span(B) of
  // <B(y1,y2), psi> / |psi|_H1 is the weighted dual norm of the moment
  // vector. Only the field pair is sampled; the first pairs are
  // deterministic single-mode combinations, which carry the extremal ratios,
  // followed by random spectra in rough-to-smooth regimes.
  const int n_structured = std::min(samples / 2, std::min(8, B.k) * std::min(8, B.k));
  std::vector<double> gmom, c1(B.k), c2(B.k);
  for (int i = 0; i < samples; ++i) {
    if (i < n_structured) {
      const int m = std::min(8, B.k);
      std::fill(c1.begin(), c1.end(), 0.0);
      std::fill(c2.begin(), c2.end(), 0.0);
      c1[i / m] = 1.0;
      c2[i % m] = 1.0;
    } else {
      c1 = sample_span_coeffs(B, rng, kDecays[i % 3]);
      c2 = sample_span_coeffs(B, rng, kDecays[(i + 1) % 3]);
    }
    VelocityField y1 = reconstruct(B, c1);
    VelocityField y2 = reconstruct(B, c2);

    T3.contract(c1, c2, gmom);
    double dual_sq = 0.0;
    for (int j = 0; j < B.k; ++j) {
      dual_sq += (B.nu / B.lambdas[j]) * gmom[j] * gmom[j];
    }
    const double num = std::sqrt(dual_sq);
    const double y1_l2 = coeff_l2(c1), y2_l2 = coeff_l2(c2);
    const double y1_h1 = coeff_h1(B, c1), y2_h1 = coeff_h1(B, c2);
    const double y1_w1p = norm_W1p(g, y1, p), y2_w1p = norm_W1p(g, y2, p);
    if (num == 0.0) continue;

    const double den[5] = {
        std::sqrt(y1_l2 * y1_h1) * std::sqrt(y2_l2 * y2_h1),
        std::pow(y1_l2, 1.0 / pc) * std::pow(y1_h1, 1.0 / p) * y2_w1p,
        y1_w1p * std::sqrt(y2_l2 * y2_h1),
        y1_w1p * y2_w1p,
        (y1_l2 + y1_h1 + y1_w1p) * (y2_l2 + y2_h1 + y2_w1p),
    };
    for (int e = 0; e < 5; ++e) {
      if (den[e] <= 0.0) continue;
      const double ratio = num / den[e];
      if (ratio > reps[e].max_ratio) {
        reps[e].max_ratio = ratio;
        reps[e].argmax = i;
      }
    }
  }
  return reps;
}

}  // namespace ns2d
