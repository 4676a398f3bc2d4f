#ifndef NS2D_INEQUALITIES_HPP
#define NS2D_INEQUALITIES_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ns2d/forcing.hpp"
#include "ns2d/galerkin.hpp"

namespace ns2d {

/// Seeded ensemble of span coefficient vectors with spectral decay
/// lambda^{-s}, s cycling {0.5, 1.0, 1.5} (rough through smooth regimes).
std::vector<double> sample_span_coeffs(const StokesEigenbasis& B, Rng& rng, double s);

struct RatioReport {
  double max_ratio = 0.0;
  int argmax = -1;
  int samples = 0;
};

/// max |y|_Lr / (|y|_L2^{2/r} |y|_H1^{(r-2)/r}) over sampled no-slip fields;
/// the ratio is scale-invariant. r >= 2 (r = 2 collapses to ratio 1).
RatioReport gagliardo_check(const Grid& g, const StokesEigenbasis& B, double r,
                            int samples, std::uint64_t seed = 1, double scale = 1.0);

struct SkewReport {
  double max_normalized = 0.0;    // |b(u,v,v)| / (|u| |v|^2)
  double max_polarization = 0.0;  // |b(u,v,w) + b(u,w,v)| / (|u| |v| |w|)
  int samples = 0;
};

/// Discrete skew-symmetry over random span pairs/triples.
SkewReport skew_check(const TrilinearTensor& T3, const StokesEigenbasis& B, int samples,
                      std::uint64_t seed = 1);

struct EstimateReport {
  std::string name;
  double max_ratio = 0.0;
  int argmax = -1;
};

/// The four trilinear bounds plus the combined one, probed as ratio
/// boundedness: |b(y1, y2, psi)| over the corresponding norm product with
/// H-class fields measured in L2/H1 and W-class fields in W^{1,p}.
std::vector<EstimateReport> trilinear_bounds_check(const Grid& g, const StokesEigenbasis& B,
                                                   const TrilinearTensor& T3,
                                                   const AdmissibilityParams& params,
                                                   int samples, std::uint64_t seed = 1);

}  // namespace ns2d

#endif
