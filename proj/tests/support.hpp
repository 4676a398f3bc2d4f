#ifndef NS2D_TESTS_SUPPORT_HPP
#define NS2D_TESTS_SUPPORT_HPP

#include <map>
#include <memory>
#include <tuple>

#include "ns2d/galerkin.hpp"
#include "ns2d/stokes_basis.hpp"

namespace ns2d_test {

/// Basis fixture shared within a test binary (the eigensolve is the slow part).
inline const ns2d::StokesEigenbasis& basis(int n, double nu, int k) {
  static std::map<std::tuple<int, double, int>, std::unique_ptr<ns2d::StokesEigenbasis>> cache;
  const auto key = std::make_tuple(n, nu, k);
  auto it = cache.find(key);
  if (it == cache.end()) {
    auto b = std::make_unique<ns2d::StokesEigenbasis>(
        ns2d::compute_eigenbasis(ns2d::build_grid(n), nu, k));
    it = cache.emplace(key, std::move(b)).first;
  }
  return *it->second;
}

inline const ns2d::TrilinearTensor& tensor(int n, double nu, int k) {
  static std::map<std::tuple<int, double, int>, std::unique_ptr<ns2d::TrilinearTensor>> cache;
  const auto key = std::make_tuple(n, nu, k);
  auto it = cache.find(key);
  if (it == cache.end()) {
    auto t = std::make_unique<ns2d::TrilinearTensor>(ns2d::assemble_trilinear(basis(n, nu, k)));
    it = cache.emplace(key, std::move(t)).first;
  }
  return *it->second;
}

inline double coeff_l2(std::span<const double> c) {
  double s = 0.0;
  for (double x : c) s += x * x;
  return std::sqrt(s);
}

inline double max_coeff_dist(const ns2d::Trajectory& a, const ns2d::Trajectory& b) {
  double worst = 0.0;
  for (int m = 0; m <= a.steps(); ++m) {
    double s = 0.0;
    for (size_t j = 0; j < a.coeffs[m].size(); ++j) {
      const double d = a.coeffs[m][j] - b.coeffs[m][j];
      s += d * d;
    }
    worst = std::max(worst, std::sqrt(s));
  }
  return worst;
}

}  // namespace ns2d_test

#endif
