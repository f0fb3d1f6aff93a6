#ifndef BMMIX_TESTS_SYNTHETIC_HPP
#define BMMIX_TESTS_SYNTHETIC_HPP

// Shared synthetic-data builders for the test suites.

#include <cmath>
#include <vector>

#include "bmmix/dataset.hpp"
#include "bmmix/rng.hpp"

namespace synthetic {

using bmmix::AlignedDataset;
using bmmix::Index;
using bmmix::Location;
using bmmix::MatrixXd;
using bmmix::RngStream;
using bmmix::VectorXd;

// Smooth distinct model surfaces over (z, n).
inline double surface(int k, double z, double n) {
  switch (k % 5) {
    case 0:
      return 0.05 * z + 0.02 * n + std::sin(z / 6.0);
    case 1:
      return 0.04 * z + 0.03 * n + std::cos(n / 7.0);
    case 2:
      return 0.06 * z + 0.01 * n + 0.5 * std::sin((z + n) / 9.0);
    case 3:
      return 0.03 * z + 0.04 * n + 0.7 * std::cos(z / 5.0);
    default:
      return 0.07 * z + 0.015 * n + 0.6 * std::sin(n / 8.0);
  }
}

// n_pts locations on a (Z, N) grid with p model surfaces; y is the fixed
// global mixture of the surfaces plus N(0, sigma^2) noise.
inline AlignedDataset global_mixture(Index n_pts, const VectorXd& omega, double sigma,
                                     std::uint64_t seed, bool with_corrections = false) {
  const Index p = omega.size();
  AlignedDataset ds;
  ds.F.resize(n_pts, p);
  ds.y.resize(n_pts);
  if (with_corrections) ds.D = MatrixXd::Zero(n_pts, p);
  RngStream rng(seed, 7);
  Index i = 0;
  for (int z = 10; i < n_pts; z += 2)
    for (int n = 10; n <= 48 && i < n_pts; n += 2, ++i) {
      ds.locations.push_back(Location::zn(z, n));
      double mix = 0.0;
      for (Index k = 0; k < p; ++k) {
        ds.F(i, k) = surface(static_cast<int>(k), z, n);
        if (with_corrections) (*ds.D)(i, k) = 0.01 * std::sin((z + 3.0 * k) / 5.0);
        mix += omega[k] * (ds.F(i, k) + (with_corrections ? (*ds.D)(i, k) : 0.0));
      }
      ds.y[i] = mix + sigma * rng.normal();
    }
  for (Index k = 0; k < p; ++k) ds.model_names.push_back("m" + std::to_string(k));
  return ds;
}

// Two models whose true weights swap across a boundary in N: omega_1 = hi
// for n < boundary and lo above it, transitioning smoothly over `width`.
struct LocalWeightTruth {
  AlignedDataset data;
  MatrixXd omega_true;  // n x 2
};

inline LocalWeightTruth local_boundary(Index n_side_z, Index n_side_n, double boundary,
                                       double width, double hi, double sigma,
                                       std::uint64_t seed) {
  LocalWeightTruth out;
  const Index n_pts = n_side_z * n_side_n;
  out.data.F.resize(n_pts, 2);
  out.data.y.resize(n_pts);
  out.omega_true.resize(n_pts, 2);
  RngStream rng(seed, 11);
  Index i = 0;
  for (Index iz = 0; iz < n_side_z; ++iz)
    for (Index in = 0; in < n_side_n; ++in, ++i) {
      const double z = 10.0 + 2.0 * static_cast<double>(iz);
      const double n = 10.0 + 2.0 * static_cast<double>(in);
      out.data.locations.push_back(Location::zn(z, n));
      const double f1 = surface(0, z, n);
      const double f2 = surface(1, z, n);
      out.data.F(i, 0) = f1;
      out.data.F(i, 1) = f2;
      const double s = 1.0 / (1.0 + std::exp((n - boundary) / width));
      const double w1 = hi * s + (1.0 - hi) * (1.0 - s);
      out.omega_true(i, 0) = w1;
      out.omega_true(i, 1) = 1.0 - w1;
      out.data.y[i] = w1 * f1 + (1.0 - w1) * f2 + sigma * rng.normal();
    }
  out.data.model_names = {"m0", "m1"};
  return out;
}

// Unstructured dataset for gradient checks: random model matrix and
// observations with no recoverable signal.
inline AlignedDataset random_dataset(Index n, Index p, std::uint64_t seed,
                                     bool with_corrections = false) {
  AlignedDataset ds;
  RngStream rng(seed, 3);
  ds.F.resize(n, p);
  ds.y.resize(n);
  if (with_corrections) ds.D = MatrixXd(n, p);
  for (Index i = 0; i < n; ++i) {
    ds.locations.push_back(
        Location::zn(10.0 + 2.0 * static_cast<double>(i % 12), 10.0 + 2.0 * static_cast<double>(i / 12)));
    ds.y[i] = rng.normal(0.0, 2.0);
    for (Index k = 0; k < p; ++k) {
      ds.F(i, k) = rng.normal(0.0, 2.0);
      if (with_corrections) (*ds.D)(i, k) = rng.normal(0.0, 0.2);
    }
  }
  for (Index k = 0; k < p; ++k) ds.model_names.push_back("m" + std::to_string(k));
  return ds;
}

}  // namespace synthetic

#endif  // BMMIX_TESTS_SYNTHETIC_HPP
