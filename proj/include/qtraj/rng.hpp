#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "qtraj/linalg.hpp"

namespace qtraj {

// Reproducible random source. The generator is mt19937_64 and all variate
// transformations are implemented here rather than delegated to the
// implementation-defined std distributions, so identical seeds produce
// identical streams on every platform. Output metadata records the
// algorithm as "mt19937_64/canonical53".
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Inverse-CDF draw from an unnormalized nonnegative weight vector.
  int categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
  }

  // Standard normal via Box-Muller (no caching: one fresh pair per call
  // would complicate stream accounting; the second variate is discarded).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  Complex complex_gaussian() { return Complex(normal(), normal()); }

  CVector complex_gaussian_vector(int d) {
    CVector v(d);
    for (int i = 0; i < d; ++i) v(i) = complex_gaussian();
    return v;
  }

  CMatrix complex_gaussian_matrix(int rows, int cols) {
    CMatrix m(rows, cols);
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) m(i, j) = complex_gaussian();
    return m;
  }

  CVector random_unit_vector(int d) {
    CVector v = complex_gaussian_vector(d);
    return v / v.norm();
  }

  // d x k matrix with orthonormal columns, Haar-distributed subspace frame.
  CMatrix haar_frame(int d, int k) {
    CMatrix g = complex_gaussian_matrix(d, k);
    Eigen::HouseholderQR<CMatrix> qr(g);
    CMatrix q = qr.householderQ() * CMatrix::Identity(d, k);
    return q;
  }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace qtraj
