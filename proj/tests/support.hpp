#pragma once

// Shared fixtures and generators for the test suites.

#include <cmath>
#include <vector>

#include "qtraj/channel_analysis.hpp"
#include "qtraj/instrument.hpp"
#include "qtraj/rng.hpp"

namespace qtest {

using namespace qtraj;

// Two-outcome qubit unraveling rotated out of the diagonal basis, with a
// 90/10 detector bias. Irreducible and primitive; the workhorse fixture.
inline std::vector<CMatrix> rotated_qubit_ops(double theta = 0.7) {
  CMatrix r(2, 2);
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  CMatrix d1 = CMatrix::Zero(2, 2), d2 = CMatrix::Zero(2, 2);
  d1(0, 0) = std::sqrt(0.7);
  d1(1, 1) = std::sqrt(0.3);
  d2(0, 0) = std::sqrt(0.3);
  d2(1, 1) = std::sqrt(0.7);
  return {r * d1, r * d2};
}

inline Instrument rotated_qubit_instrument() {
  RMatrix eta(2, 2);
  eta << 0.9, 0.1, 0.1, 0.9;
  return Instrument::from_bias(rotated_qubit_ops(), BiasMatrix(eta),
                               {"0", "1"});
}

// Identity channel split over m uninformative outcomes: every outcome map
// is rho/m, so trajectories carry no information.
inline Instrument identity_uniform_instrument(int d = 2, int m = 2) {
  RMatrix eta(m, 1);
  for (int i = 0; i < m; ++i) eta(i, 0) = 1.0 / m;
  std::vector<std::string> labels;
  for (int i = 0; i < m; ++i) labels.push_back(std::to_string(i));
  return Instrument::from_bias({CMatrix::Identity(d, d)}, BiasMatrix(eta),
                               labels);
}

inline Instrument projective_qubit_instrument() {
  CMatrix p0 = CMatrix::Zero(2, 2), p1 = CMatrix::Zero(2, 2);
  p0(0, 0) = 1.0;
  p1(1, 1) = 1.0;
  return Instrument(2, {make_map("0", {p0}), make_map("1", {p1})});
}

inline CMatrix cycle_permutation(int d) {
  CMatrix p = CMatrix::Zero(d, d);
  for (int i = 0; i < d; ++i) p((i + 1) % d, i) = 1.0;
  return p;
}

// Single-outcome instrument whose channel is conjugation by the d-cycle.
inline Instrument cycle_instrument(int d) {
  return Instrument(d, {make_map("shift", {cycle_permutation(d)})});
}

// Two-outcome cyclic channel A_k = P D_k with distinct positive diagonals,
// D_1^2 + D_2^2 = Id. The diagonal sector is permuted exactly while
// off-diagonal sectors contract, giving an irreducible channel of period d.
inline Instrument cyclic_irreducible_instrument(int d) {
  CMatrix p = cycle_permutation(d);
  CMatrix d1 = CMatrix::Zero(d, d), d2 = CMatrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    double q = 0.2 + 0.6 * i / std::max(1, d - 1);
    d1(i, i) = std::sqrt(q);
    d2(i, i) = std::sqrt(1.0 - q);
  }
  return Instrument(d, {make_map("a", {p * d1}), make_map("b", {p * d2})});
}

// Random instrument with m outcomes and k Kraus operators each,
// trace-preserving by right-multiplying with S^{-1/2}, S = sum G^dag G.
inline Instrument random_instrument(Rng& rng, int d, int m, int k = 1) {
  std::vector<std::vector<CMatrix>> raw(m);
  CMatrix s = CMatrix::Zero(d, d);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < k; ++j) {
      CMatrix g = rng.complex_gaussian_matrix(d, d);
      raw[i].push_back(g);
      s += g.adjoint() * g;
    }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitize(s));
  CMatrix s_inv_sqrt = es.eigenvectors() *
                       es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                       es.eigenvectors().adjoint();
  std::vector<OutcomeMap> outs;
  for (int i = 0; i < m; ++i) {
    std::vector<CMatrix> kraus;
    for (const CMatrix& g : raw[i]) kraus.push_back(g * s_inv_sqrt);
    outs.push_back(make_map(std::to_string(i), std::move(kraus)));
  }
  return Instrument(d, std::move(outs));
}

inline DensityMatrix random_density(Rng& rng, int d) {
  CMatrix g = rng.complex_gaussian_matrix(d, d);
  return DensityMatrix::from_unnormalized(g * g.adjoint());
}

inline double chi2_stat(const std::vector<long>& observed,
                        const std::vector<double>& expected_probs, long n) {
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    double e = expected_probs[i] * n;
    if (e <= 0.0) continue;
    double diff = observed[i] - e;
    stat += diff * diff / e;
  }
  return stat;
}

// Upper critical values at p = 0.001.
inline double chi2_crit(int dof) {
  switch (dof) {
    case 1: return 10.828;
    case 2: return 13.816;
    case 3: return 16.266;
    case 15: return 37.697;
    default: return 2.0 * dof + 10.0 * std::sqrt(2.0 * dof);
  }
}

}  // namespace qtest
