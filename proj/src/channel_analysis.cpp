#include "qtraj/channel_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qtraj/rng.hpp"

namespace qtraj {

namespace {

// Numerical kernel dimension of (rep - I), i.e. geometric multiplicity of
// the eigenvalue 1.
int fixed_space_dimension(const CMatrix& rep) {
  CMatrix shifted = rep - CMatrix::Identity(rep.rows(), rep.cols());
  Eigen::JacobiSVD<CMatrix> svd(shifted);
  int dim = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) <= tol().fix) ++dim;
  return dim;
}

// Project Id/d onto the eigenvalue-1 spectral subspace of the
// representation. The projection keeps unit trace and positivity because
// the Cesaro limit of a channel is a conditional expectation.
CMatrix project_mixed_on_fixed_space(const CMatrix& rep, int d) {
  Eigen::ComplexEigenSolver<CMatrix> es(rep);
  CVector sel = CVector::Zero(rep.rows());
  for (Eigen::Index i = 0; i < rep.rows(); ++i)
    if (std::abs(es.eigenvalues()(i) - Complex(1, 0)) <= tol().fix)
      sel(i) = 1.0;
  CVector coeffs = es.eigenvectors().colPivHouseholderQr().solve(
      vec(CMatrix::Identity(d, d) / static_cast<double>(d)));
  return unvec((es.eigenvectors() * sel.asDiagonal() * coeffs).eval(), d);
}

DensityMatrix fixed_point_from_rep(const CMatrix& rep, int d) {
  CMatrix shifted = rep - CMatrix::Identity(rep.rows(), rep.cols());
  Eigen::JacobiSVD<CMatrix> svd(shifted, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  int nullity = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) <= tol().fix) ++nullity;

  CMatrix candidate;
  if (nullity <= 1) {
    // Smallest singular vector; well conditioned even without an exact
    // eigenvalue at 1.
    candidate = unvec(svd.matrixV().col(sv.size() - 1), d);
  } else {
    candidate = project_mixed_on_fixed_space(rep, d);
  }

  CMatrix h = hermitize(candidate);
  if (std::abs(h.trace()) < 1e-12)
    // Null vector came out traceless (sign structure); use the projection
    // of the maximally mixed state instead.
    h = hermitize(project_mixed_on_fixed_space(rep, d));
  if (h.trace().real() < 0.0) h = -h;
  return DensityMatrix::from_unnormalized(h);
}

}  // namespace

DensityMatrix invariant_state(const OutcomeMap& channel) {
  const int d = channel.dim;
  CMatrix rep = channel.rep().m;
  DensityMatrix rho = fixed_point_from_rep(rep, d);
  double residual = trace_norm(channel.apply(rho.mat()) - rho.mat());
  if (residual > 1e-9)
    throw NoFixedPoint("invariant_state: residual " + std::to_string(residual) +
                       "; input may not be trace-preserving");
  return rho;
}

ChannelCertificate certify(const OutcomeMap& channel) {
  const int d = channel.dim;
  CMatrix rep = channel.rep().m;

  ChannelCertificate cert{invariant_state(channel)};
  cert.fixed_space_dim = fixed_space_dimension(rep);

  Eigen::SelfAdjointEigenSolver<CMatrix> inv_es(hermitize(cert.invariant_state.mat()),
                                                Eigen::EigenvaluesOnly);
  cert.min_eig_inv = inv_es.eigenvalues().minCoeff();
  cert.irreducible = cert.fixed_space_dim == 1 && cert.min_eig_inv > tol().rank;

  Eigen::ComplexEigenSolver<CMatrix> es(rep, /*computeEigenvectors=*/false);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (std::abs(es.eigenvalues()(i)) >= 1.0 - tol().peri)
      cert.peripheral_eigenvalues.push_back(es.eigenvalues()(i));

  if (cert.irreducible) {
    const int ell = static_cast<int>(cert.peripheral_eigenvalues.size());
    // For an irreducible channel the peripheral spectrum is exactly the
    // ell-th roots of unity. Verify that structure; on mismatch report an
    // unknown period instead of silently trusting the count.
    bool ok = ell >= 1;
    for (const Complex& z : cert.peripheral_eigenvalues) {
      if (!ok) break;
      double best = 2.0;
      for (int k = 0; k < ell; ++k) {
        Complex root = std::polar(1.0, 2.0 * std::numbers::pi * k / ell);
        best = std::min(best, std::abs(z - root));
      }
      if (best > tol().peri * 10.0) ok = false;
    }
    cert.peripheral_structure_ok = ok;
    if (ok) cert.period = ell;
  }

  cert.primitive = cert.irreducible && cert.period && *cert.period == 1;
  return cert;
}

bool is_primitive_map(const OutcomeMap& map, int n_max, std::uint64_t probe_seed) {
  const int d = map.dim;
  if (n_max <= 0) n_max = 4 * d * d;

  Rng rng(probe_seed);
  std::vector<CMatrix> probes;
  for (int j = 0; j < d; ++j) {
    CMatrix p = CMatrix::Zero(d, d);
    p(j, j) = 1.0;
    probes.push_back(std::move(p));
  }
  const int n_random = d * (d - 1) / 2;
  for (int k = 0; k < n_random; ++k) {
    CVector x = rng.random_unit_vector(d);
    probes.push_back(x * x.adjoint());
  }

  for (int n = 1; n <= n_max; ++n) {
    bool all_positive = true;
    for (CMatrix& p : probes) {
      p = hermitize(map.apply(p));
      double tr = p.trace().real();
      if (!(tr > 0.0)) return false;  // map annihilated a probe
      p /= tr;
      Eigen::SelfAdjointEigenSolver<CMatrix> es(p, Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() <= tol().rank) all_positive = false;
    }
    if (all_positive) return true;
  }
  return false;
}

CMatrix cesaro_iterate(const OutcomeMap& channel, const DensityMatrix& rho,
                       int ell, int n) {
  if (ell < 1 || n < 0)
    throw Error("cesaro_iterate: need ell >= 1, n >= 0");
  const int d = channel.dim;
  CMatrix rep = channel.rep().m;
  CVector state = vec(rho.mat());
  for (long k = 0; k < static_cast<long>(ell) * n; ++k) state = rep * state;
  CVector acc = CVector::Zero(state.size());
  for (int r = 0; r < ell; ++r) {
    acc += state;
    if (r + 1 < ell) state = rep * state;
  }
  return unvec((acc / static_cast<double>(ell)).eval(), d);
}

}  // namespace qtraj
