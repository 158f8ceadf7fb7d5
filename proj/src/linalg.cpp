#include "qtraj/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace qtraj {

Tolerances& tol() {
  static Tolerances t;
  return t;
}

double trace_norm(const CMatrix& m) {
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues().sum();
}

double op_norm(const CMatrix& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues()(0);
}

CMatrix psd_sqrt(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitize(m));
  RVector ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev.minCoeff() < -tol().psd * scale)
    throw NotPSD("psd_sqrt: smallest eigenvalue " + std::to_string(ev.minCoeff()) +
                 " below -tol.psd");
  RVector root = ev.cwiseMax(0.0).cwiseSqrt();
  return hermitize(es.eigenvectors() * root.asDiagonal() *
                   es.eigenvectors().adjoint());
}

DensityMatrix::DensityMatrix(CMatrix m) : mat_(std::move(m)) {
  if (mat_.rows() != mat_.cols() || mat_.rows() < 1)
    throw DimensionMismatch("DensityMatrix: matrix must be square, d >= 1");
  if ((mat_ - mat_.adjoint()).cwiseAbs().maxCoeff() > tol().herm)
    throw Error("DensityMatrix: not Hermitian within tolerance");
  if (std::abs(mat_.trace() - Complex(1.0, 0.0)) > tol().trace)
    throw Error("DensityMatrix: trace differs from 1 beyond tolerance");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitize(mat_),
                                            Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -tol().psd)
    throw NotPSD("DensityMatrix: negative eigenvalue beyond tolerance");
}

DensityMatrix DensityMatrix::maximally_mixed(int d) {
  return DensityMatrix(CMatrix::Identity(d, d) / static_cast<double>(d),
                       Trusted{});
}

DensityMatrix DensityMatrix::pure(const CVector& x) {
  CVector v = x / x.norm();
  return DensityMatrix(v * v.adjoint(), Trusted{});
}

DensityMatrix DensityMatrix::diagonal(const RVector& p) {
  if (p.minCoeff() < 0.0 || std::abs(p.sum() - 1.0) > tol().trace)
    throw Error("DensityMatrix::diagonal: entries must be a probability vector");
  CMatrix m = CMatrix::Zero(p.size(), p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) m(i, i) = p(i);
  return DensityMatrix(std::move(m), Trusted{});
}

DensityMatrix DensityMatrix::from_unnormalized(const CMatrix& raw) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitize(raw));
  RVector ev = es.eigenvalues().cwiseMax(0.0);
  const double tr = ev.sum();
  if (!(tr > 0.0))
    throw Error("DensityMatrix::from_unnormalized: nonpositive trace");
  ev /= tr;
  CMatrix m = hermitize(es.eigenvectors() * ev.asDiagonal() *
                        es.eigenvectors().adjoint());
  return DensityMatrix(std::move(m), Trusted{});
}

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.dim() != sigma.dim())
    throw DimensionMismatch("fidelity: dimension mismatch");
  CMatrix sr = psd_sqrt(rho.mat());
  CMatrix inner = hermitize(sr * sigma.mat() * sr);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(inner, Eigen::EigenvaluesOnly);
  double s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return std::clamp(s * s, 0.0, 1.0);
}

}  // namespace qtraj
