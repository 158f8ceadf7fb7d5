#pragma once

#include <Eigen/Dense>
#include <complex>

#include "qtraj/errors.hpp"

namespace qtraj {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

// Numerical tolerances used across the library. Mutable as a group so the
// CLI can override individual values; defaults suit dense arithmetic at
// dimensions up to a few dozen.
struct Tolerances {
  double herm = 1e-9;    // Hermiticity residual for states
  double trace = 1e-9;   // unit-trace residual for states
  double psd = 1e-9;     // most-negative eigenvalue allowed before NotPSD
  double sqrt = 1e-8;    // reconstruction residual for psd_sqrt
  double tp = 1e-9;      // trace-preservation residual for instruments
  double fix = 1e-8;     // eigenvalue clustering at 1 (fixed space)
  double peri = 1e-6;    // peripheral spectral shell
  double rank = 1e-8;    // full-rank / positivity threshold
  double cont = 1e-6;    // contractivity certification defect
  double nd = 1e-9;      // non-darkness equality test
  double filter = 1e-12; // FilterCollapse threshold
};

Tolerances& tol();

// Sum of singular values.
double trace_norm(const CMatrix& m);
// Largest singular value.
double op_norm(const CMatrix& m);

inline CMatrix hermitize(const CMatrix& m) { return 0.5 * (m + m.adjoint()); }

// Hermitian PSD square root; eigenvalues in [-tol.psd, 0) are clamped to 0.
// Throws NotPSD below -tol.psd.
CMatrix psd_sqrt(const CMatrix& m);

// Hermitian PSD unit-trace matrix. Construction validates all three
// properties against the global tolerances.
class DensityMatrix {
 public:
  explicit DensityMatrix(CMatrix m);

  static DensityMatrix maximally_mixed(int d);
  static DensityMatrix pure(const CVector& x);
  static DensityMatrix diagonal(const RVector& p);
  // Hermitize, clamp small negative eigenvalues, renormalize to unit trace.
  // Used on every trajectory step to keep Monte Carlo drift in check.
  static DensityMatrix from_unnormalized(const CMatrix& raw);

  const CMatrix& mat() const { return mat_; }
  int dim() const { return static_cast<int>(mat_.rows()); }

 private:
  struct Trusted {};
  DensityMatrix(CMatrix m, Trusted) : mat_(std::move(m)) {}
  CMatrix mat_;
};

// Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2, clamped to [0,1].
double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);

}  // namespace qtraj
