#include "qtraj/trajectory.hpp"

#include <cmath>

namespace qtraj {

namespace {

std::vector<double> outcome_weights(const Instrument& instr,
                                    const DensityMatrix& rho) {
  std::vector<double> w(instr.size());
  for (int i = 0; i < instr.size(); ++i)
    w[i] = std::max(0.0, instr.outcome(i).apply(rho.mat()).trace().real());
  return w;
}

}  // namespace

std::pair<int, DensityMatrix> step(const Instrument& instr,
                                   const DensityMatrix& rho, Rng& rng) {
  std::vector<double> w = outcome_weights(instr, rho);
  double total = 0.0;
  for (double x : w) total += x;
  if (total < 1e-14)
    throw DegenerateDistribution("step: all outcome probabilities vanish");
  int i = rng.categorical(w);
  return {i, DensityMatrix::from_unnormalized(instr.outcome(i).apply(rho.mat()))};
}

DensityMatrix filter_step(const Instrument& instr, const DensityMatrix& rho_hat,
                          int label) {
  if (label < 0 || label >= instr.size())
    throw UnknownLabel("filter_step: index out of range");
  CMatrix post = instr.outcome(label).apply(rho_hat.mat());
  double tr = post.trace().real();
  if (tr <= tol().filter)
    throw FilterCollapse("filter_step: branch probability " + std::to_string(tr) +
                         " below tol.filter; kernel condition violated or "
                         "numerically degenerate");
  return DensityMatrix::from_unnormalized(post);
}

KernelCheck kernel_condition(const DensityMatrix& rho0,
                             const DensityMatrix& rho_hat0) {
  if (rho0.dim() != rho_hat0.dim())
    throw DimensionMismatch("kernel_condition: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitize(rho_hat0.mat()));

  KernelCheck res;
  res.ok = true;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    if (es.eigenvalues()(k) > tol().rank) continue;
    CVector v = es.eigenvectors().col(k);
    double overlap = (v.adjoint() * rho0.mat() * v)(0, 0).real();
    if (overlap > tol().rank) res.ok = false;
  }
  if (!res.ok) return res;

  // Witness c = lambda_max(S rho0 S) with S the pseudo-inverse square root
  // of rho_hat0 on its range.
  RVector inv_root = RVector::Zero(es.eigenvalues().size());
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
    if (es.eigenvalues()(k) > tol().rank)
      inv_root(k) = 1.0 / std::sqrt(es.eigenvalues()(k));
  CMatrix s = es.eigenvectors() * inv_root.asDiagonal() *
              es.eigenvectors().adjoint();
  Eigen::SelfAdjointEigenSolver<CMatrix> ws(hermitize(s * rho0.mat() * s),
                                            Eigen::EigenvaluesOnly);
  res.witness_c = ws.eigenvalues().maxCoeff();
  return res;
}

TrajectoryRecord run_pair(const Instrument& instr, const DensityMatrix& rho0,
                          const DensityMatrix& rho_hat0, int n,
                          std::uint64_t seed, bool store_states) {
  if (!kernel_condition(rho0, rho_hat0).ok)
    throw KernelConditionViolated("run_pair: ker(rho_hat0) not within ker(rho0)");

  TrajectoryRecord rec;
  rec.steps = n;
  rec.seed = seed;
  Rng rng(seed);

  DensityMatrix rho = rho0;
  DensityMatrix rho_hat = rho_hat0;
  rec.fidelities.push_back(fidelity(rho, rho_hat));
  if (store_states) {
    rec.states.push_back(rho);
    rec.est_states.push_back(rho_hat);
  }

  for (int k = 0; k < n; ++k) {
    std::vector<double> w = outcome_weights(instr, rho);
    double total = 0.0;
    for (double x : w) total += x;
    if (total < 1e-14)
      throw DegenerateDistribution("run_pair: degenerate outcome distribution");
    int i = rng.categorical(w);
    rec.word.push_back(i);
    rec.log_likelihood += std::log(w[i]);
    rho = DensityMatrix::from_unnormalized(instr.outcome(i).apply(rho.mat()));
    rho_hat = filter_step(instr, rho_hat, i);
    rec.fidelities.push_back(fidelity(rho, rho_hat));
    if (store_states) {
      rec.states.push_back(rho);
      rec.est_states.push_back(rho_hat);
    }
  }
  return rec;
}

double conditional_fidelity_expectation(const Instrument& instr,
                                        const DensityMatrix& rho,
                                        const DensityMatrix& rho_hat) {
  double acc = 0.0;
  for (int i = 0; i < instr.size(); ++i) {
    CMatrix post = instr.outcome(i).apply(rho.mat());
    double p = post.trace().real();
    if (p < 1e-14) continue;
    CMatrix post_hat = instr.outcome(i).apply(rho_hat.mat());
    if (post_hat.trace().real() <= tol().filter) continue;  // P-null branch
    acc += p * fidelity(DensityMatrix::from_unnormalized(post),
                        DensityMatrix::from_unnormalized(post_hat));
  }
  return acc;
}

double cylinder_probability(const Instrument& instr,
                            const std::vector<int>& word,
                            const DensityMatrix& rho) {
  CMatrix x = rho.mat();
  for (int i : word) {
    if (i < 0 || i >= instr.size())
      throw UnknownLabel("cylinder_probability: index out of range");
    x = instr.outcome(i).apply(x);
  }
  return std::clamp(x.trace().real(), 0.0, 1.0);
}

namespace {

void tv_recurse(const Instrument& instr, const CMatrix& x, const CMatrix& y,
                int depth, double& acc) {
  if (depth == 0) {
    acc += std::abs(x.trace().real() - y.trace().real());
    return;
  }
  for (int i = 0; i < instr.size(); ++i)
    tv_recurse(instr, instr.outcome(i).apply(x), instr.outcome(i).apply(y),
               depth - 1, acc);
}

}  // namespace

double tv_distance_horizon(const Instrument& instr, const DensityMatrix& rho,
                           const DensityMatrix& sigma, int n,
                           long enumeration_cap) {
  double words = std::pow(static_cast<double>(instr.size()), n);
  if (words > static_cast<double>(enumeration_cap))
    throw HorizonTooLarge("tv_distance_horizon: m^n exceeds enumeration cap");
  double acc = 0.0;
  tv_recurse(instr, rho.mat(), sigma.mat(), n, acc);
  return 0.5 * acc;
}

std::vector<CMatrix> dual_martingale_series(const Instrument& instr,
                                            const std::vector<int>& word) {
  const int d = instr.dim();
  const CMatrix id = CMatrix::Identity(d, d);

  // Running product of adjoint representations, innermost letter last:
  // vec(M_k numerator) = rep(Phi*_{w_1}) ... rep(Phi*_{w_k}) vec(Id).
  CMatrix acc = CMatrix::Identity(d * d, d * d);
  CMatrix forward = id / static_cast<double>(d);  // Phi_{w_k} o ... (Id/d)

  std::vector<CMatrix> series;
  for (int i : word) {
    if (i < 0 || i >= instr.size())
      throw UnknownLabel("dual_martingale_series: index out of range");
    acc = acc * adjoint_rep(instr.outcome(i)).m;
    forward = instr.outcome(i).apply(forward);
    double prefix_prob = forward.trace().real();
    if (prefix_prob <= 0.0)
      throw ZeroPrefixProbability("dual_martingale_series: vanishing prefix "
                                  "probability under the mixed state");
    series.push_back(hermitize(unvec((acc * vec(id)).eval(), d)) / prefix_prob);
  }
  return series;
}

}  // namespace qtraj
