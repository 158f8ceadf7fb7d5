#include "qtraj/ergodic.hpp"

#include <algorithm>
#include <cmath>

#include "qtraj/rng.hpp"
#include "qtraj/trajectory.hpp"
#include "qtraj/transport.hpp"

namespace qtraj {

void EmpiricalMeasure::validate() const {
  double total = 0.0;
  for (const auto& [state, w] : atoms) {
    if (w < 0.0) throw Error("EmpiricalMeasure: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw Error("EmpiricalMeasure: weights sum to " + std::to_string(total));
}

CMatrix EmpiricalMeasure::mean() const {
  if (atoms.empty()) throw Error("EmpiricalMeasure: empty");
  CMatrix acc = CMatrix::Zero(atoms.front().first.dim(), atoms.front().first.dim());
  for (const auto& [state, w] : atoms) acc += w * state.mat();
  return acc;
}

EmpiricalMeasure EmpiricalMeasure::coalesced(double eps) const {
  EmpiricalMeasure out;
  for (const auto& [state, w] : atoms) {
    bool merged = false;
    for (auto& [existing, ew] : out.atoms) {
      if ((existing.mat() - state.mat()).cwiseAbs().maxCoeff() <= eps) {
        ew += w;
        merged = true;
        break;
      }
    }
    if (!merged) out.atoms.emplace_back(state, w);
  }
  return out;
}

EmpiricalMeasure sample_invariant(const Instrument& instr,
                                  const DensityMatrix& rho0, int burn_in,
                                  int n_samples, int thinning,
                                  std::uint64_t seed) {
  if (n_samples < 1 || thinning < 1 || burn_in < 0)
    throw Error("sample_invariant: bad parameters");
  Rng rng(seed);
  DensityMatrix rho = rho0;
  for (int k = 0; k < burn_in; ++k) rho = step(instr, rho, rng).second;

  EmpiricalMeasure mu;
  const double w = 1.0 / n_samples;
  for (int s = 0; s < n_samples; ++s) {
    for (int t = 0; t < thinning; ++t) rho = step(instr, rho, rng).second;
    mu.atoms.emplace_back(rho, w);
  }
  return mu;
}

EmpiricalMeasure kernel_push(const Instrument& instr,
                             const EmpiricalMeasure& mu,
                             double prune_threshold) {
  EmpiricalMeasure out;
  for (const auto& [state, w] : mu.atoms) {
    for (int i = 0; i < instr.size(); ++i) {
      CMatrix post = instr.outcome(i).apply(state.mat());
      double p = post.trace().real();
      if (p <= 0.0) continue;
      double weight = w * p;
      if (weight < prune_threshold) continue;
      out.atoms.emplace_back(DensityMatrix::from_unnormalized(post), weight);
    }
  }
  double total = 0.0;
  for (const auto& [state, weight] : out.atoms) total += weight;
  if (!(total > 0.0)) throw Error("kernel_push: all mass pruned");
  for (auto& [state, weight] : out.atoms) weight /= total;
  return out;
}

EmpiricalMeasure cesaro_push(const Instrument& instr,
                             const EmpiricalMeasure& mu, int ell, int n,
                             double prune_threshold, std::size_t atom_cap) {
  if (ell < 1 || n < 0) throw Error("cesaro_push: need ell >= 1, n >= 0");
  // Coalescing is quadratic in the atom count; worth it only while the
  // support is small.
  auto advance = [&](EmpiricalMeasure& m) {
    m = kernel_push(instr, m, prune_threshold);
    if (m.atoms.size() <= 4096) m = m.coalesced();
    if (m.atoms.size() > atom_cap)
      throw AtomBudgetExceeded("cesaro_push: atom budget exceeded");
  };
  EmpiricalMeasure current = mu;
  for (long k = 0; k < static_cast<long>(ell) * n; ++k) advance(current);
  EmpiricalMeasure out;
  for (int r = 0; r < ell; ++r) {
    for (const auto& [state, w] : current.atoms)
      out.atoms.emplace_back(state, w / ell);
    if (r + 1 < ell) advance(current);
  }
  if (out.atoms.size() > atom_cap)
    throw AtomBudgetExceeded("cesaro_push: atom budget exceeded");
  return out;
}

double wasserstein1(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                    std::size_t lp_cap) {
  EmpiricalMeasure a = mu.coalesced();
  EmpiricalMeasure b = nu.coalesced();
  if (a.atoms.size() > lp_cap || b.atoms.size() > lp_cap)
    throw TooManyAtoms("wasserstein1: atom count exceeds LP cap");
  const int n = static_cast<int>(a.atoms.size());
  const int m = static_cast<int>(b.atoms.size());
  RMatrix cost(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      cost(i, j) = trace_norm(a.atoms[i].first.mat() - b.atoms[j].first.mat());
  std::vector<double> supply(n), demand(m);
  for (int i = 0; i < n; ++i) supply[i] = a.atoms[i].second;
  for (int j = 0; j < m; ++j) demand[j] = b.atoms[j].second;
  return min_cost_transport(cost, std::move(supply), std::move(demand));
}

namespace {

EmpiricalMeasure subsample(const EmpiricalMeasure& mu, std::size_t cap,
                           Rng& rng) {
  if (mu.atoms.size() <= cap) return mu;
  EmpiricalMeasure out;
  const double w = 1.0 / static_cast<double>(cap);
  // Weighted resampling with replacement.
  std::vector<double> weights;
  weights.reserve(mu.atoms.size());
  for (const auto& [state, weight] : mu.atoms) weights.push_back(weight);
  for (std::size_t k = 0; k < cap; ++k)
    out.atoms.emplace_back(mu.atoms[rng.categorical(weights)].first, w);
  return out;
}

}  // namespace

SubsampledW1 wasserstein1_subsampled(const EmpiricalMeasure& mu,
                                     const EmpiricalMeasure& nu,
                                     std::size_t lp_cap, int reps,
                                     std::uint64_t seed) {
  Rng rng(seed);
  double lo = 0.0, hi = 0.0, sum = 0.0;
  for (int r = 0; r < reps; ++r) {
    double w = wasserstein1(subsample(mu, lp_cap, rng),
                            subsample(nu, lp_cap, rng), lp_cap);
    if (r == 0) {
      lo = hi = w;
    } else {
      lo = std::min(lo, w);
      hi = std::max(hi, w);
    }
    sum += w;
  }
  return {sum / reps, hi - lo};
}

StateFunctional linear_functional(const CMatrix& a) {
  if (op_norm(a) > 1.0 + 1e-12)
    throw Error("linear_functional: operator norm must be <= 1 for the "
                "1-Lipschitz normalization");
  CMatrix obs = a;
  return [obs](const DensityMatrix& rho) {
    return (obs * rho.mat()).trace().real();
  };
}

StateFunctional purity_functional() {
  return [](const DensityMatrix& rho) {
    return (rho.mat() * rho.mat()).trace().real();
  };
}

StateFunctional entropy_functional() {
  return [](const DensityMatrix& rho) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitize(rho.mat()),
                                              Eigen::EigenvaluesOnly);
    double s = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      double p = es.eigenvalues()(i);
      if (p > 1e-15) s -= p * std::log(p);
    }
    return s;
  };
}

StateFunctional max_eigenvalue_functional() {
  return [](const DensityMatrix& rho) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitize(rho.mat()),
                                              Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
  };
}

StateFunctional polynomial_functional(std::vector<PolyTerm> terms) {
  return [terms](const DensityMatrix& rho) {
    double acc = 0.0;
    for (const PolyTerm& t : terms) {
      Complex e = rho.mat()(t.i, t.j);
      acc += t.coeff * std::pow(e.real(), t.re_power) *
             std::pow(e.imag(), t.im_power);
    }
    return acc;
  };
}

double ergodic_mean(const Instrument& instr, const DensityMatrix& rho0,
                    const StateFunctional& g, int n, std::uint64_t seed) {
  if (n < 1) throw Error("ergodic_mean: need n >= 1");
  Rng rng(seed);
  DensityMatrix rho = rho0;
  double acc = 0.0;
  for (int k = 0; k < n; ++k) {
    rho = step(instr, rho, rng).second;
    acc += g(rho);
  }
  return acc / n;
}

}  // namespace qtraj
