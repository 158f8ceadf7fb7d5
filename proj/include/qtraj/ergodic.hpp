#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qtraj/instrument.hpp"

namespace qtraj {

// Weighted finite set of states approximating a distribution on the state
// space. Weights sum to 1.
struct EmpiricalMeasure {
  std::vector<std::pair<DensityMatrix, double>> atoms;

  void validate() const;
  CMatrix mean() const;
  // Merge atoms equal within `eps` in max-abs; reduces solver degeneracy
  // for measures concentrated on few states.
  EmpiricalMeasure coalesced(double eps = 1e-12) const;
};

// Empirical invariant-measure sample: one trajectory, burn-in discarded,
// every thinning-th state kept as a unit-weight atom.
EmpiricalMeasure sample_invariant(const Instrument& instr,
                                  const DensityMatrix& rho0, int burn_in,
                                  int n_samples, int thinning,
                                  std::uint64_t seed);

// Exact one-step pushforward under the trajectory kernel: each atom splits
// over the outcomes with the corresponding branch probabilities. Atoms
// below prune_threshold are dropped with proportional renormalization.
EmpiricalMeasure kernel_push(const Instrument& instr,
                             const EmpiricalMeasure& mu,
                             double prune_threshold = 1e-12);

// (1/ell) sum_{r<ell} of the (ell*n + r)-fold pushforward.
EmpiricalMeasure cesaro_push(const Instrument& instr,
                             const EmpiricalMeasure& mu, int ell, int n,
                             double prune_threshold = 1e-12,
                             std::size_t atom_cap = 100000);

// Exact Wasserstein-1 with trace-norm ground cost, via the network-simplex
// transport solver. Throws TooManyAtoms above lp_cap (coalesced counts).
double wasserstein1(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                    std::size_t lp_cap = 2000);

struct SubsampledW1 {
  double mean = 0.0;
  double spread = 0.0;  // max - min over repetitions
};

// Uniform sub-sampling to the LP cap with `reps` repetitions, for measures
// beyond the exact-solve cap.
SubsampledW1 wasserstein1_subsampled(const EmpiricalMeasure& mu,
                                     const EmpiricalMeasure& nu,
                                     std::size_t lp_cap, int reps,
                                     std::uint64_t seed);

using StateFunctional = std::function<double(const DensityMatrix&)>;

// Registered 1-Lipschitz-normalized linear functional tr(A rho); requires
// the operator norm of A to be at most 1.
StateFunctional linear_functional(const CMatrix& a);
StateFunctional purity_functional();
StateFunctional entropy_functional();  // von Neumann, natural log
StateFunctional max_eigenvalue_functional();
// Real polynomial in the matrix entries: sum of terms
// coeff * prod Re(rho_{ij})^p * Im(rho_{ij})^q.
struct PolyTerm {
  double coeff = 0.0;
  int i = 0, j = 0;
  int re_power = 1, im_power = 0;
};
StateFunctional polynomial_functional(std::vector<PolyTerm> terms);

// Time average (g(rho_1) + ... + g(rho_n)) / n along one trajectory.
double ergodic_mean(const Instrument& instr, const DensityMatrix& rho0,
                    const StateFunctional& g, int n, std::uint64_t seed);

}  // namespace qtraj
