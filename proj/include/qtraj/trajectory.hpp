#pragma once

#include <utility>
#include <vector>

#include "qtraj/instrument.hpp"
#include "qtraj/rng.hpp"

namespace qtraj {

struct TrajectoryRecord {
  int steps = 0;
  std::vector<int> word;
  std::vector<DensityMatrix> states;      // filled when store_states
  std::vector<DensityMatrix> est_states;  // filled when store_states
  std::vector<double> fidelities;         // F(rho_k, rho_hat_k), k = 0..n
  double log_likelihood = 0.0;            // log P^{rho_0} of the sampled word
  std::uint64_t seed = 0;
};

// One measurement step driven by the true state: samples an outcome from
// {tr Phi_i(rho)} and returns it with the normalized post-state.
std::pair<int, DensityMatrix> step(const Instrument& instr,
                                   const DensityMatrix& rho, Rng& rng);

// Filter update with an externally supplied outcome. Throws FilterCollapse
// when tr Phi_i(rho_hat) <= tol.filter.
DensityMatrix filter_step(const Instrument& instr, const DensityMatrix& rho_hat,
                          int label);

struct KernelCheck {
  bool ok = false;
  // When ok: smallest c with rho0 <= c * rho_hat0 (pseudo-inverse on the
  // range of rho_hat0).
  double witness_c = 0.0;
};

// ker(rho_hat0) subset of ker(rho0), within tol.rank.
KernelCheck kernel_condition(const DensityMatrix& rho0,
                             const DensityMatrix& rho_hat0);

TrajectoryRecord run_pair(const Instrument& instr, const DensityMatrix& rho0,
                          const DensityMatrix& rho_hat0, int n,
                          std::uint64_t seed, bool store_states = false);

// Exact one-step conditional expectation of the fidelity,
// sum_i tr Phi_i(rho) * F(post_i(rho), post_i(rho_hat)).
double conditional_fidelity_expectation(const Instrument& instr,
                                        const DensityMatrix& rho,
                                        const DensityMatrix& rho_hat);

// tr Phi_word(rho); the empty word has probability 1.
double cylinder_probability(const Instrument& instr,
                            const std::vector<int>& word,
                            const DensityMatrix& rho);

// Exact total-variation distance between the outcome-word distributions of
// rho and sigma at horizon n (enumeration over all m^n words).
double tv_distance_horizon(const Instrument& instr, const DensityMatrix& rho,
                           const DensityMatrix& sigma, int n,
                           long enumeration_cap = 1000000);

// M_k = Phi*_{w_1} o ... o Phi*_{w_k}(Id) / P^sigma(w_1..w_k), sigma = Id/d.
std::vector<CMatrix> dual_martingale_series(const Instrument& instr,
                                            const std::vector<int>& word);

}  // namespace qtraj
