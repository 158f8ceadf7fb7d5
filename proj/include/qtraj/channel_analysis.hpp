#pragma once

#include <optional>
#include <vector>

#include "qtraj/instrument.hpp"

namespace qtraj {

// Spectral certificate of a trace-preserving channel. Booleans are
// one-sided numerical findings at the tolerances in effect when certify
// was called.
struct ChannelCertificate {
  DensityMatrix invariant_state;
  int fixed_space_dim = 0;
  double min_eig_inv = 0.0;
  bool irreducible = false;
  // Reported only for irreducible channels; absent also when the
  // peripheral eigenvalues fail the roots-of-unity structure check.
  std::optional<int> period;
  bool peripheral_structure_ok = true;
  std::vector<Complex> peripheral_eigenvalues;
  bool primitive = false;
};

// A fixed point of the channel, Hermitized and renormalized from the
// eigenvalue-1 eigenspace of the representation. Residual is checked to
// 1e-9 in trace norm; failure throws NoFixedPoint.
DensityMatrix invariant_state(const OutcomeMap& channel);

ChannelCertificate certify(const OutcomeMap& channel);

// One-sided primitivity certificate: true iff some power n <= n_max maps
// every basis projector and d(d-1)/2 random rank-one probes to a positive
// definite matrix. n_max <= 0 selects the default 4*d^2.
bool is_primitive_map(const OutcomeMap& map, int n_max = 0,
                      std::uint64_t probe_seed = 12345);

// (1/ell) sum_{r<ell} Phi^{ell*n+r}(rho), via repeated application of the
// representation.
CMatrix cesaro_iterate(const OutcomeMap& channel, const DensityMatrix& rho,
                       int ell, int n);

}  // namespace qtraj
