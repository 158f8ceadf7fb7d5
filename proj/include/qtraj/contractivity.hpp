#pragma once

#include <optional>
#include <vector>

#include "qtraj/instrument.hpp"

namespace qtraj {

// Evidence that a (possibly iterated) word map is close to rank one as a
// linear map, i.e. of the form rho -> Z tr(X rho).
struct ContCertificate {
  std::vector<int> word;   // word at the best length reached
  int power = 1;           // number of repetitions of `word` (1 for searches)
  double defect = 1.0;     // sigma_2 / sigma_1 of the representation
  double top_singular = 0.0;  // s_1 of the spectrally normalized rep
  CMatrix z_est;  // PSD, unit trace norm
  CMatrix x_est;  // PSD, unit trace norm
  std::vector<std::pair<int, double>> defect_trace;  // (length, defect)
};

// sigma_2 / sigma_1 of the representation; 0 iff the map is exactly rank
// one. Throws ZeroMap on a vanishing map.
double rank_one_defect(const SuperOpMatrix& rep);
double rank_one_defect(const OutcomeMap& map);

// Powers of a certified-primitive word map, tracked until the defect of
// T^n / ||T^n|| drops below tol_cont. nullopt when primitivity is not
// certified or the defect target is not reached by n_max.
std::optional<ContCertificate> certify_primitive_word(
    const Instrument& instr, const std::vector<int>& word, int n_max = 500,
    double tol_cont = -1.0 /* default: tol().cont */);

// Trajectory-sampled words from rho_probe plus a short beam search; returns
// the best certificate found if its defect reaches `tol`, else nullopt.
std::optional<ContCertificate> search_contractive_sequence(
    const Instrument& instr, const DensityMatrix& rho_probe, int max_len,
    double tol_defect, std::uint64_t seed, int beam_width = 8,
    int beam_depth = 12);

struct DarkSubspaceCandidate {
  int subspace_dim = 0;
  CMatrix frame;  // d x k orthonormal columns spanning the subspace
};

struct NdReport {
  int subspaces_sampled = 0;
  long words_tested = 0;
  // Subspaces for which no word violated the isometry equality: evidence
  // against (ND). Empty report = no falsification found.
  std::vector<DarkSubspaceCandidate> dark_candidates;
};

// Randomized falsifier for the non-darkness condition of a perfect
// unraveling {V_j}. Can refute (ND) evidence, never proves it.
NdReport nd_falsifier(const std::vector<CMatrix>& perfect_ops, int n_subspaces,
                      int max_word_len, std::uint64_t seed);

}  // namespace qtraj
