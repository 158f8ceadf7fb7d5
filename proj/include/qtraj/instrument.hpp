#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "qtraj/linalg.hpp"

namespace qtraj {

// Column-stacking vectorization. All superoperator representations in the
// library follow this convention: for a CP map with Kraus list {A_k}, the
// representation is sum_k conj(A_k) (x) A_k, so that
// unvec(rep * vec(rho)) = sum_k A_k rho A_k^dag.
CVector vec(const CMatrix& m);
CMatrix unvec(const CVector& v, int d);

// d^2 x d^2 linear representation of a map on vectorized matrices.
struct SuperOpMatrix {
  int dim = 0;
  CMatrix m;

  CMatrix apply(const CMatrix& rho) const;
  CMatrix apply_adjoint(const CMatrix& b) const;
};

// One completely positive map, given by Kraus operators or (after word
// composition overflows the Kraus cap) by its representation alone.
struct OutcomeMap {
  std::string label;
  int dim = 0;
  std::vector<CMatrix> kraus;
  std::optional<SuperOpMatrix> rep_fallback;

  bool kraus_form() const { return !kraus.empty(); }

  // sum_k A_k rho A_k^dag
  CMatrix apply(const CMatrix& rho) const;
  // trace dual: sum_k A_k^dag B A_k
  CMatrix apply_adjoint(const CMatrix& b) const;
  SuperOpMatrix rep() const;
};

OutcomeMap make_map(std::string label, std::vector<CMatrix> kraus);

// Representation of the trace dual; equals rep().m.adjoint() in the
// column-stacking convention.
SuperOpMatrix adjoint_rep(const OutcomeMap& map);

// sup over states of the trace norm of the image = lambda_max(Psi*(Id)).
double map_norm(const OutcomeMap& map);
double map_norm(const SuperOpMatrix& rep);

// Column-stochastic detector bias matrix, eta(i,j) = P(report i | ideal j).
struct BiasMatrix {
  RMatrix eta;

  explicit BiasMatrix(RMatrix e);
  int reported_outcomes() const { return static_cast<int>(eta.rows()); }
  int ideal_outcomes() const { return static_cast<int>(eta.cols()); }
};

// A labeled family {Phi_i} of CP maps whose sum is trace-preserving.
// Immutable after validation.
class Instrument {
 public:
  Instrument(int dim, std::vector<OutcomeMap> outcomes);

  // Imperfect instrument from a perfect unraveling {V_j} and bias eta:
  // outcome i gets Kraus operators { sqrt(eta(i,j)) V_j : eta(i,j) > 0 }.
  static Instrument from_bias(const std::vector<CMatrix>& perfect_ops,
                              const BiasMatrix& eta,
                              std::vector<std::string> labels = {});

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(outcomes_.size()); }
  const OutcomeMap& outcome(int i) const { return outcomes_[i]; }
  const std::vector<OutcomeMap>& outcomes() const { return outcomes_; }

  int index_of(const std::string& label) const;

  double outcome_probability(int i, const DensityMatrix& rho) const;

  // Phi = sum_i Phi_i; concatenated Kraus lists.
  OutcomeMap total_channel() const;

  // Phi_I = Phi_{i_n} o ... o Phi_{i_1}, word given first-applied first.
  // Kraus lists longer than kraus_cap fall back to the representation
  // unless allow_superop_fallback is false (then WordTooLong).
  OutcomeMap compose_word(const std::vector<int>& word,
                          std::size_t kraus_cap = 4096,
                          bool allow_superop_fallback = true) const;

 private:
  int dim_;
  std::vector<OutcomeMap> outcomes_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace qtraj
