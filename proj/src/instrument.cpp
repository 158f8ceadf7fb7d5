#include "qtraj/instrument.hpp"

#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/KroneckerProduct>

namespace qtraj {

CVector vec(const CMatrix& m) {
  return Eigen::Map<const CVector>(m.data(), m.size());
}

CMatrix unvec(const CVector& v, int d) {
  if (v.size() != static_cast<Eigen::Index>(d) * d)
    throw DimensionMismatch("unvec: vector length is not d^2");
  return Eigen::Map<const CMatrix>(v.data(), d, d);
}

CMatrix SuperOpMatrix::apply(const CMatrix& rho) const {
  if (rho.rows() != dim || rho.cols() != dim)
    throw DimensionMismatch("SuperOpMatrix::apply: dimension mismatch");
  return unvec(m * vec(rho), dim);
}

CMatrix SuperOpMatrix::apply_adjoint(const CMatrix& b) const {
  if (b.rows() != dim || b.cols() != dim)
    throw DimensionMismatch("SuperOpMatrix::apply_adjoint: dimension mismatch");
  return unvec(m.adjoint() * vec(b), dim);
}

CMatrix OutcomeMap::apply(const CMatrix& rho) const {
  if (rho.rows() != dim || rho.cols() != dim)
    throw DimensionMismatch("OutcomeMap::apply: dimension mismatch");
  if (!kraus_form()) return rep_fallback->apply(rho);
  CMatrix out = CMatrix::Zero(dim, dim);
  for (const CMatrix& a : kraus) out += a * rho * a.adjoint();
  return out;
}

CMatrix OutcomeMap::apply_adjoint(const CMatrix& b) const {
  if (b.rows() != dim || b.cols() != dim)
    throw DimensionMismatch("OutcomeMap::apply_adjoint: dimension mismatch");
  if (!kraus_form()) return rep_fallback->apply_adjoint(b);
  CMatrix out = CMatrix::Zero(dim, dim);
  for (const CMatrix& a : kraus) out += a.adjoint() * b * a;
  return out;
}

SuperOpMatrix OutcomeMap::rep() const {
  if (!kraus_form()) return *rep_fallback;
  SuperOpMatrix s;
  s.dim = dim;
  s.m = CMatrix::Zero(dim * dim, dim * dim);
  for (const CMatrix& a : kraus)
    s.m += Eigen::kroneckerProduct(a.conjugate(), a).eval();
  return s;
}

OutcomeMap make_map(std::string label, std::vector<CMatrix> kraus) {
  if (kraus.empty()) throw Error("make_map: empty Kraus list");
  OutcomeMap m;
  m.label = std::move(label);
  m.dim = static_cast<int>(kraus.front().rows());
  for (const CMatrix& a : kraus)
    if (a.rows() != m.dim || a.cols() != m.dim)
      throw DimensionMismatch("make_map: Kraus operators must all be d x d");
  m.kraus = std::move(kraus);
  return m;
}

SuperOpMatrix adjoint_rep(const OutcomeMap& map) {
  SuperOpMatrix s = map.rep();
  s.m = s.m.adjoint().eval();
  return s;
}

double map_norm(const OutcomeMap& map) {
  CMatrix dual_id = map.apply_adjoint(CMatrix::Identity(map.dim, map.dim));
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitize(dual_id),
                                            Eigen::EigenvaluesOnly);
  return std::max(0.0, es.eigenvalues().maxCoeff());
}

double map_norm(const SuperOpMatrix& rep) {
  CMatrix dual_id = rep.apply_adjoint(CMatrix::Identity(rep.dim, rep.dim));
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitize(dual_id),
                                            Eigen::EigenvaluesOnly);
  return std::max(0.0, es.eigenvalues().maxCoeff());
}

BiasMatrix::BiasMatrix(RMatrix e) : eta(std::move(e)) {
  if (eta.minCoeff() < 0.0)
    throw NotStochastic("BiasMatrix: negative entry");
  for (Eigen::Index j = 0; j < eta.cols(); ++j)
    if (std::abs(eta.col(j).sum() - 1.0) > 1e-12)
      throw NotStochastic("BiasMatrix: column " + std::to_string(j) +
                          " sums to " + std::to_string(eta.col(j).sum()));
}

Instrument::Instrument(int dim, std::vector<OutcomeMap> outcomes)
    : dim_(dim), outcomes_(std::move(outcomes)) {
  if (dim_ < 1) throw DimensionMismatch("Instrument: dim must be >= 1");
  if (outcomes_.empty()) throw Error("Instrument: no outcomes");
  CMatrix completeness = CMatrix::Zero(dim_, dim_);
  for (int i = 0; i < static_cast<int>(outcomes_.size()); ++i) {
    const OutcomeMap& o = outcomes_[i];
    if (o.dim != dim_)
      throw DimensionMismatch("Instrument: outcome dimension mismatch");
    if (!index_.emplace(o.label, i).second)
      throw Error("Instrument: duplicate outcome label '" + o.label + "'");
    completeness += o.apply_adjoint(CMatrix::Identity(dim_, dim_));
  }
  double residual =
      (completeness - CMatrix::Identity(dim_, dim_)).cwiseAbs().maxCoeff();
  if (residual > tol().tp)
    throw NotTracePreserving("Instrument: completeness residual " +
                             std::to_string(residual));
}

Instrument Instrument::from_bias(const std::vector<CMatrix>& perfect_ops,
                                 const BiasMatrix& eta,
                                 std::vector<std::string> labels) {
  if (perfect_ops.empty()) throw Error("from_bias: no perfect operators");
  const int d = static_cast<int>(perfect_ops.front().rows());
  CMatrix completeness = CMatrix::Zero(d, d);
  for (const CMatrix& v : perfect_ops) {
    if (v.rows() != d || v.cols() != d)
      throw DimensionMismatch("from_bias: operators must all be d x d");
    completeness += v.adjoint() * v;
  }
  double residual =
      (completeness - CMatrix::Identity(d, d)).cwiseAbs().maxCoeff();
  if (residual > tol().tp)
    throw NotTracePreserving("from_bias: unraveling residual " +
                             std::to_string(residual));
  if (eta.ideal_outcomes() != static_cast<int>(perfect_ops.size()))
    throw DimensionMismatch("from_bias: eta needs one column per operator");

  const int m = eta.reported_outcomes();
  if (labels.empty())
    for (int i = 0; i < m; ++i) labels.push_back(std::to_string(i + 1));
  if (static_cast<int>(labels.size()) != m)
    throw Error("from_bias: label count mismatch");

  std::vector<OutcomeMap> outs;
  outs.reserve(m);
  for (int i = 0; i < m; ++i) {
    std::vector<CMatrix> kraus;
    for (int j = 0; j < eta.ideal_outcomes(); ++j)
      if (eta.eta(i, j) > 0.0)
        kraus.push_back(std::sqrt(eta.eta(i, j)) * perfect_ops[j]);
    if (kraus.empty())
      kraus.push_back(CMatrix::Zero(d, d));  // outcome of probability zero
    outs.push_back(make_map(labels[i], std::move(kraus)));
  }
  return Instrument(d, std::move(outs));
}

int Instrument::index_of(const std::string& label) const {
  auto it = index_.find(label);
  if (it == index_.end())
    throw UnknownLabel("Instrument: unknown label '" + label + "'");
  return it->second;
}

double Instrument::outcome_probability(int i, const DensityMatrix& rho) const {
  if (i < 0 || i >= size())
    throw UnknownLabel("outcome_probability: index out of range");
  double p = outcomes_[i].apply(rho.mat()).trace().real();
  return std::clamp(p, 0.0, 1.0);
}

OutcomeMap Instrument::total_channel() const {
  std::vector<CMatrix> kraus;
  for (const OutcomeMap& o : outcomes_)
    kraus.insert(kraus.end(), o.kraus.begin(), o.kraus.end());
  return make_map("channel", std::move(kraus));
}

OutcomeMap Instrument::compose_word(const std::vector<int>& word,
                                    std::size_t kraus_cap,
                                    bool allow_superop_fallback) const {
  if (word.empty()) throw Error("compose_word: empty word");
  for (int i : word)
    if (i < 0 || i >= size())
      throw UnknownLabel("compose_word: index out of range");

  // Try to keep the explicit Kraus list; estimate growth up front.
  std::size_t count = 1;
  bool fits = true;
  for (int i : word) {
    count *= outcomes_[i].kraus.size();
    if (count > kraus_cap) {
      fits = false;
      break;
    }
  }
  if (!fits && !allow_superop_fallback)
    throw WordTooLong("compose_word: Kraus count exceeds cap");

  std::string label;
  for (std::size_t k = 0; k < word.size(); ++k) {
    if (k) label += ".";
    label += outcomes_[word[k]].label;
  }

  if (fits) {
    std::vector<CMatrix> prods = {CMatrix::Identity(dim_, dim_)};
    for (int i : word) {
      std::vector<CMatrix> next;
      next.reserve(prods.size() * outcomes_[i].kraus.size());
      for (const CMatrix& a : outcomes_[i].kraus)
        for (const CMatrix& p : prods) next.push_back(a * p);
      prods = std::move(next);
    }
    return make_map(label, std::move(prods));
  }

  SuperOpMatrix acc;
  acc.dim = dim_;
  acc.m = CMatrix::Identity(dim_ * dim_, dim_ * dim_);
  for (int i : word) acc.m = outcomes_[i].rep().m * acc.m;
  OutcomeMap out;
  out.label = label;
  out.dim = dim_;
  out.rep_fallback = std::move(acc);
  return out;
}

}  // namespace qtraj
