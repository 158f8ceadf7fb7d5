#include "qtraj/contractivity.hpp"

#include <algorithm>
#include <cmath>

#include "qtraj/channel_analysis.hpp"
#include "qtraj/rng.hpp"
#include "qtraj/trajectory.hpp"

namespace qtraj {

namespace {

// PSD estimate from a (nearly Hermitian-vectorized) singular vector: fix
// the global phase so the trace is real positive, Hermitize, clamp, and
// normalize to unit trace norm.
CMatrix psd_estimate(const CVector& v, int d) {
  CMatrix m = unvec(v, d);
  Complex tr = m.trace();
  if (std::abs(tr) > 1e-14) m *= std::conj(tr) / std::abs(tr);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitize(m));
  RVector ev = es.eigenvalues().cwiseMax(0.0);
  CMatrix p = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
  double norm = ev.sum();
  if (norm > 0.0) p /= norm;
  return hermitize(p);
}

struct RepSvd {
  double defect = 1.0;
  double s1 = 0.0;
  CVector left;
  CVector right;
};

RepSvd analyze_rep(const CMatrix& rep) {
  Eigen::JacobiSVD<CMatrix> svd(rep, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > 0.0)) throw ZeroMap("rank_one_defect: zero map");
  RepSvd r;
  r.s1 = sv(0);
  r.defect = sv.size() > 1 ? sv(1) / sv(0) : 0.0;
  r.left = svd.matrixU().col(0);
  r.right = svd.matrixV().col(0);
  return r;
}

ContCertificate certificate_from_rep(const CMatrix& rep, int d,
                                     std::vector<int> word, int power) {
  RepSvd r = analyze_rep(rep);
  ContCertificate cert;
  cert.word = std::move(word);
  cert.power = power;
  cert.defect = r.defect;
  cert.top_singular = 1.0;  // representation is spectrally normalized
  cert.z_est = psd_estimate(r.left, d);
  cert.x_est = psd_estimate(r.right, d);
  return cert;
}

}  // namespace

double rank_one_defect(const SuperOpMatrix& rep) {
  return analyze_rep(rep.m).defect;
}

double rank_one_defect(const OutcomeMap& map) {
  return rank_one_defect(map.rep());
}

std::optional<ContCertificate> certify_primitive_word(
    const Instrument& instr, const std::vector<int>& word, int n_max,
    double tol_cont) {
  if (tol_cont < 0.0) tol_cont = tol().cont;
  OutcomeMap word_map = instr.compose_word(word);
  if (!is_primitive_map(word_map)) return std::nullopt;

  const int d = instr.dim();
  CMatrix t = word_map.rep().m;
  t /= op_norm(t);  // renormalize after every multiplication

  CMatrix acc = t;
  std::vector<std::pair<int, double>> trace;
  for (int n = 1; n <= n_max; ++n) {
    RepSvd r = analyze_rep(acc);
    trace.emplace_back(n * static_cast<int>(word.size()), r.defect);
    if (r.defect <= tol_cont) {
      ContCertificate cert = certificate_from_rep(acc / r.s1, d, word, n);
      cert.defect_trace = std::move(trace);
      return cert;
    }
    acc = t * acc;
    acc /= op_norm(acc);
  }
  return std::nullopt;
}

std::optional<ContCertificate> search_contractive_sequence(
    const Instrument& instr, const DensityMatrix& rho_probe, int max_len,
    double tol_defect, std::uint64_t seed, int beam_width, int beam_depth) {
  const int d = instr.dim();
  const int dd = d * d;

  std::vector<CMatrix> reps;
  for (int i = 0; i < instr.size(); ++i) reps.push_back(instr.outcome(i).rep().m);

  struct Best {
    double defect = 2.0;
    CMatrix rep;
    std::vector<int> word;
  } best;

  auto consider = [&](const CMatrix& rep, const std::vector<int>& word) {
    RepSvd r = analyze_rep(rep);
    if (r.defect < best.defect) {
      best.defect = r.defect;
      best.rep = rep / r.s1;
      best.word = word;
    }
    return r.defect;
  };

  // Route 1: one trajectory word sampled from P^{rho_probe}; the running
  // normalized product is tracked after every letter.
  {
    Rng rng(seed);
    DensityMatrix rho = rho_probe;
    CMatrix acc = CMatrix::Identity(dd, dd);
    std::vector<int> word;
    std::vector<std::pair<int, double>> trace;
    for (int len = 1; len <= max_len; ++len) {
      auto [i, next] = step(instr, rho, rng);
      rho = next;
      word.push_back(i);
      acc = reps[i] * acc;
      acc /= op_norm(acc);
      double defect = consider(acc, word);
      trace.emplace_back(len, defect);
      if (best.defect <= tol_defect) {
        ContCertificate cert = certificate_from_rep(best.rep, d, best.word, 1);
        cert.defect_trace = std::move(trace);
        return cert;
      }
    }
  }

  // Route 2: beam search over short words minimizing the defect; catches
  // short certificates a random trajectory is unlikely to hit.
  {
    struct Node {
      CMatrix rep;
      std::vector<int> word;
      double defect;
    };
    std::vector<Node> beam = {{CMatrix::Identity(dd, dd), {}, 1.0}};
    for (int depth = 1; depth <= beam_depth; ++depth) {
      std::vector<Node> next;
      for (const Node& node : beam) {
        for (int i = 0; i < instr.size(); ++i) {
          CMatrix rep = reps[i] * node.rep;
          double norm = op_norm(rep);
          if (norm <= 1e-300) continue;
          rep /= norm;
          std::vector<int> word = node.word;
          word.push_back(i);
          double defect = consider(rep, word);
          next.push_back({std::move(rep), std::move(word), defect});
        }
      }
      if (next.empty()) break;
      std::sort(next.begin(), next.end(),
                [](const Node& a, const Node& b) { return a.defect < b.defect; });
      if (static_cast<int>(next.size()) > beam_width) next.resize(beam_width);
      beam = std::move(next);
    }
  }

  if (best.defect <= tol_defect)
    return certificate_from_rep(best.rep, d, best.word, 1);
  return std::nullopt;
}

NdReport nd_falsifier(const std::vector<CMatrix>& perfect_ops, int n_subspaces,
                      int max_word_len, std::uint64_t seed) {
  if (perfect_ops.empty()) throw NotUnraveling("nd_falsifier: no operators");
  const int d = static_cast<int>(perfect_ops.front().rows());
  CMatrix completeness = CMatrix::Zero(d, d);
  for (const CMatrix& v : perfect_ops) {
    if (v.rows() != d || v.cols() != d)
      throw DimensionMismatch("nd_falsifier: operators must be d x d");
    completeness += v.adjoint() * v;
  }
  if ((completeness - CMatrix::Identity(d, d)).cwiseAbs().maxCoeff() > tol().tp)
    throw NotUnraveling("nd_falsifier: sum V^dag V differs from identity");

  Rng rng(seed);
  NdReport report;

  for (int k = 2; k <= d; ++k) {
    for (int s = 0; s < n_subspaces; ++s) {
      CMatrix frame = rng.haar_frame(d, k);
      CMatrix proj = frame * frame.adjoint();

      bool violated = false;
      // Breadth-first over words; branches whose product annihilates the
      // subspace cannot produce a violation and are pruned.
      std::vector<CMatrix> layer = {CMatrix::Identity(d, d)};
      for (int len = 1; len <= max_word_len && !violated; ++len) {
        std::vector<CMatrix> next;
        next.reserve(layer.size() * perfect_ops.size());
        for (const CMatrix& prev : layer) {
          for (const CMatrix& v : perfect_ops) {
            CMatrix word_op = v * prev;
            CMatrix restricted = word_op * proj;
            double s1 = op_norm(restricted);
            ++report.words_tested;
            if (s1 * s1 < 1e-14) continue;  // dead branch
            CMatrix lhs = proj * word_op.adjoint() * word_op * proj;
            CMatrix rhs = (s1 * s1) * proj;
            if ((lhs - rhs).cwiseAbs().maxCoeff() >
                tol().nd * std::max(1.0, s1 * s1)) {
              violated = true;
              break;
            }
            next.push_back(std::move(word_op));
          }
          if (violated) break;
        }
        layer = std::move(next);
        if (layer.empty()) break;
      }
      ++report.subspaces_sampled;
      if (!violated) report.dark_candidates.push_back({k, frame});
    }
  }
  return report;
}

}  // namespace qtraj
