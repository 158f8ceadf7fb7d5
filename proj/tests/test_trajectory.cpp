#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qtraj/trajectory.hpp"
#include "support.hpp"

using namespace qtraj;
using namespace qtest;

TEST_CASE("step: uniform-bias outcomes are uniform") {
  Instrument instr = identity_uniform_instrument(2, 2);
  Rng rng(301);
  DensityMatrix rho = DensityMatrix::maximally_mixed(2);
  const long n = 100000;
  std::vector<long> counts(2, 0);
  for (long t = 0; t < n; ++t) counts[step(instr, rho, rng).first]++;
  CHECK(chi2_stat(counts, {0.5, 0.5}, n) < chi2_crit(1));
}

TEST_CASE("step: projective statistics and exact post-states") {
  Instrument instr = projective_qubit_instrument();
  RVector p(2);
  p << 0.2, 0.8;
  DensityMatrix rho = DensityMatrix::diagonal(p);
  Rng rng(303);
  const long n = 100000;
  std::vector<long> counts(2, 0);
  for (long t = 0; t < n; ++t) {
    auto [label, post] = step(instr, rho, rng);
    counts[label]++;
    CMatrix expected = CMatrix::Zero(2, 2);
    expected(label, label) = 1.0;
    CHECK(op_norm(post.mat() - expected) <= 1e-12);
  }
  double sigma = std::sqrt(0.2 * 0.8 * n);
  CHECK(std::abs(counts[0] - 0.2 * n) <= 3 * sigma + 1.0);
}

TEST_CASE("step: Monte Carlo one-step mean matches the channel") {
  Instrument instr = rotated_qubit_instrument();
  Rng rng(305);
  DensityMatrix rho0 = random_density(rng, 2);
  CMatrix mean = CMatrix::Zero(2, 2);
  const long n = 100000;
  for (long t = 0; t < n; ++t) mean += step(instr, rho0, rng).second.mat();
  mean /= static_cast<double>(n);
  CHECK(trace_norm(mean - instr.total_channel().apply(rho0.mat())) <= 0.01);
}

TEST_CASE("filter_step matches the true update and handles collapse") {
  Instrument instr = rotated_qubit_instrument();
  Rng rng(307);
  DensityMatrix rho = random_density(rng, 2);
  for (int i = 0; i < 2; ++i) {
    CMatrix post = instr.outcome(i).apply(rho.mat());
    CMatrix expected = post / post.trace().real();
    CHECK(op_norm(filter_step(instr, rho, i).mat() - expected) <= 1e-10);
  }

  Instrument proj = projective_qubit_instrument();
  CHECK(op_norm(filter_step(proj, DensityMatrix::maximally_mixed(2), 0).mat() -
                (CMatrix(2, 2) << 1, 0, 0, 0).finished()) <= 1e-12);
  RVector pure0(2);
  pure0 << 1.0, 0.0;
  CHECK_THROWS_AS(filter_step(proj, DensityMatrix::diagonal(pure0), 1),
                  FilterCollapse);
}

TEST_CASE("full-rank filter start never collapses") {
  Rng rng(309);
  long steps_done = 0;
  while (steps_done < 1000000) {
    Instrument instr = random_instrument(rng, 2, 2, 1);
    DensityMatrix rho = random_density(rng, 2);
    DensityMatrix rho_hat = DensityMatrix::maximally_mixed(2);
    for (int k = 0; k < 10000; ++k) {
      auto [label, next] = step(instr, rho, rng);
      CHECK_NOTHROW(rho_hat = filter_step(instr, rho_hat, label));
      rho = next;
      ++steps_done;
    }
  }
}

TEST_CASE("kernel_condition cases") {
  Rng rng(311);
  DensityMatrix rho = random_density(rng, 2);
  KernelCheck full = kernel_condition(rho, DensityMatrix::maximally_mixed(2));
  CHECK(full.ok);

  RVector p(2), q(2);
  p << 0.5, 0.5;
  q << 1.0, 0.0;
  CHECK_FALSE(kernel_condition(DensityMatrix::diagonal(p),
                               DensityMatrix::diagonal(q))
                  .ok);

  KernelCheck same = kernel_condition(rho, rho);
  CHECK(same.ok);
  CHECK(same.witness_c == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("run_pair with equal initial states keeps fidelity at one") {
  Instrument instr = rotated_qubit_instrument();
  Rng rng(313);
  DensityMatrix rho0 = random_density(rng, 2);
  TrajectoryRecord rec = run_pair(instr, rho0, rho0, 200, 99);
  for (double f : rec.fidelities) CHECK(f >= 1.0 - 1e-9);
}

TEST_CASE("run_pair is deterministic and validates the kernel condition") {
  Instrument instr = rotated_qubit_instrument();
  RVector p(2);
  p << 1.0, 0.0;
  DensityMatrix rho0 = DensityMatrix::diagonal(p);
  DensityMatrix mixed = DensityMatrix::maximally_mixed(2);
  TrajectoryRecord a = run_pair(instr, rho0, mixed, 100, 42);
  TrajectoryRecord b = run_pair(instr, rho0, mixed, 100, 42);
  CHECK(a.word == b.word);
  CHECK(a.fidelities == b.fidelities);
  CHECK(a.log_likelihood == b.log_likelihood);

  CHECK_THROWS_AS(run_pair(instr, mixed, rho0, 10, 1),
                  KernelConditionViolated);
}

TEST_CASE("log likelihood matches the cylinder probability") {
  Instrument instr = rotated_qubit_instrument();
  Rng rng(315);
  DensityMatrix rho0 = random_density(rng, 2);
  TrajectoryRecord rec = run_pair(instr, rho0, rho0, 12, 7);
  double cyl = cylinder_probability(instr, rec.word, rho0);
  CHECK(std::exp(rec.log_likelihood) ==
        doctest::Approx(cyl).epsilon(1e-8));
}

TEST_CASE("fidelity series stabilizes for the certified fixture") {
  Instrument instr = rotated_qubit_instrument();
  RVector p(2);
  p << 1.0, 0.0;
  DensityMatrix rho0 = DensityMatrix::diagonal(p);
  DensityMatrix mixed = DensityMatrix::maximally_mixed(2);
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    TrajectoryRecord rec = run_pair(instr, rho0, mixed, 500, seed);
    double mean = 0.0, var = 0.0;
    int tail = 50;
    for (int k = 451; k <= 500; ++k) mean += rec.fidelities[k];
    mean /= tail;
    for (int k = 451; k <= 500; ++k)
      var += (rec.fidelities[k] - mean) * (rec.fidelities[k] - mean);
    CHECK(std::sqrt(var / tail) <= 0.05);
  }
}

TEST_CASE("conditional fidelity expectation: trivial and submartingale") {
  Instrument instr = rotated_qubit_instrument();
  Rng rng(317);
  DensityMatrix rho = random_density(rng, 2);
  CHECK(conditional_fidelity_expectation(instr, rho, rho) ==
        doctest::Approx(1.0).epsilon(1e-9));

  Instrument uniform = identity_uniform_instrument(2, 2);
  DensityMatrix rho_hat = random_density(rng, 2);
  CHECK(conditional_fidelity_expectation(uniform, rho, rho_hat) ==
        doctest::Approx(fidelity(rho, rho_hat)).epsilon(1e-9));

  for (int t = 0; t < 300; ++t) {
    int d = 2 + t % 2;
    Instrument rnd = random_instrument(rng, d, 2, 1);
    DensityMatrix a = random_density(rng, d), b = random_density(rng, d);
    CHECK(conditional_fidelity_expectation(rnd, a, b) >=
          fidelity(a, b) - 1e-10);
  }
}

TEST_CASE("cylinder probabilities: conventions and normalization") {
  Instrument instr = rotated_qubit_instrument();
  Rng rng(319);
  DensityMatrix rho = random_density(rng, 2);
  CHECK(cylinder_probability(instr, {}, rho) == doctest::Approx(1.0));
  CHECK(cylinder_probability(instr, {1}, rho) ==
        doctest::Approx(instr.outcome_probability(1, rho)).epsilon(1e-12));

  double total = 0.0;
  for (int w = 0; w < 32; ++w) {
    std::vector<int> word;
    for (int k = 0; k < 5; ++k) word.push_back((w >> k) & 1);
    total += cylinder_probability(instr, word, rho);
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("cylinder probability equals the stepwise chain rule") {
  Rng rng(321);
  for (int t = 0; t < 20; ++t) {
    Instrument instr = random_instrument(rng, 2, 2, 2);
    DensityMatrix rho = random_density(rng, 2);
    std::vector<int> word;
    for (int k = 0; k < 5; ++k)
      word.push_back(rng.uniform() < 0.5 ? 0 : 1);
    double chain = 1.0;
    DensityMatrix state = rho;
    bool dead = false;
    for (int label : word) {
      double p = instr.outcome_probability(label, state);
      chain *= p;
      if (p < 1e-13) {
        dead = true;
        break;
      }
      state = filter_step(instr, state, label);
    }
    if (dead) continue;
    CHECK(cylinder_probability(instr, word, rho) ==
          doctest::Approx(chain).epsilon(1e-12));
  }
}

TEST_CASE("sampled word distribution matches cylinder probabilities") {
  Instrument instr = rotated_qubit_instrument();
  RVector p(2);
  p << 0.6, 0.4;
  DensityMatrix rho0 = DensityMatrix::diagonal(p);
  const long n = 100000;
  std::vector<long> counts(16, 0);
  Rng rng(323);
  for (long t = 0; t < n; ++t) {
    DensityMatrix rho = rho0;
    int idx = 0;
    for (int k = 0; k < 4; ++k) {
      auto [label, next] = step(instr, rho, rng);
      idx |= label << k;
      rho = next;
    }
    counts[idx]++;
  }
  std::vector<double> probs(16, 0.0);
  for (int w = 0; w < 16; ++w) {
    std::vector<int> word;
    for (int k = 0; k < 4; ++k) word.push_back((w >> k) & 1);
    probs[w] = cylinder_probability(instr, word, rho0);
  }
  CHECK(chi2_stat(counts, probs, n) < chi2_crit(15));
}

TEST_CASE("mixture of initial states gives the averaged word law") {
  Instrument instr = rotated_qubit_instrument();
  RVector pa(2), pb(2);
  pa << 0.9, 0.1;
  pb << 0.3, 0.7;
  DensityMatrix ra = DensityMatrix::diagonal(pa), rb = DensityMatrix::diagonal(pb);
  double alpha = 0.35;
  DensityMatrix mix = DensityMatrix::from_unnormalized(
      alpha * ra.mat() + (1 - alpha) * rb.mat());

  const long n = 100000;
  std::vector<long> counts(16, 0);
  Rng rng(325);
  for (long t = 0; t < n; ++t) {
    DensityMatrix rho = rng.uniform() < alpha ? ra : rb;
    int idx = 0;
    for (int k = 0; k < 4; ++k) {
      auto [label, next] = step(instr, rho, rng);
      idx |= label << k;
      rho = next;
    }
    counts[idx]++;
  }
  std::vector<double> probs(16, 0.0);
  for (int w = 0; w < 16; ++w) {
    std::vector<int> word;
    for (int k = 0; k < 4; ++k) word.push_back((w >> k) & 1);
    probs[w] = cylinder_probability(instr, word, mix);
  }
  CHECK(chi2_stat(counts, probs, n) < chi2_crit(15));
}

TEST_CASE("tv_distance_horizon: trivial cases and Lipschitz bound") {
  Instrument instr = rotated_qubit_instrument();
  Rng rng(327);
  DensityMatrix rho = random_density(rng, 2);
  CHECK(tv_distance_horizon(instr, rho, rho, 5) <= 1e-12);

  Instrument uniform = identity_uniform_instrument(2, 2);
  DensityMatrix sigma = random_density(rng, 2);
  CHECK(tv_distance_horizon(uniform, rho, sigma, 6) <= 1e-12);

  for (int t = 0; t < 50; ++t) {
    DensityMatrix a = random_density(rng, 2), b = random_density(rng, 2);
    int horizon = 1 + t % 8;
    CHECK(tv_distance_horizon(instr, a, b, horizon) <=
          trace_norm(a.mat() - b.mat()) + 1e-10);
  }

  CHECK_THROWS_AS(tv_distance_horizon(instr, rho, rho, 30), HorizonTooLarge);
}

TEST_CASE("dual martingale: identity for single-outcome instruments") {
  Instrument single = cycle_instrument(3);
  std::vector<CMatrix> ms = dual_martingale_series(single, {0, 0, 0, 0});
  for (const CMatrix& m : ms)
    CHECK(op_norm(m - CMatrix::Identity(3, 3)) <= 1e-10);
}

TEST_CASE("dual martingale: norms bounded and one-step identity") {
  Rng rng(329);
  for (int t = 0; t < 25; ++t) {
    Instrument instr = random_instrument(rng, 2, 2, 1);
    std::vector<int> word;
    for (int k = 0; k < 6; ++k) word.push_back(rng.uniform() < 0.5 ? 0 : 1);
    std::vector<CMatrix> ms = dual_martingale_series(instr, word);
    REQUIRE(ms.size() == word.size());
    for (const CMatrix& m : ms) CHECK(op_norm(m) <= 2.0 + 1e-9);

    // E^sigma[M_{k+1} | prefix] = M_k, enumerated over the next letter.
    DensityMatrix sigma = DensityMatrix::maximally_mixed(2);
    for (std::size_t k = 0; k < word.size(); ++k) {
      std::vector<int> prefix(word.begin(), word.begin() + k + 1);
      double p_prefix = cylinder_probability(instr, prefix, sigma);
      CMatrix expectation = CMatrix::Zero(2, 2);
      for (int i = 0; i < 2; ++i) {
        std::vector<int> ext = prefix;
        ext.push_back(i);
        double p_ext = cylinder_probability(instr, ext, sigma);
        if (p_ext < 1e-14) continue;
        expectation += (p_ext / p_prefix) * dual_martingale_series(instr, ext).back();
      }
      CHECK(op_norm(expectation - ms[k]) <= 1e-10);
    }
  }
}

TEST_CASE("dual martingale: projective word gives the scaled projector") {
  Instrument proj = projective_qubit_instrument();
  std::vector<CMatrix> ms = dual_martingale_series(proj, {0, 0, 0});
  CMatrix expected = CMatrix::Zero(2, 2);
  expected(0, 0) = 2.0;  // P^sigma(0...0) = 1/2 each step; dual word map = P0
  for (const CMatrix& m : ms) {
    CHECK(op_norm(m - expected) <= 1e-10);
    CHECK(op_norm(m) <= 2.0 + 1e-12);
  }
}
