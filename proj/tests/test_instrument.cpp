#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "qtraj/instrument.hpp"
#include "qtraj/instrument_io.hpp"
#include "support.hpp"

using namespace qtraj;
using namespace qtest;

TEST_CASE("vec and unvec round trip") {
  Rng rng(1);
  CMatrix m = rng.complex_gaussian_matrix(3, 3);
  CHECK((unvec(vec(m), 3) - m).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("representation application agreement") {
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    int d = 2 + t % 3;
    Instrument instr = random_instrument(rng, d, 2, 2);
    CMatrix rho = random_density(rng, d).mat();
    for (int i = 0; i < instr.size(); ++i) {
      const OutcomeMap& map = instr.outcome(i);
      CMatrix via_rep = unvec(map.rep().m * vec(rho), d);
      CHECK(op_norm(via_rep - map.apply(rho)) <= 1e-10);
    }
  }
}

TEST_CASE("representation homomorphism on words") {
  Rng rng(3);
  Instrument instr = random_instrument(rng, 2, 3, 1);
  for (int len = 1; len <= 6; ++len) {
    std::vector<int> word;
    for (int k = 0; k < len; ++k) word.push_back(rng.categorical(std::vector<double>{1, 1, 1}));
    CMatrix prod = CMatrix::Identity(4, 4);
    for (int k = 0; k < len; ++k) prod = instr.outcome(word[k]).rep().m * prod;
    CMatrix composed = instr.compose_word(word).rep().m;
    CHECK(op_norm(composed - prod) <= 1e-10);
  }
}

TEST_CASE("word of length 1 is the outcome map") {
  Instrument instr = rotated_qubit_instrument();
  OutcomeMap w = instr.compose_word({1});
  CHECK(op_norm(w.rep().m - instr.outcome(1).rep().m) < 1e-14);
}

TEST_CASE("build from bias: identity eta is the perfect instrument") {
  auto ops = rotated_qubit_ops();
  RMatrix eta = RMatrix::Identity(2, 2);
  Instrument instr = Instrument::from_bias(ops, BiasMatrix(eta));
  for (int i = 0; i < 2; ++i) {
    REQUIRE(instr.outcome(i).kraus.size() == 1);
    CHECK(op_norm(instr.outcome(i).kraus[0] - ops[i]) < 1e-15);
  }
}

TEST_CASE("build from bias: uniform columns give uninformative outcomes") {
  auto ops = rotated_qubit_ops();
  RMatrix eta(2, 2);
  eta << 0.5, 0.5, 0.5, 0.5;
  Instrument instr = Instrument::from_bias(ops, BiasMatrix(eta));
  OutcomeMap channel = instr.total_channel();
  Rng rng(5);
  CMatrix rho = random_density(rng, 2).mat();
  for (int i = 0; i < 2; ++i)
    CHECK(op_norm(instr.outcome(i).apply(rho) - 0.5 * channel.apply(rho)) <=
          1e-12);
}

TEST_CASE("biased diagonal qubit instrument probabilities") {
  CMatrix v1 = CMatrix::Zero(2, 2), v2 = CMatrix::Zero(2, 2);
  v1(0, 0) = std::sqrt(0.7);
  v1(1, 1) = std::sqrt(0.3);
  v2(0, 0) = std::sqrt(0.3);
  v2(1, 1) = std::sqrt(0.7);
  RMatrix eta(2, 2);
  eta << 0.9, 0.1, 0.1, 0.9;
  Instrument instr =
      Instrument::from_bias({v1, v2}, BiasMatrix(eta), {"1", "2"});

  CHECK(instr.outcome_probability(0, DensityMatrix::maximally_mixed(2)) ==
        doctest::Approx(0.5).epsilon(1e-12));
  RVector p(2);
  p << 1.0, 0.0;
  CHECK(instr.outcome_probability(0, DensityMatrix::diagonal(p)) ==
        doctest::Approx(0.9 * 0.7 + 0.1 * 0.3).epsilon(1e-12));
}

TEST_CASE("probability normalization and projective case") {
  Instrument proj = projective_qubit_instrument();
  RVector p(2);
  p << 0.2, 0.8;
  DensityMatrix rho = DensityMatrix::diagonal(p);
  CHECK(proj.outcome_probability(0, rho) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(proj.outcome_probability(1, rho) == doctest::Approx(0.8).epsilon(1e-12));

  Rng rng(9);
  for (int t = 0; t < 30; ++t) {
    Instrument instr = random_instrument(rng, 3, 3, 2);
    DensityMatrix r = random_density(rng, 3);
    double total = 0.0;
    for (int i = 0; i < instr.size(); ++i)
      total += instr.outcome_probability(i, r);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("total channel independent of the bias") {
  auto ops = rotated_qubit_ops();
  RMatrix eta1 = RMatrix::Identity(2, 2);
  RMatrix eta2(2, 2);
  eta2 << 0.6, 0.25, 0.4, 0.75;
  CMatrix r1 = Instrument::from_bias(ops, BiasMatrix(eta1)).total_channel().rep().m;
  CMatrix r2 = Instrument::from_bias(ops, BiasMatrix(eta2)).total_channel().rep().m;
  CHECK(op_norm(r1 - r2) <= 1e-12);
}

TEST_CASE("channel mean identity E[rho'] = Phi(rho)") {
  Instrument instr = rotated_qubit_instrument();
  Rng rng(13);
  DensityMatrix rho = random_density(rng, 2);
  CMatrix avg = CMatrix::Zero(2, 2);
  for (int i = 0; i < instr.size(); ++i) {
    CMatrix post = instr.outcome(i).apply(rho.mat());
    avg += post;  // p * (post/p)
  }
  CHECK(op_norm(avg - instr.total_channel().apply(rho.mat())) <= 1e-10);
}

TEST_CASE("trace preservation enforced") {
  CMatrix half = 0.5 * CMatrix::Identity(2, 2);
  CHECK_THROWS_AS(Instrument(2, {make_map("x", {half})}), NotTracePreserving);
}

TEST_CASE("bias matrix must be column-stochastic") {
  RMatrix eta(2, 2);
  eta << 0.9, 0.1, 0.2, 0.9;
  CHECK_THROWS_AS(BiasMatrix{eta}, NotStochastic);
}

TEST_CASE("adjoint representation duality") {
  Rng rng(17);
  Instrument instr = random_instrument(rng, 3, 2, 2);
  const OutcomeMap& map = instr.outcome(0);
  for (int t = 0; t < 100; ++t) {
    CMatrix rho = rng.complex_gaussian_matrix(3, 3);
    CMatrix b = rng.complex_gaussian_matrix(3, 3);
    Complex lhs = (map.apply(rho) * b).trace();
    Complex rhs = (rho * map.apply_adjoint(b)).trace();
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
  }
  OutcomeMap channel = instr.total_channel();
  CHECK(op_norm(channel.apply_adjoint(CMatrix::Identity(3, 3)) -
                CMatrix::Identity(3, 3)) <= 1e-10);
}

TEST_CASE("adjoint of the identity channel is the identity") {
  Instrument instr = identity_uniform_instrument(2, 2);
  OutcomeMap channel = instr.total_channel();
  CHECK(op_norm(adjoint_rep(channel).m - CMatrix::Identity(4, 4)) <= 1e-12);
}

TEST_CASE("map_norm values and Monte Carlo bound") {
  Instrument instr = rotated_qubit_instrument();
  CHECK(map_norm(instr.total_channel()) == doctest::Approx(1.0).epsilon(1e-10));

  double c = 0.37;
  OutcomeMap scaled = make_map("s", {std::sqrt(c) * CMatrix::Identity(3, 3)});
  CHECK(map_norm(scaled) == doctest::Approx(c).epsilon(1e-10));

  Rng rng(21);
  Instrument rnd = random_instrument(rng, 2, 2, 2);
  const OutcomeMap& map = rnd.outcome(0);
  double norm = map_norm(map);
  double best = 0.0;
  for (int t = 0; t < 10000; ++t) {
    CVector x = rng.random_unit_vector(2);
    best = std::max(best, map.apply(x * x.adjoint()).trace().real());
  }
  CHECK(best <= norm + 1e-10);
  CHECK(norm - best <= 1e-3);
}

TEST_CASE("compose_word falls back to the representation past the cap") {
  Rng rng(31);
  Instrument instr = random_instrument(rng, 2, 2, 2);  // 2 Kraus each
  std::vector<int> word(13, 0);  // 2^13 = 8192 > 4096 products
  for (std::size_t k = 0; k < word.size(); ++k) word[k] = k % 2;
  OutcomeMap w = instr.compose_word(word);
  CHECK_FALSE(w.kraus_form());
  CHECK_THROWS_AS(instr.compose_word(word, 4096, false), WordTooLong);

  CMatrix prod = CMatrix::Identity(4, 4);
  for (int k : word) prod = instr.outcome(k).rep().m * prod;
  CHECK(op_norm(w.rep().m - prod) <= 1e-10);
}

TEST_CASE("instrument file round trip is bit exact") {
  std::string path = std::string(QTRAJ_TEST_DATA_DIR) + "/rotated_qubit.json";
  InstrumentFile f1 = load_instrument(path);
  CHECK(f1.instrument.dim() == 2);
  CHECK(f1.instrument.size() == 2);
  REQUIRE(f1.perfect_ops.size() == 2);
  auto ops = rotated_qubit_ops();
  CHECK(op_norm(f1.perfect_ops[0] - ops[0]) <= 1e-15);
  CHECK(op_norm(f1.perfect_ops[1] - ops[1]) <= 1e-15);

  std::string tmp = "/tmp/qtraj_roundtrip.json";
  save_instrument(f1, tmp);
  InstrumentFile f2 = load_instrument(tmp);
  for (int i = 0; i < 2; ++i)
    CHECK((f1.perfect_ops[i] - f2.perfect_ops[i]).cwiseAbs().maxCoeff() == 0.0);
  CHECK(serialize_instrument(f1) == serialize_instrument(f2));
  CHECK(instrument_hash(f1) == instrument_hash(f2));
}

TEST_CASE("outcomes form parses and matches explicit construction") {
  std::string text = R"({
    "dim": 2,
    "outcomes": [
      {"label": "p0", "kraus": [[[[1.0,0.0],[0.0,0.0]],[[0.0,0.0],[0.0,0.0]]]]},
      {"label": "p1", "kraus": [[[[0.0,0.0],[0.0,0.0]],[[0.0,0.0],[1.0,0.0]]]]}
    ]
  })";
  InstrumentFile f = parse_instrument(text);
  CHECK(f.instrument.size() == 2);
  CHECK(f.instrument.index_of("p1") == 1);
  CHECK(f.perfect_ops.empty());
}

TEST_CASE("malformed files raise ParseError") {
  CHECK_THROWS_AS(parse_instrument("not json"), ParseError);
  CHECK_THROWS_AS(parse_instrument("{\"dim\": 2}"), ParseError);
}
