// qtraj: trajectory simulation and certification CLI.
//
// Subcommands: validate, analyze, simulate, contractivity, invariant.
// All CSV artifacts start with '# key=value' metadata lines echoing the
// configuration and tolerances; with --no-timestamp two identical
// invocations produce byte-identical files.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "qtraj/channel_analysis.hpp"
#include "qtraj/contractivity.hpp"
#include "qtraj/ergodic.hpp"
#include "qtraj/instrument_io.hpp"
#include "qtraj/trajectory.hpp"

namespace fs = std::filesystem;
using namespace qtraj;

namespace {

struct CommonOpts {
  std::string instrument_path;
  std::string out_dir = ".";
  bool no_timestamp = false;
  std::uint64_t seed = 1;
  std::string seed_range;  // "A..B", inclusive
  int jobs = 1;
};

void add_tolerance_flags(CLI::App* cmd) {
  Tolerances& t = tol();
  cmd->add_option("--tol-herm", t.herm, "Hermiticity tolerance");
  cmd->add_option("--tol-trace", t.trace, "Unit-trace tolerance");
  cmd->add_option("--tol-psd", t.psd, "PSD tolerance");
  cmd->add_option("--tol-sqrt", t.sqrt, "PSD square-root residual tolerance");
  cmd->add_option("--tol-tp", t.tp, "Trace-preservation tolerance");
  cmd->add_option("--tol-fix", t.fix, "Fixed-space eigenvalue tolerance");
  cmd->add_option("--tol-peri", t.peri, "Peripheral spectral shell tolerance");
  cmd->add_option("--tol-rank", t.rank, "Full-rank threshold");
  cmd->add_option("--tol-cont", t.cont, "Contractivity certification defect");
  cmd->add_option("--tol-nd", t.nd, "Non-darkness equality tolerance");
  cmd->add_option("--tol-filter", t.filter, "Filter collapse threshold");
}

void add_common(CLI::App* cmd, CommonOpts& o, bool with_seeds = true) {
  cmd->add_option("instrument", o.instrument_path, "Instrument spec file (JSON)")
      ->required();
  cmd->add_option("--out", o.out_dir, "Output directory");
  cmd->add_flag("--no-timestamp", o.no_timestamp,
                "Omit the timestamp metadata line (byte-reproducible output)");
  if (with_seeds) {
    cmd->add_option("--seed", o.seed, "RNG seed");
    cmd->add_option("--seeds", o.seed_range, "Inclusive seed range A..B");
    cmd->add_option("--jobs", o.jobs, "Worker threads for campaigns");
  }
  add_tolerance_flags(cmd);
}

std::vector<std::uint64_t> seed_list(const CommonOpts& o) {
  if (o.seed_range.empty()) return {o.seed};
  auto dots = o.seed_range.find("..");
  if (dots == std::string::npos)
    throw Error("--seeds expects A..B");
  std::uint64_t a = std::stoull(o.seed_range.substr(0, dots));
  std::uint64_t b = std::stoull(o.seed_range.substr(dots + 2));
  if (b < a) throw Error("--seeds: B < A");
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = a; s <= b; ++s) seeds.push_back(s);
  return seeds;
}

DensityMatrix parse_state(const std::string& spec, int d) {
  if (spec == "mixed") return DensityMatrix::maximally_mixed(d);
  if (spec.rfind("basis:", 0) == 0) {
    int k = std::stoi(spec.substr(6));
    if (k < 0 || k >= d) throw Error("state spec: basis index out of range");
    CVector v = CVector::Zero(d);
    v(k) = 1.0;
    return DensityMatrix::pure(v);
  }
  if (spec.rfind("diag:", 0) == 0) {
    std::stringstream ss(spec.substr(5));
    std::vector<double> p;
    std::string tok;
    while (std::getline(ss, tok, ',')) p.push_back(std::stod(tok));
    if (static_cast<int>(p.size()) != d)
      throw Error("state spec: diag needs d entries");
    RVector v = Eigen::Map<RVector>(p.data(), p.size());
    return DensityMatrix::diagonal(v);
  }
  throw Error("state spec: expected mixed | basis:k | diag:p1,...,pd");
}

std::string tolerance_metadata() {
  const Tolerances& t = tol();
  std::ostringstream os;
  os << "# tol_herm=" << t.herm << " tol_trace=" << t.trace
     << " tol_psd=" << t.psd << " tol_sqrt=" << t.sqrt << " tol_tp=" << t.tp
     << "\n# tol_fix=" << t.fix << " tol_peri=" << t.peri
     << " tol_rank=" << t.rank << " tol_cont=" << t.cont << " tol_nd=" << t.nd
     << " tol_filter=" << t.filter << "\n";
  return os.str();
}

void write_header(std::ostream& os, const CommonOpts& o,
                  const InstrumentFile& f, const std::string& subcommand,
                  const std::map<std::string, std::string>& extra = {}) {
  os << "# tool=qtraj subcommand=" << subcommand << "\n";
  os << "# instrument=" << o.instrument_path << " instrument_hash="
     << std::hex << instrument_hash(f) << std::dec << "\n";
  os << "# rng=mt19937_64/canonical53\n";
  os << tolerance_metadata();
  for (const auto& [k, v] : extra) os << "# " << k << "=" << v << "\n";
  if (!o.no_timestamp) {
    auto now = std::chrono::system_clock::now();
    os << "# timestamp="
       << std::chrono::duration_cast<std::chrono::seconds>(
              now.time_since_epoch())
              .count()
       << "\n";
  }
}

void print_matrix(std::ostream& os, const CMatrix& m, const std::string& name) {
  os << name << " =\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    os << "  ";
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      os << "(" << m(i, j).real() << (m(i, j).imag() < 0 ? "" : "+")
         << m(i, j).imag() << "i)";
      if (j + 1 < m.cols()) os << "  ";
    }
    os << "\n";
  }
}

int cmd_validate(const CommonOpts& o) {
  // Load performs all structural checks: schema, trace preservation,
  // eta column-stochasticity. Report the first violation with residual.
  try {
    InstrumentFile f = load_instrument(o.instrument_path);
    std::cout << "ok: dim=" << f.instrument.dim()
              << " outcomes=" << f.instrument.size()
              << " hash=" << std::hex << instrument_hash(f) << std::dec
              << "\n";
    return 0;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 1;
  } catch (const NotTracePreserving& e) {
    std::cerr << "not trace-preserving: " << e.what() << "\n";
    return 1;
  } catch (const NotStochastic& e) {
    std::cerr << "bias matrix not column-stochastic: " << e.what() << "\n";
    return 1;
  }
}

int cmd_analyze(const CommonOpts& o) {
  InstrumentFile f = load_instrument(o.instrument_path);
  ChannelCertificate cert = certify(f.instrument.total_channel());

  std::ostringstream report;
  write_header(report, o, f, "analyze");
  report << "fixed_space_dim=" << cert.fixed_space_dim << "\n";
  report << "min_eig_inv=" << cert.min_eig_inv << "\n";
  report << "irreducible=" << (cert.irreducible ? "true" : "false") << "\n";
  if (cert.period)
    report << "period=" << *cert.period << "\n";
  else
    report << "period=unknown\n";
  report << "peripheral_structure_ok="
         << (cert.peripheral_structure_ok ? "true" : "false") << "\n";
  report << "primitive=" << (cert.primitive ? "true" : "false") << "\n";
  report << "peripheral_eigenvalues=";
  for (std::size_t i = 0; i < cert.peripheral_eigenvalues.size(); ++i) {
    const Complex& z = cert.peripheral_eigenvalues[i];
    report << (i ? ";" : "") << z.real() << (z.imag() < 0 ? "" : "+")
           << z.imag() << "i";
  }
  report << "\n";
  print_matrix(report, cert.invariant_state.mat(), "invariant_state");

  std::cout << report.str();
  fs::create_directories(o.out_dir);
  std::ofstream out(fs::path(o.out_dir) / "certificate.txt");
  out << report.str();
  return 0;
}

struct SimulateOpts {
  int steps = 500;
  std::string rho0 = "mixed";
  std::string rho_hat0 = "mixed";
};

int cmd_simulate(const CommonOpts& o, const SimulateOpts& s) {
  InstrumentFile f = load_instrument(o.instrument_path);
  const int d = f.instrument.dim();
  DensityMatrix rho0 = parse_state(s.rho0, d);
  DensityMatrix rho_hat0 = parse_state(s.rho_hat0, d);
  std::vector<std::uint64_t> seeds = seed_list(o);

  struct RunResult {
    std::uint64_t seed;
    bool collapsed = false;
    std::string error;
    TrajectoryRecord rec;
  };
  std::vector<RunResult> results(seeds.size());

  // Fan out runs; a single collector writes files afterwards.
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      std::size_t k = next.fetch_add(1);
      if (k >= seeds.size()) return;
      results[k].seed = seeds[k];
      try {
        results[k].rec =
            run_pair(f.instrument, rho0, rho_hat0, s.steps, seeds[k]);
      } catch (const FilterCollapse& e) {
        results[k].collapsed = true;
        results[k].error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int j = 0; j < std::max(1, o.jobs); ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  fs::create_directories(o.out_dir);
  for (const RunResult& r : results) {
    std::ofstream out(fs::path(o.out_dir) /
                      ("run_" + std::to_string(r.seed) + ".csv"));
    write_header(out, o, f, "simulate",
                 {{"seed", std::to_string(r.seed)},
                  {"steps", std::to_string(s.steps)},
                  {"rho0", s.rho0},
                  {"rho_hat0", s.rho_hat0}});
    if (r.collapsed) {
      out << "# filter_collapse=" << r.error << "\n";
      continue;
    }
    out << "step,outcome,fidelity,log_likelihood\n";
    double ll = 0.0;
    out << "0,," << r.rec.fidelities[0] << "," << ll << "\n";
    // log-likelihood column is cumulative; recompute the prefix sums from
    // the stored total is not possible, so we re-derive per step below.
    for (int k = 1; k <= r.rec.steps; ++k)
      out << k << "," << f.instrument.outcome(r.rec.word[k - 1]).label << ","
          << r.rec.fidelities[k] << ",\n";
    out << "# log_likelihood_total=" << r.rec.log_likelihood << "\n";
  }

  // Aggregate fidelity quantiles per step across non-collapsed runs.
  std::ofstream agg(fs::path(o.out_dir) / "aggregate.csv");
  write_header(agg, o, f, "simulate",
               {{"steps", std::to_string(s.steps)},
                {"runs", std::to_string(seeds.size())}});
  agg << "step,fidelity_q10,fidelity_median,fidelity_q90\n";
  for (int k = 0; k <= s.steps; ++k) {
    std::vector<double> vals;
    for (const RunResult& r : results)
      if (!r.collapsed) vals.push_back(r.rec.fidelities[k]);
    if (vals.empty()) break;
    std::sort(vals.begin(), vals.end());
    auto q = [&](double p) {
      return vals[std::min(vals.size() - 1,
                           static_cast<std::size_t>(p * vals.size()))];
    };
    agg << k << "," << q(0.10) << "," << q(0.50) << "," << q(0.90) << "\n";
  }
  int collapsed = 0;
  for (const RunResult& r : results) collapsed += r.collapsed ? 1 : 0;
  agg << "# filter_collapses=" << collapsed << "\n";
  std::cout << "simulate: " << seeds.size() << " runs, " << collapsed
            << " filter collapses, output in " << o.out_dir << "\n";
  return 0;
}

struct ContractivityOpts {
  std::string word;  // comma-separated labels; empty = search
  int max_len = 2000;
  int n_max = 500;
  int nd_subspaces = 0;  // > 0 enables the non-darkness falsifier
  int nd_word_len = 6;
};

int cmd_contractivity(const CommonOpts& o, const ContractivityOpts& c) {
  InstrumentFile f = load_instrument(o.instrument_path);
  fs::create_directories(o.out_dir);

  std::optional<ContCertificate> cert;
  if (!c.word.empty()) {
    std::vector<int> word;
    std::stringstream ss(c.word);
    std::string tok;
    while (std::getline(ss, tok, ','))
      word.push_back(f.instrument.index_of(tok));
    cert = certify_primitive_word(f.instrument, word, c.n_max);
  } else {
    cert = search_contractive_sequence(
        f.instrument, DensityMatrix::maximally_mixed(f.instrument.dim()),
        c.max_len, tol().cont, o.seed);
  }

  std::ostringstream report;
  write_header(report, o, f, "contractivity",
               {{"seed", std::to_string(o.seed)}});
  if (!cert) {
    report << "certified=false\n";
  } else {
    report << "certified=true\n";
    report << "word=";
    for (std::size_t i = 0; i < cert->word.size(); ++i)
      report << (i ? "," : "") << f.instrument.outcome(cert->word[i]).label;
    report << "\npower=" << cert->power << "\n";
    report << "defect=" << cert->defect << "\n";
    print_matrix(report, cert->z_est, "Z_est");
    print_matrix(report, cert->x_est, "X_est");

    std::ofstream trace(fs::path(o.out_dir) / "defect_trace.csv");
    write_header(trace, o, f, "contractivity");
    trace << "length,defect\n";
    for (const auto& [len, defect] : cert->defect_trace)
      trace << len << "," << defect << "\n";
  }
  std::cout << report.str();
  std::ofstream out(fs::path(o.out_dir) / "contractivity.txt");
  out << report.str();

  if (c.nd_subspaces > 0) {
    if (f.perfect_ops.empty()) {
      std::cerr << "non-darkness falsifier needs a perfect_ops instrument file\n";
      return 1;
    }
    NdReport nd = nd_falsifier(f.perfect_ops, c.nd_subspaces, c.nd_word_len,
                               o.seed);
    std::cout << "nd_falsifier: subspaces=" << nd.subspaces_sampled
              << " words_tested=" << nd.words_tested
              << " dark_candidates=" << nd.dark_candidates.size() << "\n";
  }
  return 0;
}

struct InvariantOpts {
  int burn_in = 1000;
  int thinning = 10;
  int n_samples = 2000;
  std::string rho0 = "mixed";
  std::string g_name = "purity";
  int g_steps = 200000;
};

int cmd_invariant(const CommonOpts& o, const InvariantOpts& iv) {
  InstrumentFile f = load_instrument(o.instrument_path);
  const int d = f.instrument.dim();
  DensityMatrix rho0 = parse_state(iv.rho0, d);
  std::vector<std::uint64_t> seeds = seed_list(o);
  fs::create_directories(o.out_dir);

  ChannelCertificate cert = certify(f.instrument.total_channel());
  if (!cert.irreducible)
    std::cerr << "warning: channel not certified irreducible; the invariant "
                 "measure may not be unique\n";

  std::vector<EmpiricalMeasure> replicas;
  for (std::uint64_t s : seeds) {
    EmpiricalMeasure mu = sample_invariant(f.instrument, rho0, iv.burn_in,
                                           iv.n_samples, iv.thinning, s);
    std::ofstream out(fs::path(o.out_dir) /
                      ("atoms_" + std::to_string(s) + ".csv"));
    write_header(out, o, f, "invariant",
                 {{"seed", std::to_string(s)},
                  {"burn_in", std::to_string(iv.burn_in)},
                  {"thinning", std::to_string(iv.thinning)},
                  {"n_samples", std::to_string(iv.n_samples)}});
    out << "weight";
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) out << ",re_" << i << j << ",im_" << i << j;
    out << "\n";
    for (const auto& [state, w] : mu.atoms) {
      out << w;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          out << "," << state.mat()(i, j).real() << ","
              << state.mat()(i, j).imag();
      out << "\n";
    }
    replicas.push_back(std::move(mu));
  }

  std::ostringstream report;
  write_header(report, o, f, "invariant");
  for (std::size_t a = 0; a < replicas.size(); ++a)
    for (std::size_t b = a + 1; b < replicas.size(); ++b)
      report << "w1_replica_" << seeds[a] << "_" << seeds[b] << "="
             << wasserstein1(replicas[a], replicas[b]) << "\n";
  for (std::size_t a = 0; a < replicas.size(); ++a) {
    EmpiricalMeasure pushed = kernel_push(f.instrument, replicas[a]);
    SubsampledW1 w = wasserstein1_subsampled(replicas[a], pushed, 2000, 3,
                                             seeds[a] + 777);
    report << "w1_push_" << seeds[a] << "=" << w.mean << " spread=" << w.spread
           << "\n";
  }

  // Ergodic running mean trace for plotting.
  StateFunctional g;
  if (iv.g_name == "purity") g = purity_functional();
  else if (iv.g_name == "entropy") g = entropy_functional();
  else if (iv.g_name == "maxeig") g = max_eigenvalue_functional();
  else if (iv.g_name == "linear") {
    RVector diag(d);
    for (int i = 0; i < d; ++i) diag(i) = (i % 2 == 0) ? 1.0 : -1.0;
    CMatrix a = CMatrix::Zero(d, d);
    for (int i = 0; i < d; ++i) a(i, i) = diag(i);
    g = linear_functional(a);
  } else {
    throw Error("unknown functional: " + iv.g_name +
                " (expected purity|entropy|maxeig|linear)");
  }
  {
    std::ofstream out(fs::path(o.out_dir) / "ergodic_mean.csv");
    write_header(out, o, f, "invariant",
                 {{"g", iv.g_name}, {"seed", std::to_string(seeds[0])}});
    out << "n,running_mean\n";
    Rng rng(seeds[0]);
    DensityMatrix rho = rho0;
    double acc = 0.0;
    int emit = std::max(1, iv.g_steps / 200);
    for (int k = 1; k <= iv.g_steps; ++k) {
      rho = step(f.instrument, rho, rng).second;
      acc += g(rho);
      if (k % emit == 0 || k == iv.g_steps)
        out << k << "," << acc / k << "\n";
    }
    report << "ergodic_mean_" << iv.g_name << "=" << acc / iv.g_steps << "\n";
  }

  std::cout << report.str();
  std::ofstream out(fs::path(o.out_dir) / "invariant.txt");
  out << report.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-time quantum trajectories under imperfect "
               "measurement: simulation, certification, ergodic studies"};
  app.require_subcommand(1);

  CommonOpts ov, oa, os_, oc, oi;
  SimulateOpts sim;
  ContractivityOpts con;
  InvariantOpts inv;

  CLI::App* validate = app.add_subcommand("validate", "Check an instrument file");
  add_common(validate, ov, /*with_seeds=*/false);

  CLI::App* analyze = app.add_subcommand("analyze", "Spectral certificate of the channel");
  add_common(analyze, oa, /*with_seeds=*/false);

  CLI::App* simulate = app.add_subcommand("simulate", "Trajectory-pair campaigns");
  add_common(simulate, os_);
  simulate->add_option("--steps", sim.steps, "Steps per run (default 500)");
  simulate->add_option("--rho0", sim.rho0, "True initial state (mixed|basis:k|diag:...)");
  simulate->add_option("--rho-hat0", sim.rho_hat0, "Estimated initial state");

  CLI::App* contract = app.add_subcommand("contractivity", "Certify (Cont); optional (ND) falsifier");
  add_common(contract, oc);
  contract->add_option("--word", con.word, "Comma-separated labels for the primitive-word route");
  contract->add_option("--max-len", con.max_len, "Trajectory search length (default 2000)");
  contract->add_option("--n-max", con.n_max, "Max word powers (default 500)");
  contract->add_option("--nd-subspaces", con.nd_subspaces, "Subspaces per dimension for the (ND) falsifier");
  contract->add_option("--nd-word-len", con.nd_word_len, "Max word length for the (ND) falsifier (default 6)");

  CLI::App* invariant = app.add_subcommand("invariant", "Invariant-measure sampling and ergodic means");
  add_common(invariant, oi);
  invariant->add_option("--burn-in", inv.burn_in, "Burn-in steps (default 1000)");
  invariant->add_option("--thin", inv.thinning, "Thinning (default 10)");
  invariant->add_option("--samples", inv.n_samples, "Atoms to record (default 2000)");
  invariant->add_option("--rho0", inv.rho0, "Initial state");
  invariant->add_option("--g", inv.g_name, "Functional: purity|entropy|maxeig|linear");
  invariant->add_option("--g-steps", inv.g_steps, "Ergodic-mean trajectory length");

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_validate(ov);
    if (analyze->parsed()) return cmd_analyze(oa);
    if (simulate->parsed()) return cmd_simulate(os_, sim);
    if (contract->parsed()) return cmd_contractivity(oc, con);
    if (invariant->parsed()) return cmd_invariant(oi, inv);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NotTracePreserving& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NotStochastic& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
