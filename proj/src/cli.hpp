#pragma once

// The sepdict command line. run() parses one subcommand and its flags,
// executes it and returns the process exit code:
//   0 success (certify: model is globally optimal)
//   1 usage error: bad flag, missing file, shape mismatch
//   2 runtime or numerical failure
//   3 certify: model is not globally optimal

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sepdict/sepdict.hpp"

namespace sepdict::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kRuntime = 2, kNotOptimal = 3 };

namespace detail {

struct Options {
  int threads = 0;
  std::uint64_t seed = 0;
  double lambda = 0.0;

  std::string out, data, model_dir, log, atoms;
  Index g = 10, v = 100, t = 1200, n_gamma = 3, n_psi = 6;
  double noise_var = 0.003;

  int max_rounds = 500;
  bool oracle_gap = false;
  bool prune = false;

  std::string factorize_dir;
  bool non_compact = false;

  std::string noisy, reference, a, b;
  Index patch = 8, stride = 4;
  std::vector<Index> dims;  // g, width, height when volumes are raw float64
};

inline Tensor3 load_volume(const std::string& path, const Options& o) {
  if (o.dims.empty()) return io::load_sdt(path);
  return io::load_raw_volume(path, o.dims[0], o.dims[1], o.dims[2]);
}

inline void save_volume(const std::string& path, const Tensor3& x, const Options& o) {
  if (o.dims.empty())
    io::save_sdt(path, x);
  else
    io::save_raw_volume(path, x);
}

inline int cmd_synth(const Options& o, std::ostream& out) {
  SyntheticSpec spec;
  spec.g = o.g;
  spec.v = o.v;
  spec.t = o.t;
  spec.n_gamma_atoms = o.n_gamma;
  spec.n_psi_atoms = o.n_psi;
  spec.noise_var = o.noise_var;
  spec.seed = o.seed;
  const SyntheticData d = generate(spec);
  io::save_sdt(o.out, d.data);
  const std::string atoms = o.atoms.empty() ? o.out + ".atoms.csv" : o.atoms;
  io::write_text(atoms, atoms_csv(d.gamma_atoms, d.psi_atoms));
  out << "wrote " << o.out << " (" << d.data.dims() << ") and " << atoms << "\n";
  return kOk;
}

inline std::string learn_log(const RunRecord& rec, const Options& o) {
  const bool gap = rec.objective_star.has_value();
  std::string text = "# seed=" + std::to_string(o.seed) + " lambda=" + csv::real(o.lambda);
  if (gap) text += " objective_star=" + csv::real(*rec.objective_star);
  text += "\n" + run_record_csv_header(gap) + "\n";
  for (const auto& r : rec.rounds) text += run_record_csv_row(r, gap) + "\n";
  return text;
}

inline int cmd_learn(const Options& o, std::ostream& out, std::ostream& err) {
  const Tensor3 s = io::load_sdt(o.data);
  SolverConfig cfg;
  cfg.lambda = o.lambda;
  cfg.init_seed = o.seed;
  cfg.max_outer_rounds = o.max_rounds;
  cfg.prune_dead_atoms = o.prune;
  std::optional<double> star;
  if (o.oracle_gap) star = global_optimum(s, o.lambda).objective_star;
  try {
    auto [model, rec] = solve(s, cfg, star);
    io::save_model(o.model_dir, model);
    if (!o.log.empty()) io::write_text(o.log, learn_log(rec, o));
    const RoundRecord& last = rec.rounds.back();
    out << (rec.certified ? "certified" : "not certified") << " after " << rec.rounds.size()
        << " rounds: objective=" << csv::real(last.objective) << " r1=" << last.r1 << " r2=" << last.r2;
    if (last.gap) out << " gap=" << csv::real(*last.gap);
    out << "\n";
    return kOk;
  } catch (const StallError& e) {
    io::save_model(o.model_dir, e.record.final_model);
    if (!o.log.empty()) io::write_text(o.log, learn_log(e.record, o));
    err << "learn: " << e.what() << "\n";
    return kRuntime;
  }
}

inline int cmd_certify(const Options& o, std::ostream& out) {
  const Tensor3 s = io::load_sdt(o.data);
  const Model m = io::load_model(o.model_dir);
  m.validate_against(s);
  const CertificateReport r = check(s, m, o.lambda);
  out << certificate_csv_header() << "\n" << certificate_csv_row(0, r) << "\n";
  return r.optimal() ? kOk : kNotOptimal;
}

inline int cmd_oracle(const Options& o, std::ostream& out) {
  const Tensor3 s = io::load_sdt(o.data);
  const OracleSolution sol = global_optimum(s, o.lambda);
  io::write_text(o.out, oracle_csv(sol));
  if (!o.factorize_dir.empty()) io::save_model(o.factorize_dir, explicit_factorization(s, o.lambda, !o.non_compact));
  out << "objective_star=" << csv::real(sol.objective_star) << " r_tilde=" << sol.r_tilde << "\n";
  return kOk;
}

inline void print_psnr(std::ostream& out, const char* label, double db) { out << label << "=" << csv::real(db) << "\n"; }

inline int cmd_denoise(const Options& o, std::ostream& out) {
  const Tensor3 noisy = load_volume(o.noisy, o);
  const Model m = io::load_model(o.model_dir);
  const Tensor3 clean = denoise(noisy, m.gamma, m.psi, o.lambda, o.patch, o.stride);
  save_volume(o.out, clean, o);
  if (!o.reference.empty()) {
    const Tensor3 ref = load_volume(o.reference, o);
    print_psnr(out, "psnr_before", psnr(ref, noisy));
    print_psnr(out, "psnr_after", psnr(ref, clean));
  }
  return kOk;
}

inline int cmd_psnr(const Options& o, std::ostream& out) {
  print_psnr(out, "psnr", psnr(load_volume(o.a, o), load_volume(o.b, o)));
  return kOk;
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  detail::Options o;
  CLI::App app{"Separable dictionary learning with global optimality certificates", "sepdict"};
  app.require_subcommand(1, 1);
  app.add_option("--threads", o.threads, "Worker threads (default: all cores)")->check(CLI::NonNegativeNumber);

  const auto add_seed = [&](CLI::App* c) { c->add_option("--seed", o.seed, "Random seed")->capture_default_str(); };
  const auto add_lambda = [&](CLI::App* c) {
    c->add_option("--lambda", o.lambda, "Regularization weight")->required()->check(CLI::PositiveNumber);
  };
  const auto add_dims = [&](CLI::App* c) {
    c->add_option("--dims", o.dims, "Read and write raw float64 volumes of shape G W H instead of SDT1")
        ->expected(3)
        ->check(CLI::PositiveNumber);
  };

  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic data tensor");
  synth->add_option("--out", o.out, "Output SDT1 file")->required();
  synth->add_option("--atoms", o.atoms, "Ground-truth atoms CSV (default: <out>.atoms.csv)");
  synth->add_option("--g", o.g, "Angular samples")->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--v", o.v, "Spatial samples")->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--t", o.t, "Signals")->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--gamma-atoms", o.n_gamma, "Angular atoms")->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--psi-atoms", o.n_psi, "Spatial atoms")->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--noise-var", o.noise_var, "Noise variance")->capture_default_str()->check(CLI::NonNegativeNumber);
  add_seed(synth);

  CLI::App* learn = app.add_subcommand("learn", "Learn a certified factorization");
  learn->add_option("--data", o.data, "Data SDT1 file")->required()->check(CLI::ExistingFile);
  add_lambda(learn);
  add_seed(learn);
  learn->add_option("--max-rounds", o.max_rounds, "Outer round budget")->capture_default_str()->check(CLI::PositiveNumber);
  learn->add_option("--out-model", o.model_dir, "Model output directory")->required();
  learn->add_option("--log", o.log, "Per-round CSV log");
  learn->add_flag("--oracle-gap", o.oracle_gap, "Log the gap to the exact optimum");
  learn->add_flag("--prune", o.prune, "Drop dead atoms after each descent");

  CLI::App* certify = app.add_subcommand("certify", "Check global optimality of a model");
  certify->add_option("--data", o.data, "Data SDT1 file")->required()->check(CLI::ExistingFile);
  certify->add_option("--model", o.model_dir, "Model directory")->required()->check(CLI::ExistingDirectory);
  add_lambda(certify);

  CLI::App* oracle = app.add_subcommand("oracle", "Exact optimum by singular value shrinkage");
  oracle->add_option("--data", o.data, "Data SDT1 file")->required()->check(CLI::ExistingFile);
  add_lambda(oracle);
  oracle->add_option("--out", o.out, "Output CSV")->required();
  oracle->add_option("--factorize", o.factorize_dir, "Also write an optimal factorization to this directory");
  oracle->add_flag("--non-compact", o.non_compact, "Keep full slice SVD factors in the factorization");

  CLI::App* den = app.add_subcommand("denoise", "Denoise a slice with a learned model");
  den->add_option("--noisy", o.noisy, "Noisy slice")->required()->check(CLI::ExistingFile);
  den->add_option("--model", o.model_dir, "Model directory")->required()->check(CLI::ExistingDirectory);
  add_lambda(den);
  den->add_option("--patch", o.patch, "Patch side")->capture_default_str()->check(CLI::PositiveNumber);
  den->add_option("--stride", o.stride, "Patch stride")->capture_default_str()->check(CLI::PositiveNumber);
  den->add_option("--out", o.out, "Output slice")->required();
  den->add_option("--reference", o.reference, "Clean slice for PSNR")->check(CLI::ExistingFile);
  add_dims(den);

  CLI::App* ps = app.add_subcommand("psnr", "PSNR of --b against reference --a");
  ps->add_option("--a", o.a, "Reference slice")->required()->check(CLI::ExistingFile);
  ps->add_option("--b", o.b, "Test slice")->required()->check(CLI::ExistingFile);
  add_dims(ps);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "sepdict: " << e.what() << "\n";
    return kUsage;
  }

  set_thread_count(o.threads);
  try {
    if (synth->parsed()) return detail::cmd_synth(o, out);
    if (learn->parsed()) return detail::cmd_learn(o, out, err);
    if (certify->parsed()) return detail::cmd_certify(o, out);
    if (oracle->parsed()) return detail::cmd_oracle(o, out);
    if (den->parsed()) return detail::cmd_denoise(o, out);
    return detail::cmd_psnr(o, out);
  } catch (const ShapeError& e) {
    err << "sepdict: shape mismatch: " << e.what() << "\n";
    return kUsage;
  } catch (const ParameterError& e) {
    err << "sepdict: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "sepdict: " << e.what() << "\n";
    return kRuntime;
  }
}

}  // namespace sepdict::cli
