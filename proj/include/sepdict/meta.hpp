#pragma once

// Outer loop: descend to a stationary point with the current dictionary
// sizes, run the optimality check, and either stop (certified) or append
// the violating atoms and descend again.

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sepdict/certificate.hpp"
#include "sepdict/csv.hpp"
#include "sepdict/descent.hpp"
#include "sepdict/objective.hpp"
#include "sepdict/random.hpp"

namespace sepdict {

struct SolverConfig {
  double lambda = 1.0;
  Index init_r1 = 1;
  Index init_r2 = 1;
  std::uint64_t init_seed = 0;
  DescentConfig descent{.max_iters = 20000, .rel_tol = 1e-6, .nesterov = true};
  CertConfig cert;
  int max_outer_rounds = 500;
  bool prune_dead_atoms = false;
  // Each round's descent tolerance is the previous one times this factor,
  // never below rel_tol_floor.
  double rel_tol_decay = 0.5;
  double rel_tol_floor = 1e-10;
  // Wall-clock budget checked between rounds; 0 disables it. A run cut
  // short by the clock is not reproducible, so the CLI never sets this.
  double max_seconds = 0.0;

  void validate() const {
    require_positive_lambda(lambda);
    if (init_r1 < 1 || init_r2 < 1) throw ParameterError("SolverConfig: initial dictionary sizes must be >= 1");
    if (max_outer_rounds < 1) throw ParameterError("SolverConfig: max_outer_rounds must be >= 1");
    if (!(rel_tol_decay > 0.0 && rel_tol_decay <= 1.0)) throw ParameterError("SolverConfig: rel_tol_decay in (0, 1]");
    if (!(max_seconds >= 0.0)) throw ParameterError("SolverConfig: max_seconds must be >= 0");
    descent.validate();
    cert.validate();
  }
};

struct RoundRecord {
  int round = 0;
  long iter_total = 0;  // descent sweeps so far, this round included
  double objective = 0.0;  // at the stationary point reached this round
  Index r1 = 0;
  Index r2 = 0;
  CertificateReport report;
  std::optional<double> gap;  // objective - objective_star, when known
};

using RoundCallback = std::function<void(const RoundRecord&)>;

struct RunRecord {
  std::vector<RoundRecord> rounds;
  Model final_model;
  bool certified = false;
  std::optional<double> objective_star;
};

/// Raised when escapes repeatedly fail to move; carries the partial record.
class StallError : public NumericalError {
public:
  StallError(const std::string& what, RunRecord partial) : NumericalError(what), record(std::move(partial)) {}
  RunRecord record;
};

/// Unit-norm Gaussian columns for both dictionaries and zero coefficients.
inline Model init_model(Index g, Index v, Index t, const SolverConfig& cfg) {
  if (g < 1 || v < 1 || t < 1) throw ShapeError("init_model: dimensions must be positive");
  if (cfg.init_r1 < 1 || cfg.init_r2 < 1) throw ParameterError("init_model: initial sizes must be >= 1");
  Rng rng(cfg.init_seed);
  Model m;
  m.gamma = rng.normal_matrix(g, cfg.init_r1);
  m.psi = rng.normal_matrix(v, cfg.init_r2);
  m.gamma.colwise().normalize();
  m.psi.colwise().normalize();
  m.coef = Tensor3(cfg.init_r1, cfg.init_r2, t);
  return m;
}

/// Drops atoms that cannot contribute: a gamma atom is dead when its column
/// or its whole coefficient slab C(i,:,:) is zero; likewise for psi.
inline Model prune(const Model& m) {
  m.validate();
  const Matrix fiber = detail::abs_fiber_sums(m.coef);
  std::vector<Index> keep_g, keep_p;
  for (Index i = 0; i < m.r1(); ++i)
    if (m.gamma.col(i).cwiseAbs().maxCoeff() > 0.0 && fiber.row(i).maxCoeff() > 0.0) keep_g.push_back(i);
  for (Index j = 0; j < m.r2(); ++j)
    if (m.psi.col(j).cwiseAbs().maxCoeff() > 0.0 && fiber.col(j).maxCoeff() > 0.0) keep_p.push_back(j);

  if (keep_g.empty() || keep_p.empty()) return Model::zeros(m.gamma.rows(), m.psi.rows(), m.slices());
  if (static_cast<Index>(keep_g.size()) == m.r1() && static_cast<Index>(keep_p.size()) == m.r2()) return m;

  const auto r1 = static_cast<Index>(keep_g.size());
  const auto r2 = static_cast<Index>(keep_p.size());
  Model out{Matrix(m.gamma.rows(), r1), Matrix(m.psi.rows(), r2), Tensor3(r1, r2, m.slices())};
  for (Index i = 0; i < r1; ++i) out.gamma.col(i) = m.gamma.col(keep_g[i]);
  for (Index j = 0; j < r2; ++j) out.psi.col(j) = m.psi.col(keep_p[j]);
  for (Index t = 0; t < m.slices(); ++t)
    for (Index j = 0; j < r2; ++j)
      for (Index i = 0; i < r1; ++i) out.coef(i, j, t) = m.coef(keep_g[i], keep_p[j], t);
  return out;
}

/// Alternates descent and the optimality check until certified, the round
/// or time budget runs out (certified = false) or escapes stall (StallError).
/// When objective_star is given, each round records its gap to it.
inline std::pair<Model, RunRecord> solve(const Tensor3& s, const SolverConfig& cfg,
                                         std::optional<double> objective_star = std::nullopt,
                                         const RoundCallback& on_round = {}) {
  cfg.validate();
  if (!s.all_finite()) throw NumericalError("solve: data tensor has non-finite entries");

  RunRecord rec;
  rec.objective_star = objective_star;
  Model model = init_model(s.rows(), s.cols(), s.slices(), cfg);
  double rel_tol = cfg.descent.rel_tol;
  long iter_total = 0;
  int stalls = 0;
  const auto start = std::chrono::steady_clock::now();
  const auto out_of_time = [&] {
    return cfg.max_seconds > 0.0 &&
           std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() > cfg.max_seconds;
  };

  for (int round = 1; round <= cfg.max_outer_rounds; ++round) {
    DescentConfig dc = cfg.descent;
    dc.rel_tol = rel_tol;
    DescentTrace trace;
    model = descend(s, model, cfg.lambda, dc, &trace);
    iter_total += trace.iterations;
    if (cfg.prune_dead_atoms) model = prune(model);

    RoundRecord rr;
    rr.round = round;
    rr.iter_total = iter_total;
    rr.objective = objective(s, model, cfg.lambda);
    rr.r1 = model.r1();
    rr.r2 = model.r2();
    rr.report = check(s, model, cfg.lambda, cfg.cert);
    if (objective_star) rr.gap = rr.objective - *objective_star;
    const CertificateReport& rep = rr.report;
    rec.rounds.push_back(rr);
    if (on_round) on_round(rr);
    rel_tol = std::max(rel_tol * cfg.rel_tol_decay, cfg.rel_tol_floor);

    if (rep.optimal()) {
      rec.certified = true;
      break;
    }
    if (rep.verdict == Verdict::NotStationary) {
      if (out_of_time()) break;
      continue;
    }

    stalls = rep.stall ? stalls + 1 : 0;
    if (stalls >= 2) {
      rec.final_model = model;
      throw StallError("solve: two consecutive escapes with zero step at round " + std::to_string(round) +
                           " (c = " + csv::real(rep.c) + ")",
                       std::move(rec));
    }
    if (round == cfg.max_outer_rounds || out_of_time()) break;
    model = apply_escape(model, rep);
  }

  rec.final_model = model;
  return {model, rec};
}

inline std::string run_record_csv_header(bool with_gap) {
  return std::string("round,iter_total,objective,r1,r2,g,p,c,verdict") + (with_gap ? ",gap" : "");
}

inline std::string run_record_csv_row(const RoundRecord& r, bool with_gap) {
  std::string row = csv::join({std::to_string(r.round), std::to_string(r.iter_total), csv::real(r.objective),
                               std::to_string(r.r1), std::to_string(r.r2), csv::real(r.report.g),
                               csv::real(r.report.p), csv::real(r.report.c), to_string(r.report.verdict)});
  if (with_gap) row += "," + (r.gap ? csv::real(*r.gap) : std::string("nan"));
  return row;
}

}  // namespace sepdict
