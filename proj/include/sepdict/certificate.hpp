#pragma once

// Global optimality check for a stationary point and the atom-appending
// escape step used when the check fails.
//
// With W_t = (S_t - Gamma C_t Psi^T) / lambda, a point whose coefficients
// are stationary is a global minimum iff max_t sigma_max(W_t) <= 1. Two
// cheaper span-restricted ratios are evaluated first:
//   g_t = sigma_max(Gamma^T W_t) / sigma_max(Gamma)   (new psi atom only)
//   p_t = sigma_max(W_t Psi)     / sigma_max(Psi)     (new gamma atom only)
// Both are bounded by c_t = sigma_max(W_t).

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "sepdict/csv.hpp"
#include "sepdict/errors.hpp"
#include "sepdict/linalg.hpp"
#include "sepdict/objective.hpp"
#include "sepdict/parallel.hpp"

namespace sepdict {

enum class Verdict { GlobalOptimal, AppendPsi, AppendGamma, AppendBoth, NotStationary };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::GlobalOptimal: return "GlobalOptimal";
    case Verdict::AppendPsi: return "AppendPsi";
    case Verdict::AppendGamma: return "AppendGamma";
    case Verdict::AppendBoth: return "AppendBoth";
    case Verdict::NotStationary: return "NotStationary";
  }
  return "?";
}

struct CertConfig {
  double cert_tol = 1e-6;          // slack on the "<= 1" tests
  double stationarity_tol = 1e-6;  // slack on the first-order condition
  SigmaMethod sigma_method = SigmaMethod::PowerIteration;
  int power_iters = 200;
  double power_tol = 1e-10;

  void validate() const {
    if (!(cert_tol >= 0.0)) throw ParameterError("CertConfig: cert_tol must be >= 0");
    if (!(stationarity_tol >= 0.0)) throw ParameterError("CertConfig: stationarity_tol must be >= 0");
    if (power_iters < 1) throw ParameterError("CertConfig: power_iters must be >= 1");
  }
};

/// Atoms proposed by a failed check. For AppendPsi, alpha holds the span
/// coefficients of the implied gamma direction (gamma = Gamma alpha); for
/// AppendGamma, beta does the same for psi.
struct EscapeProposal {
  Vector gamma_new;  // unit, length G
  Vector psi_new;    // unit, length V
  Vector alpha;      // length r1, AppendPsi only
  Vector beta;       // length r2, AppendGamma only
  Matrix direction;  // E, the rank-one change of slice t_star per unit tau
  double penalty_weight = 1.0;  // regularizer cost per unit |tau|, over lambda
};

struct CertificateReport {
  double g = 0.0;
  double p = 0.0;
  double c = 0.0;
  Index t_g = 0;
  Index t_p = 0;
  Index t_c = 0;
  Index t_star = 0;
  double stationarity = 0.0;  // relative violation of the first-order condition
  Verdict verdict = Verdict::GlobalOptimal;
  std::optional<EscapeProposal> proposal;
  double tau_star = 0.0;
  bool stall = false;          // escape with tau_star == 0 leaves f unchanged
  bool span_fallback = false;  // span-restricted step was zero, escaped with both atoms

  bool optimal() const { return verdict == Verdict::GlobalOptimal; }
};

/// W_t = (S_t - Gamma C_t Psi^T) / lambda.
inline Matrix dual_slice(const Tensor3& s, const Model& m, double lambda, Index t) {
  require_positive_lambda(lambda);
  m.validate_against(s);
  const Matrix x = m.gamma * m.coef.slice(t) * m.psi.transpose();
  return (s.slice(t) - x) / lambda;
}

/// Exact minimizer over tau of 1/2 ||S - X - tau E||_F^2 + lambda |tau|.
inline double global_step_tau(const Matrix& s_slice, const Matrix& x_slice, const Matrix& e, double lambda) {
  require_shape(s_slice.rows() == x_slice.rows() && s_slice.cols() == x_slice.cols() &&
                    e.rows() == s_slice.rows() && e.cols() == s_slice.cols(),
                "global_step_tau: slice shapes differ");
  if (!(lambda >= 0.0)) throw ParameterError("global_step_tau: lambda must be >= 0");
  const double e2 = e.squaredNorm();
  if (!(e2 > 0.0)) throw MisuseError("global_step_tau: degenerate zero direction");
  const double a = (s_slice - x_slice).cwiseProduct(e).sum();
  return prox_abs(a, lambda) / e2;
}

namespace detail {

// First index attaining the maximum.
inline Index argmax_first(const std::vector<double>& v) {
  Index best = 0;
  for (Index i = 1; i < static_cast<Index>(v.size()); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

inline double weighted_l1(const Vector& coeffs, const Vector& column_norms) {
  return coeffs.cwiseAbs().dot(column_norms);
}

}  // namespace detail

inline CertificateReport check(const Tensor3& s, const Model& m, double lambda, const CertConfig& cfg = {}) {
  require_positive_lambda(lambda);
  cfg.validate();
  m.validate_against(s);
  const Index nt = s.slices();
  auto top = [&](const Matrix& a) {
    return top_singular_triplet(a, cfg.sigma_method, cfg.power_iters, cfg.power_tol);
  };

  const double sg = top(m.gamma).sigma;
  const double sp = top(m.psi).sigma;

  std::vector<Matrix> x(nt), w(nt);
  std::vector<double> gt(nt, 0.0), pt(nt, 0.0), ct(nt, 0.0);
  std::vector<Matrix> pair_lhs(nt);
  parallel_for(nt, [&](Index t) {
    x[t] = m.gamma * m.coef.slice(t) * m.psi.transpose();
    w[t] = (s.slice(t) - x[t]) / lambda;
    ct[t] = top(w[t]).sigma;
    if (sg > 0.0) gt[t] = top(m.gamma.transpose() * w[t]).sigma / sg;
    if (sp > 0.0) pt[t] = top(w[t] * m.psi).sigma / sp;
    pair_lhs[t] = m.coef.slice(t).cwiseProduct(m.gamma.transpose() * w[t] * m.psi);
  });

  CertificateReport rep;
  rep.t_g = detail::argmax_first(gt);
  rep.t_p = detail::argmax_first(pt);
  rep.t_c = detail::argmax_first(ct);
  rep.g = gt[rep.t_g];
  rep.p = pt[rep.t_p];
  rep.c = ct[rep.t_c];

  // First-order condition per atom pair:
  //   sum_t c_ijt Gamma_i^T W_t Psi_j == ||Gamma_i|| ||Psi_j|| ||C_ij||_1,
  // aggregated as sum |lhs - rhs| / sum rhs.
  {
    Matrix lhs = Matrix::Zero(m.r1(), m.r2());
    for (Index t = 0; t < nt; ++t) lhs += pair_lhs[t];
    const Vector gn = detail::column_norms(m.gamma);
    const Vector pn = detail::column_norms(m.psi);
    const Matrix rhs = (gn * pn.transpose()).cwiseProduct(detail::abs_fiber_sums(m.coef));
    const double total = rhs.sum();
    rep.stationarity = total > 0.0 ? (lhs - rhs).cwiseAbs().sum() / total : 0.0;
  }

  const double limit = 1.0 + cfg.cert_tol;
  if (rep.g > limit && rep.g > rep.p) {
    rep.verdict = Verdict::AppendPsi;
  } else if (rep.p > limit && rep.p > rep.g) {
    rep.verdict = Verdict::AppendGamma;
  } else if (rep.c > limit) {
    rep.verdict = Verdict::AppendBoth;
  } else {
    rep.verdict = rep.stationarity > cfg.stationarity_tol ? Verdict::NotStationary : Verdict::GlobalOptimal;
    return rep;
  }

  const Vector gn = detail::column_norms(m.gamma);
  const Vector pn = detail::column_norms(m.psi);

  if (rep.verdict == Verdict::AppendPsi) {
    const Index t = rep.t_g;
    const SingularTriplet tr = top(m.gamma.transpose() * w[t]);
    EscapeProposal prop;
    prop.alpha = tr.u;
    prop.psi_new = tr.v;
    const Vector g_dir = m.gamma * tr.u;
    prop.gamma_new = g_dir.normalized();
    prop.direction = g_dir * tr.v.transpose();
    prop.penalty_weight = detail::weighted_l1(tr.u, gn);
    rep.t_star = t;
    rep.tau_star = global_step_tau(s.slice(t), x[t], prop.direction, lambda * prop.penalty_weight);
    rep.proposal = std::move(prop);
  } else if (rep.verdict == Verdict::AppendGamma) {
    const Index t = rep.t_p;
    const SingularTriplet tr = top(w[t] * m.psi);
    EscapeProposal prop;
    prop.gamma_new = tr.u;
    prop.beta = tr.v;
    const Vector p_dir = m.psi * tr.v;
    prop.psi_new = p_dir.normalized();
    prop.direction = tr.u * p_dir.transpose();
    prop.penalty_weight = detail::weighted_l1(tr.v, pn);
    rep.t_star = t;
    rep.tau_star = global_step_tau(s.slice(t), x[t], prop.direction, lambda * prop.penalty_weight);
    rep.proposal = std::move(prop);
  }

  // The span-restricted atoms carry a regularizer weight that can exceed
  // sigma_max of the dictionary, which may soft-threshold the step to zero.
  // Since g, p <= c, the unrestricted escape is then strictly descending.
  if (rep.verdict != Verdict::AppendBoth && rep.tau_star == 0.0 && rep.c > limit) {
    rep.span_fallback = true;
    rep.verdict = Verdict::AppendBoth;
  }

  if (rep.verdict == Verdict::AppendBoth) {
    const Index t = rep.t_c;
    const SingularTriplet tr = top(w[t]);
    EscapeProposal prop;
    prop.gamma_new = tr.u;
    prop.psi_new = tr.v;
    prop.direction = tr.u * tr.v.transpose();
    prop.penalty_weight = 1.0;
    rep.t_star = t;
    rep.tau_star = global_step_tau(s.slice(t), x[t], prop.direction, lambda);
    rep.proposal = std::move(prop);
  }

  rep.stall = rep.tau_star == 0.0;
  return rep;
}

/// Appends the proposed atoms with coefficient tau_star in slice t_star.
inline Model apply_escape(const Model& m, const CertificateReport& report) {
  if (report.verdict == Verdict::GlobalOptimal || report.verdict == Verdict::NotStationary || !report.proposal)
    throw MisuseError("apply_escape: report does not propose an escape (verdict " + to_string(report.verdict) + ")");
  m.validate();
  const EscapeProposal& prop = *report.proposal;
  const Index r1 = m.r1();
  const Index r2 = m.r2();
  const Index nt = m.slices();
  const bool grow_gamma = report.verdict != Verdict::AppendPsi;
  const bool grow_psi = report.verdict != Verdict::AppendGamma;

  Model out;
  out.gamma = m.gamma;
  out.psi = m.psi;
  if (grow_gamma) {
    out.gamma.conservativeResize(Eigen::NoChange, r1 + 1);
    out.gamma.col(r1) = prop.gamma_new;
  }
  if (grow_psi) {
    out.psi.conservativeResize(Eigen::NoChange, r2 + 1);
    out.psi.col(r2) = prop.psi_new;
  }
  out.coef = Tensor3(out.gamma.cols(), out.psi.cols(), nt);
  for (Index t = 0; t < nt; ++t) out.coef.slice(t).topLeftCorner(r1, r2) = m.coef.slice(t);

  auto cs = out.coef.slice(report.t_star);
  switch (report.verdict) {
    case Verdict::AppendBoth: cs(r1, r2) = report.tau_star; break;
    case Verdict::AppendPsi: cs.col(r2) = report.tau_star * prop.alpha; break;
    case Verdict::AppendGamma: cs.row(r1) = report.tau_star * prop.beta.transpose(); break;
    default: break;
  }
  return out;
}

/// One CSV row: iteration,g,p,c,verdict,t_star,tau_star.
inline std::string certificate_csv_header() { return "iteration,g,p,c,verdict,t_star,tau_star"; }

inline std::string certificate_csv_row(long iteration, const CertificateReport& r) {
  return csv::join({std::to_string(iteration), csv::real(r.g), csv::real(r.p), csv::real(r.c), to_string(r.verdict),
                    std::to_string(r.t_star), csv::real(r.tau_star)});
}

}  // namespace sepdict
