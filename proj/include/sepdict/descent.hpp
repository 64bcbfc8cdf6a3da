#pragma once

// Block proximal gradient descent to a stationary point, with optional
// Nesterov extrapolation and restart.
//
// One sweep updates Gamma, then C, then Psi, each block taking a gradient
// step of length 1/L on the smooth loss followed by the proximal map of its
// share of the regularizer. Step constants are evaluated with the freshest
// values of the other blocks. The smooth-part gradients are formed from Gram
// matrices (Gamma^T Gamma, Psi^T Psi) and the data projections S_t Psi and
// S_t^T Gamma, which avoids materializing the residual tensor.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "sepdict/errors.hpp"
#include "sepdict/objective.hpp"
#include "sepdict/parallel.hpp"

namespace sepdict {

struct DescentConfig {
  int max_iters = 20000;
  double rel_tol = 1e-8;  // on |f_k - f_{k-1}| / max(1, |f_k|)
  bool nesterov = false;
  bool restart_on_increase = true;
  bool update_gamma = true;
  bool update_psi = true;

  void validate() const {
    if (max_iters < 1) throw ParameterError("DescentConfig: max_iters must be >= 1");
    if (!(rel_tol > 0.0)) throw ParameterError("DescentConfig: rel_tol must be positive");
  }
};

struct DescentTrace {
  std::vector<double> objective;  // objective at the accepted iterate after each sweep
  int iterations = 0;
  int restarts = 0;
  bool converged = false;
};

/// Extrapolation state of the accelerated scheme.
struct NesterovState {
  double s = 1.0;
  Model lookahead;          // point the next sweep starts from
  StepConstants constants;  // step constants of the last sweep
};

/// Lipschitz constants actually used by one sweep, in update order.
struct SweepConstants {
  double l_gamma = 0.0;
  double l_c = 0.0;
  double l_psi = 0.0;
};

namespace detail {

inline double momentum_clamp(double mu, double l_prev, double l_now) {
  if (l_now < kLipschitzFloor) return 0.0;
  return std::min(mu, std::sqrt(l_prev / l_now));
}

inline double relative_change(double f_new, double f_old) {
  return std::abs(f_new - f_old) / std::max(1.0, std::abs(f_new));
}

struct SweepResult {
  Model model;
  SweepConstants constants;
  double objective = 0.0;
};

/// Holds the data tensor and per-slice projection buffers reused across sweeps.
class DescentEngine {
public:
  DescentEngine(const Tensor3& s, double lambda, bool update_gamma = true, bool update_psi = true)
      : s_(s), lambda_(lambda), update_gamma_(update_gamma), update_psi_(update_psi),
        half_sq_norm_(0.5 * s.squared_norm()), s_psi_(s.slices()), st_gamma_(s.slices()),
        slice_terms_(s.slices()) {
    require_positive_lambda(lambda);
  }

  /// Objective evaluated through the Gram expansion of the loss.
  double objective(const Model& m) {
    m.validate_against(s_);
    project_gamma(m.gamma);
    const Matrix gg = m.gamma.transpose() * m.gamma;
    return gram_objective(m, gg);
  }

  SweepResult sweep(const Model& base) {
    base.validate_against(s_);
    SweepResult out{base, {}, 0.0};
    Matrix& gamma = out.model.gamma;
    Matrix& psi = out.model.psi;
    Tensor3& coef = out.model.coef;
    const Index r1 = gamma.cols();
    const Index r2 = psi.cols();
    const Index nt = s_.slices();

    Matrix psi_gram = psi.transpose() * psi;
    Vector psi_norms = detail::column_norms(psi);
    project_psi(psi);

    if (update_gamma_) {
      Matrix m = Matrix::Zero(r1, r1);
      Matrix b = Matrix::Zero(gamma.rows(), r1);
      for (Index t = 0; t < nt; ++t) {
        const auto c = coef.slice(t);
        m.noalias() += c * psi_gram * c.transpose();
        b.noalias() += s_psi_[t] * c.transpose();
      }
      const double l = m.norm();
      out.constants.l_gamma = l;
      if (l >= kLipschitzFloor) {
        const Matrix step = gamma - (gamma * m - b) / l;
        const Vector weights = detail::abs_fiber_sums(coef) * psi_norms;
        for (Index i = 0; i < r1; ++i) gamma.col(i) = prox_l2(step.col(i), lambda_ * weights(i) / l);
      }
    }

    const Matrix gamma_gram = gamma.transpose() * gamma;
    const Vector gamma_norms = detail::column_norms(gamma);
    {
      const double l = gamma_gram.norm() * psi_gram.norm();
      out.constants.l_c = l;
      if (l >= kLipschitzFloor) {
        const Matrix kappa = (lambda_ / l) * gamma_norms * psi_norms.transpose();
        parallel_for(nt, [&](Index t) {
          auto c = coef.slice(t);
          const Matrix grad = gamma_gram * c * psi_gram - gamma.transpose() * s_psi_[t];
          const Matrix step = c - grad / l;
          for (Index j = 0; j < r2; ++j)
            for (Index i = 0; i < r1; ++i) c(i, j) = prox_abs(step(i, j), kappa(i, j));
        });
      }
    }

    project_gamma(gamma);
    if (update_psi_) {
      Matrix n = Matrix::Zero(r2, r2);
      Matrix b = Matrix::Zero(psi.rows(), r2);
      for (Index t = 0; t < nt; ++t) {
        const auto c = coef.slice(t);
        n.noalias() += c.transpose() * gamma_gram * c;
        b.noalias() += st_gamma_[t] * c;
      }
      const double l = n.norm();
      out.constants.l_psi = l;
      if (l >= kLipschitzFloor) {
        const Matrix step = psi - (psi * n - b) / l;
        const Vector weights = detail::abs_fiber_sums(coef).transpose() * gamma_norms;
        for (Index j = 0; j < r2; ++j) psi.col(j) = prox_l2(step.col(j), lambda_ * weights(j) / l);
      }
    }

    out.objective = gram_objective(out.model, gamma_gram);
    return out;
  }

private:
  void project_psi(const Matrix& psi) {
    parallel_for(s_.slices(), [&](Index t) { s_psi_[t].noalias() = s_.slice(t) * psi; });
  }
  void project_gamma(const Matrix& gamma) {
    parallel_for(s_.slices(), [&](Index t) { st_gamma_[t].noalias() = s_.slice(t).transpose() * gamma; });
  }

  // Requires st_gamma_ to hold S_t^T gamma for the model's gamma.
  double gram_objective(const Model& m, const Matrix& gamma_gram) {
    const Matrix psi_gram = m.psi.transpose() * m.psi;
    parallel_for(s_.slices(), [&](Index t) {
      const auto c = m.coef.slice(t);
      const double cross = c.cwiseProduct(st_gamma_[t].transpose() * m.psi).sum();
      const double quad = c.cwiseProduct(gamma_gram * c * psi_gram).sum();
      slice_terms_[t] = 0.5 * quad - cross;
    });
    double loss = half_sq_norm_;
    for (double v : slice_terms_) loss += v;
    return loss + lambda_ * regularizer(m);
  }

  const Tensor3& s_;
  double lambda_;
  bool update_gamma_;
  bool update_psi_;
  double half_sq_norm_;
  std::vector<Matrix> s_psi_;
  std::vector<Matrix> st_gamma_;
  std::vector<double> slice_terms_;
};

}  // namespace detail

/// One step of the accelerated scheme's extrapolation logic. When the
/// objective decreased, the momentum sequence advances and the lookahead is
/// extrapolated from (previous -> current) with per-block clamped weights;
/// otherwise the lookahead restarts at the previous iterate.
inline NesterovState nesterov_step(const NesterovState& state, const Model& current, const Model& previous,
                                   double f_now, double f_prev, const StepConstants& lc,
                                   const StepConstants& lc_prev) {
  NesterovState next;
  next.constants = lc;
  if (f_now < f_prev) {
    require_shape(current.gamma.cols() == previous.gamma.cols() && current.psi.cols() == previous.psi.cols() &&
                      current.coef.same_shape(previous.coef),
                  "nesterov_step: current and previous iterates differ in shape");
    next.s = (1.0 + std::sqrt(1.0 + 4.0 * state.s * state.s)) / 2.0;
    const double mu = (state.s - 1.0) / 2.0;
    const double mu_gamma = detail::momentum_clamp(mu, lc_prev.l_gamma, lc.l_gamma);
    const double mu_c = detail::momentum_clamp(mu, lc_prev.l_c, lc.l_c);
    const double mu_psi = detail::momentum_clamp(mu, lc_prev.l_psi, lc.l_psi);
    next.lookahead.gamma = current.gamma + mu_gamma * (current.gamma - previous.gamma);
    next.lookahead.psi = current.psi + mu_psi * (current.psi - previous.psi);
    next.lookahead.coef = current.coef;
    next.lookahead.coef.flat() += mu_c * (current.coef.flat() - previous.coef.flat());
  } else {
    next.s = state.s;
    next.lookahead = previous;
  }
  return next;
}

namespace detail {

inline StepConstants to_step_constants(const SweepConstants& c) {
  StepConstants k;
  k.l_gamma = c.l_gamma;
  k.l_c = c.l_c;
  k.l_psi = c.l_psi;
  return k;
}

}  // namespace detail

/// Runs sweeps until the relative objective change of one accepted sweep
/// drops below cfg.rel_tol or cfg.max_iters sweeps have been made.
inline Model descend(const Tensor3& s, const Model& m0, double lambda, const DescentConfig& cfg,
                     DescentTrace* trace_out = nullptr) {
  require_positive_lambda(lambda);
  cfg.validate();
  m0.validate_against(s);

  detail::DescentEngine engine(s, lambda, cfg.update_gamma, cfg.update_psi);
  Model current = m0;
  double f_cur = engine.objective(current);
  if (!std::isfinite(f_cur)) throw NumericalError("descend: non-finite objective at the initial model");

  DescentTrace trace;
  NesterovState state;
  state.lookahead = current;
  bool have_prev_constants = false;
  bool base_is_current = true;

  for (int k = 0; k < cfg.max_iters; ++k) {
    const Model& base = cfg.nesterov ? state.lookahead : current;
    detail::SweepResult r = engine.sweep(base);
    if (!std::isfinite(r.objective) || !r.model.all_finite())
      throw NumericalError("descend: non-finite objective at iteration " + std::to_string(k));

    bool accepted = true;
    bool converged = false;
    if (cfg.nesterov) {
      const StepConstants lc = detail::to_step_constants(r.constants);
      const StepConstants lc_prev = have_prev_constants ? state.constants : lc;
      const double f_ref = cfg.restart_on_increase ? f_cur : std::numeric_limits<double>::infinity();
      state = nesterov_step(state, r.model, current, r.objective, f_ref, lc, lc_prev);
      have_prev_constants = true;
      accepted = r.objective < f_ref;
      if (accepted) {
        converged = detail::relative_change(r.objective, f_cur) < cfg.rel_tol;
        current = std::move(r.model);
        f_cur = r.objective;
        base_is_current = false;
      } else {
        ++trace.restarts;
        // A plain step from the current iterate failed to decrease f.
        converged = base_is_current;
        base_is_current = true;
      }
    } else {
      converged = detail::relative_change(r.objective, f_cur) < cfg.rel_tol;
      current = std::move(r.model);
      f_cur = r.objective;
    }

    trace.objective.push_back(f_cur);
    trace.iterations = k + 1;
    if (converged) {
      trace.converged = true;
      break;
    }
  }

  if (trace_out) *trace_out = std::move(trace);
  return current;
}

}  // namespace sepdict
