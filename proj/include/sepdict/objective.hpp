#pragma once

// The separable dictionary learning objective
//
//   f(Gamma, Psi, C) = 1/2 sum_t ||Gamma C_t Psi^T - S_t||_F^2
//                      + lambda sum_{i,j} ||Gamma_i||_2 ||Psi_j||_2 ||C_{i,j,:}||_1
//
// together with its partial gradients, the two proximal operators used by
// the block updates and the Lipschitz step constants.

#include <algorithm>
#include <cmath>
#include <string>

#include "sepdict/errors.hpp"
#include "sepdict/tensor.hpp"

namespace sepdict {

/// Factorization state: gamma is G x r1, psi is V x r2, coef is r1 x r2 x T.
struct Model {
  Matrix gamma;
  Matrix psi;
  Tensor3 coef;

  Index r1() const { return gamma.cols(); }
  Index r2() const { return psi.cols(); }
  Index slices() const { return coef.slices(); }

  /// One zero atom per mode, zero coefficients.
  static Model zeros(Index g, Index v, Index t, Index r1 = 1, Index r2 = 1) {
    return Model{Matrix::Zero(g, r1), Matrix::Zero(v, r2), Tensor3(r1, r2, t)};
  }

  void validate() const {
    require_shape(gamma.cols() >= 1 && psi.cols() >= 1, "Model: each dictionary needs at least one atom");
    require_shape(coef.rows() == gamma.cols() && coef.cols() == psi.cols(),
                  "Model: coefficient tensor " + coef.dims() + " does not match dictionary sizes " +
                      std::to_string(gamma.cols()) + ", " + std::to_string(psi.cols()));
  }

  void validate_against(const Tensor3& s) const {
    validate();
    require_shape(gamma.rows() == s.rows() && psi.rows() == s.cols() && coef.slices() == s.slices(),
                  "Model: data " + s.dims() + " incompatible with dictionaries " +
                      std::to_string(gamma.rows()) + "x" + std::to_string(gamma.cols()) + ", " +
                      std::to_string(psi.rows()) + "x" + std::to_string(psi.cols()) + " and " +
                      std::to_string(coef.slices()) + " coefficient slices");
  }

  bool all_finite() const { return gamma.allFinite() && psi.allFinite() && coef.all_finite(); }

  Tensor3 reconstruct() const { return mode_product(coef, gamma, psi); }
};

inline void require_positive_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw ParameterError("lambda must be positive and finite, got " + std::to_string(lambda));
}

namespace detail {

/// A(i, j) = sum_t |c_{i,j,t}|.
inline Matrix abs_fiber_sums(const Tensor3& c) {
  Matrix a = Matrix::Zero(c.rows(), c.cols());
  for (Index t = 0; t < c.slices(); ++t) a += c.slice(t).cwiseAbs();
  return a;
}

inline Vector column_norms(const Matrix& m) { return m.colwise().norm().transpose(); }

}  // namespace detail

/// 1/2 sum_t ||Gamma C_t Psi^T - S_t||_F^2.
inline double loss(const Tensor3& s, const Model& m) {
  m.validate_against(s);
  double acc = 0.0;
  Matrix gc(m.gamma.rows(), m.r2());
  Matrix r(s.rows(), s.cols());
  for (Index t = 0; t < s.slices(); ++t) {
    gc.noalias() = m.gamma * m.coef.slice(t);
    r.noalias() = gc * m.psi.transpose();
    r -= s.slice(t);
    acc += r.squaredNorm();
  }
  return 0.5 * acc;
}

/// sum_{i,j} ||Gamma_i|| ||Psi_j|| sum_t |c_{i,j,t}|.
inline double regularizer(const Model& m) {
  m.validate();
  const Vector gn = detail::column_norms(m.gamma);
  const Vector pn = detail::column_norms(m.psi);
  return gn.dot(detail::abs_fiber_sums(m.coef) * pn);
}

inline double objective(const Tensor3& s, const Model& m, double lambda) {
  require_positive_lambda(lambda);
  return loss(s, m) + lambda * regularizer(m);
}

/// Residual tensor Gamma C_t Psi^T - S_t.
inline Tensor3 residual(const Tensor3& s, const Model& m) {
  m.validate_against(s);
  Tensor3 r = m.reconstruct();
  r -= s;
  return r;
}

inline Matrix grad_gamma(const Tensor3& s, const Model& m) {
  const Tensor3 r = residual(s, m);
  Matrix g = Matrix::Zero(m.gamma.rows(), m.r1());
  for (Index t = 0; t < s.slices(); ++t) g.noalias() += r.slice(t) * m.psi * m.coef.slice(t).transpose();
  return g;
}

inline Matrix grad_psi(const Tensor3& s, const Model& m) {
  const Tensor3 r = residual(s, m);
  Matrix g = Matrix::Zero(m.psi.rows(), m.r2());
  for (Index t = 0; t < s.slices(); ++t) g.noalias() += r.slice(t).transpose() * m.gamma * m.coef.slice(t);
  return g;
}

inline Tensor3 grad_coef(const Tensor3& s, const Model& m) {
  const Tensor3 r = residual(s, m);
  Tensor3 g(m.r1(), m.r2(), s.slices());
  for (Index t = 0; t < s.slices(); ++t) g.slice(t).noalias() = m.gamma.transpose() * r.slice(t) * m.psi;
  return g;
}

/// Block soft-thresholding: (1 - tau/||x||) x when ||x|| >= tau, else 0.
inline Vector prox_l2(const Vector& x, double tau) {
  if (!(tau >= 0.0)) throw ParameterError("prox_l2: tau must be non-negative");
  const double n = x.norm();
  if (n == 0.0 || n <= tau) return Vector::Zero(x.size());
  return (1.0 - tau / n) * x;
}

/// Scalar soft-thresholding.
inline double prox_abs(double a, double tau) {
  if (!(tau >= 0.0)) throw ParameterError("prox_abs: tau must be non-negative");
  return std::max(0.0, a - tau) - std::max(0.0, -a - tau);
}

/// Below this value a Lipschitz constant is treated as zero and the
/// corresponding block update is skipped.
inline constexpr double kLipschitzFloor = 1e-12;

struct StepConstants {
  double l_gamma = 0.0;
  double l_psi = 0.0;
  double l_c = 0.0;
  Vector xi;      // per gamma atom, lambda * sum_{t,j} |c_ijt| ||Psi_j|| / L_gamma
  Matrix kappa;   // per (i,j), lambda ||Gamma_i|| ||Psi_j|| / L_c
  Vector pi;      // per psi atom, lambda * sum_{t,i} |c_ijt| ||Gamma_i|| / L_psi

  bool gamma_active() const { return l_gamma >= kLipschitzFloor; }
  bool coef_active() const { return l_c >= kLipschitzFloor; }
  bool psi_active() const { return l_psi >= kLipschitzFloor; }
};

namespace detail {

inline double safe_ratio(double num, double l) { return l >= kLipschitzFloor ? num / l : 0.0; }

/// ||sum_t C_t G C_t^T||_F for an r2 x r2 Gram matrix G.
inline double lipschitz_gamma(const Tensor3& c, const Matrix& psi_gram) {
  Matrix acc = Matrix::Zero(c.rows(), c.rows());
  for (Index t = 0; t < c.slices(); ++t) acc.noalias() += c.slice(t) * psi_gram * c.slice(t).transpose();
  return acc.norm();
}

/// ||sum_t C_t^T G C_t||_F for an r1 x r1 Gram matrix G.
inline double lipschitz_psi(const Tensor3& c, const Matrix& gamma_gram) {
  Matrix acc = Matrix::Zero(c.cols(), c.cols());
  for (Index t = 0; t < c.slices(); ++t) acc.noalias() += c.slice(t).transpose() * gamma_gram * c.slice(t);
  return acc.norm();
}

}  // namespace detail

/// All step constants evaluated at a single model.
inline StepConstants step_constants(const Model& m, double lambda) {
  require_positive_lambda(lambda);
  m.validate();
  const Matrix gg = m.gamma.transpose() * m.gamma;
  const Matrix pg = m.psi.transpose() * m.psi;
  const Vector gn = detail::column_norms(m.gamma);
  const Vector pn = detail::column_norms(m.psi);
  const Matrix a = detail::abs_fiber_sums(m.coef);

  StepConstants k;
  k.l_gamma = detail::lipschitz_gamma(m.coef, pg);
  k.l_psi = detail::lipschitz_psi(m.coef, gg);
  k.l_c = gg.norm() * pg.norm();

  k.xi = (lambda * (a * pn)).unaryExpr([&](double v) { return detail::safe_ratio(v, k.l_gamma); });
  k.pi = (lambda * (a.transpose() * gn)).unaryExpr([&](double v) { return detail::safe_ratio(v, k.l_psi); });
  k.kappa = (lambda * gn * pn.transpose()).unaryExpr([&](double v) { return detail::safe_ratio(v, k.l_c); });
  return k;
}

}  // namespace sepdict
