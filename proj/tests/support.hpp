#pragma once

// Shared fixtures: seeded random instances and naive reference formulas
// written with explicit index loops.

#include <cmath>
#include <cstdint>

#include "sepdict/sepdict.hpp"

namespace sepdict::fixtures {

inline Model random_model(Rng& rng, Index g, Index v, Index t, Index r1, Index r2) {
  return Model{rng.normal_matrix(g, r1), rng.normal_matrix(v, r2), rng.normal_tensor(r1, r2, t)};
}

inline Index random_dim(Rng& rng, Index lo, Index hi) {
  return lo + static_cast<Index>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

/// sum_{i,j} ||gamma_i|| ||psi_j|| |c_ijt| with plain loops.
inline double naive_regularizer(const Model& m) {
  double acc = 0.0;
  for (Index t = 0; t < m.slices(); ++t)
    for (Index j = 0; j < m.r2(); ++j)
      for (Index i = 0; i < m.r1(); ++i) acc += m.gamma.col(i).norm() * m.psi.col(j).norm() * std::abs(m.coef(i, j, t));
  return acc;
}

/// X(a, b, t) = sum_{i,j} gamma(a, i) c(i, j, t) psi(b, j).
inline Tensor3 naive_reconstruct(const Model& m) {
  Tensor3 x(m.gamma.rows(), m.psi.rows(), m.slices());
  for (Index t = 0; t < m.slices(); ++t)
    for (Index b = 0; b < m.psi.rows(); ++b)
      for (Index a = 0; a < m.gamma.rows(); ++a) {
        double acc = 0.0;
        for (Index j = 0; j < m.r2(); ++j)
          for (Index i = 0; i < m.r1(); ++i) acc += m.gamma(a, i) * m.coef(i, j, t) * m.psi(b, j);
        x(a, b, t) = acc;
      }
  return x;
}

inline double naive_objective(const Tensor3& s, const Model& m, double lambda) {
  const Tensor3 x = naive_reconstruct(m);
  double loss = 0.0;
  for (Index k = 0; k < s.size(); ++k) loss += 0.5 * (x.data()[k] - s.data()[k]) * (x.data()[k] - s.data()[k]);
  return loss + lambda * naive_regularizer(m);
}

inline double max_singular_value(const Tensor3& s) {
  double best = 0.0;
  for (Index t = 0; t < s.slices(); ++t) best = std::max(best, sigma_max(s.slice(t), SigmaMethod::FullDecomposition));
  return best;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace sepdict::fixtures
