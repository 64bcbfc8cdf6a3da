#pragma once

// Exact global optimum of the squared-loss problem. The tensor regularizer
// induced by ||gamma|| ||psi|| ||c||_1 equals the sum of slice nuclear norms,
// so the convex problem separates over t and each optimal slice is the
// singular value shrinkage D_lambda(S_t). An optimal factorization is
// assembled by concatenating the slice SVD factors.

#include <Eigen/SVD>

#include <string>
#include <vector>

#include "sepdict/csv.hpp"
#include "sepdict/objective.hpp"
#include "sepdict/parallel.hpp"

namespace sepdict {

/// Shrunk singular values at or below this fraction of the slice's largest
/// singular value count as zero for rank and compaction purposes.
inline constexpr double kRankThreshold = 1e-10;

struct OracleSolution {
  std::vector<Matrix> shrunk;        // D_lambda(S_t)
  std::vector<double> slice_objective;
  std::vector<Index> ranks;
  double objective_star = 0.0;
  Index r_tilde = 0;
};

/// U diag([sigma_i - lambda]_+) V^T.
inline Matrix sv_shrink(const Matrix& y, double lambda) {
  if (!(lambda >= 0.0)) throw ParameterError("sv_shrink: lambda must be >= 0");
  Eigen::JacobiSVD<Matrix> svd(y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector s = (svd.singularValues().array() - lambda).cwiseMax(0.0).matrix();
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

inline double nuclear_norm(const Matrix& y) {
  Eigen::JacobiSVD<Matrix> svd(y);
  return svd.singularValues().sum();
}

namespace detail {

struct SliceSolution {
  Matrix u, v;
  Vector shrunk_sigma;
  Index rank = 0;
  double objective = 0.0;
};

inline SliceSolution solve_slice(const Matrix& st, double lambda, bool full_factors) {
  const unsigned opts = full_factors ? (Eigen::ComputeFullU | Eigen::ComputeFullV)
                                     : (Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::JacobiSVD<Matrix> svd(st, opts);
  const Vector& sigma = svd.singularValues();
  SliceSolution out;
  out.u = svd.matrixU();
  out.v = svd.matrixV();
  out.shrunk_sigma = (sigma.array() - lambda).cwiseMax(0.0).matrix();
  const double cutoff = sigma.size() ? kRankThreshold * sigma(0) : 0.0;
  double obj = 0.0;
  for (Index i = 0; i < sigma.size(); ++i) {
    const double kept = std::min(sigma(i), lambda);
    obj += 0.5 * kept * kept + lambda * out.shrunk_sigma(i);
    if (out.shrunk_sigma(i) > cutoff) ++out.rank;
  }
  out.objective = obj;
  return out;
}

}  // namespace detail

inline OracleSolution global_optimum(const Tensor3& s, double lambda) {
  require_positive_lambda(lambda);
  const Index nt = s.slices();
  std::vector<detail::SliceSolution> sol(nt);
  parallel_for(nt, [&](Index t) { sol[t] = detail::solve_slice(s.slice(t), lambda, false); });

  OracleSolution out;
  out.shrunk.resize(nt);
  out.slice_objective.resize(nt);
  out.ranks.resize(nt);
  for (Index t = 0; t < nt; ++t) {
    out.shrunk[t] = sol[t].u * sol[t].shrunk_sigma.asDiagonal() * sol[t].v.transpose();
    out.slice_objective[t] = sol[t].objective;
    out.ranks[t] = sol[t].rank;
    out.objective_star += sol[t].objective;
    out.r_tilde += sol[t].rank;
  }
  return out;
}

/// Block-diagonal optimal factorization. With compact=false every slice
/// contributes its full U_t (G columns) and V_t (V columns); with
/// compact=true only the columns with a nonzero shrunk singular value are
/// kept, giving r1 = r2 = r_tilde.
inline Model explicit_factorization(const Tensor3& s, double lambda, bool compact) {
  require_positive_lambda(lambda);
  const Index g = s.rows();
  const Index v = s.cols();
  const Index nt = s.slices();
  std::vector<detail::SliceSolution> sol(nt);
  parallel_for(nt, [&](Index t) { sol[t] = detail::solve_slice(s.slice(t), lambda, !compact); });

  std::vector<Index> r1_off(nt + 1, 0), r2_off(nt + 1, 0);
  for (Index t = 0; t < nt; ++t) {
    r1_off[t + 1] = r1_off[t] + (compact ? sol[t].rank : g);
    r2_off[t + 1] = r2_off[t] + (compact ? sol[t].rank : v);
  }
  const Index r1 = r1_off[nt];
  const Index r2 = r2_off[nt];
  if (r1 == 0 || r2 == 0) return Model::zeros(g, v, nt);

  Model m{Matrix::Zero(g, r1), Matrix::Zero(v, r2), Tensor3(r1, r2, nt)};
  for (Index t = 0; t < nt; ++t) {
    const auto& st = sol[t];
    auto ct = m.coef.slice(t);
    if (compact) {
      // Shrunk values are sorted, so the kept ones are the leading ones.
      for (Index k = 0; k < st.rank; ++k) {
        m.gamma.col(r1_off[t] + k) = st.u.col(k);
        m.psi.col(r2_off[t] + k) = st.v.col(k);
        ct(r1_off[t] + k, r2_off[t] + k) = st.shrunk_sigma(k);
      }
    } else {
      m.gamma.middleCols(r1_off[t], g) = st.u;
      m.psi.middleCols(r2_off[t], v) = st.v;
      for (Index k = 0; k < st.shrunk_sigma.size(); ++k) ct(r1_off[t] + k, r2_off[t] + k) = st.shrunk_sigma(k);
    }
  }
  return m;
}

/// "# objective_star=..,r_tilde=.." comment line, then t,rank,objective rows.
inline std::string oracle_csv(const OracleSolution& sol) {
  std::string out = "# objective_star=" + csv::real(sol.objective_star) + ",r_tilde=" + std::to_string(sol.r_tilde) +
                    "\n" + "t,rank,objective\n";
  for (std::size_t t = 0; t < sol.ranks.size(); ++t)
    out += csv::join({std::to_string(t), std::to_string(sol.ranks[t]), csv::real(sol.slice_objective[t])}) + "\n";
  return out;
}

}  // namespace sepdict
