#pragma once

// Largest singular value and its singular vectors, either from a full
// decomposition or by power iteration on the smaller Gram matrix.

#include <Eigen/SVD>

#include <cmath>

#include "sepdict/tensor.hpp"

namespace sepdict {

enum class SigmaMethod { FullDecomposition, PowerIteration };

struct SingularTriplet {
  double sigma = 0.0;
  Vector u;  // unit left singular vector
  Vector v;  // unit right singular vector
  bool fell_back = false;  // power iteration did not converge, full SVD used
};

namespace detail {

inline Vector unit_axis(Index n) {
  Vector e = Vector::Zero(n);
  e(0) = 1.0;
  return e;
}

inline SingularTriplet zero_triplet(const Matrix& a) {
  return {0.0, unit_axis(a.rows()), unit_axis(a.cols()), false};
}

inline SingularTriplet top_triplet_svd(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double s = svd.singularValues()(0);
  if (s <= 0.0) return zero_triplet(a);
  return {s, svd.matrixU().col(0), svd.matrixV().col(0), false};
}

/// Dominant eigenpair of a symmetric PSD matrix; false when not converged
/// or when the iterate settled on a non-dominant eigenvector.
inline bool dominant_eigen(const Matrix& b, int max_iters, double tol, double& theta, Vector& x) {
  const Index n = b.rows();
  x = Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  Vector y(n);
  for (int k = 0; k < max_iters; ++k) {
    y.noalias() = b * x;
    theta = x.dot(y);
    const double res = (y - theta * x).norm();
    if (res <= tol * theta) {
      // The dominant eigenvalue is at least the largest diagonal entry.
      return theta >= b.diagonal().maxCoeff() * (1.0 - 1e-12);
    }
    const double ny = y.norm();
    if (ny == 0.0) return false;
    x = y / ny;
  }
  return false;
}

}  // namespace detail

inline SingularTriplet top_singular_triplet(const Matrix& a, SigmaMethod method = SigmaMethod::PowerIteration,
                                            int max_iters = 200, double tol = 1e-10) {
  if (a.size() == 0) throw ShapeError("top_singular_triplet: empty matrix");
  if (!a.allFinite()) throw NumericalError("top_singular_triplet: non-finite entries");
  if (a.cwiseAbs().maxCoeff() == 0.0) return detail::zero_triplet(a);
  if (method == SigmaMethod::FullDecomposition) return detail::top_triplet_svd(a);

  double theta = 0.0;
  Vector x;
  const bool wide = a.rows() <= a.cols();
  const Matrix gram = wide ? Matrix(a * a.transpose()) : Matrix(a.transpose() * a);
  if (!detail::dominant_eigen(gram, max_iters, tol, theta, x) || !(theta > 0.0)) {
    SingularTriplet out = detail::top_triplet_svd(a);
    out.fell_back = true;
    return out;
  }
  const double sigma = std::sqrt(theta);
  SingularTriplet out;
  out.sigma = sigma;
  if (wide) {
    out.u = x;
    out.v = (a.transpose() * x).normalized();
  } else {
    out.v = x;
    out.u = (a * x).normalized();
  }
  return out;
}

inline double sigma_max(const Matrix& a, SigmaMethod method = SigmaMethod::PowerIteration, int max_iters = 200,
                        double tol = 1e-10) {
  return top_singular_triplet(a, method, max_iters, tol).sigma;
}

}  // namespace sepdict
