#pragma once

// Dense third-order tensor container and the slice/mode-product primitives.
//
// Entry (g, v, t) of a G x V x T tensor is stored at flat offset
// g + G*v + G*V*t, so slice t is one contiguous column-major G x V block.

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

#include "sepdict/errors.hpp"

namespace sepdict {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

using SliceMap = Eigen::Map<Matrix>;
using ConstSliceMap = Eigen::Map<const Matrix>;

class Tensor3 {
public:
  Tensor3() = default;

  Tensor3(Index rows, Index cols, Index slices)
      : rows_(rows), cols_(cols), slices_(slices) {
    if (rows <= 0 || cols <= 0 || slices <= 0)
      throw ShapeError("Tensor3: all dimensions must be positive, got " + dims_string(rows, cols, slices));
    data_.assign(static_cast<std::size_t>(rows * cols * slices), 0.0);
  }

  Tensor3(Index rows, Index cols, Index slices, std::vector<double> values)
      : rows_(rows), cols_(cols), slices_(slices), data_(std::move(values)) {
    if (rows <= 0 || cols <= 0 || slices <= 0)
      throw ShapeError("Tensor3: all dimensions must be positive, got " + dims_string(rows, cols, slices));
    if (data_.size() != static_cast<std::size_t>(rows * cols * slices))
      throw ShapeError("Tensor3: value count does not match " + dims_string(rows, cols, slices));
  }

  static Tensor3 zeros(Index rows, Index cols, Index slices) { return Tensor3(rows, cols, slices); }

  /// Stacks equally sized matrices as the slices of a tensor.
  static Tensor3 from_slices(const std::vector<Matrix>& slices) {
    if (slices.empty()) throw ShapeError("Tensor3::from_slices: no slices");
    Tensor3 out(slices.front().rows(), slices.front().cols(), static_cast<Index>(slices.size()));
    for (Index t = 0; t < out.slices(); ++t) {
      require_shape(slices[t].rows() == out.rows() && slices[t].cols() == out.cols(),
                    "Tensor3::from_slices: slice " + std::to_string(t) + " has mismatched shape");
      out.slice(t) = slices[t];
    }
    return out;
  }

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index slices() const { return slices_; }
  Index size() const { return rows_ * cols_ * slices_; }
  bool empty() const { return data_.empty(); }

  bool same_shape(const Tensor3& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && slices_ == o.slices_;
  }

  std::string dims() const { return dims_string(rows_, cols_, slices_); }

  double& operator()(Index g, Index v, Index t) { return data_[offset(g, v, t)]; }
  double operator()(Index g, Index v, Index t) const { return data_[offset(g, v, t)]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  const std::vector<double>& values() const { return data_; }

  SliceMap slice(Index t) {
    check_slice(t);
    return SliceMap(data_.data() + t * rows_ * cols_, rows_, cols_);
  }
  ConstSliceMap slice(Index t) const {
    check_slice(t);
    return ConstSliceMap(data_.data() + t * rows_ * cols_, rows_, cols_);
  }

  Eigen::Map<Vector> flat() { return {data_.data(), size()}; }
  Eigen::Map<const Vector> flat() const { return {data_.data(), size()}; }

  double squared_norm() const { return flat().squaredNorm(); }
  bool all_finite() const { return flat().allFinite(); }

  Tensor3& operator+=(const Tensor3& o) {
    require_shape(same_shape(o), "Tensor3 +=: " + dims() + " vs " + o.dims());
    flat() += o.flat();
    return *this;
  }
  Tensor3& operator-=(const Tensor3& o) {
    require_shape(same_shape(o), "Tensor3 -=: " + dims() + " vs " + o.dims());
    flat() -= o.flat();
    return *this;
  }
  Tensor3& operator*=(double a) {
    flat() *= a;
    return *this;
  }
  friend Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }
  friend Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }
  friend Tensor3 operator*(double s, Tensor3 a) { return a *= s; }

  bool operator==(const Tensor3& o) const { return same_shape(o) && data_ == o.data_; }

private:
  static std::string dims_string(Index r, Index c, Index s) {
    return std::to_string(r) + "x" + std::to_string(c) + "x" + std::to_string(s);
  }

  std::size_t offset(Index g, Index v, Index t) const {
    return static_cast<std::size_t>(g + rows_ * (v + cols_ * t));
  }

  void check_slice(Index t) const {
    if (t < 0 || t >= slices_)
      throw std::out_of_range("Tensor3: slice index " + std::to_string(t) + " outside [0, " +
                              std::to_string(slices_) + ")");
  }

  Index rows_ = 0;
  Index cols_ = 0;
  Index slices_ = 0;
  std::vector<double> data_;
};

/// Copy of slice t as a G x V matrix.
inline Matrix slice_t(const Tensor3& x, Index t) { return x.slice(t); }

/// Output slice t equals gamma * c_t * psi^T.
inline Tensor3 mode_product(const Tensor3& c, const Matrix& gamma, const Matrix& psi) {
  require_shape(gamma.cols() == c.rows(),
                "mode_product: gamma has " + std::to_string(gamma.cols()) + " columns, core has " +
                    std::to_string(c.rows()) + " rows");
  require_shape(psi.cols() == c.cols(),
                "mode_product: psi has " + std::to_string(psi.cols()) + " columns, core has " +
                    std::to_string(c.cols()) + " columns");
  Tensor3 out(gamma.rows(), psi.rows(), c.slices());
  Matrix gc(gamma.rows(), c.cols());
  for (Index t = 0; t < c.slices(); ++t) {
    gc.noalias() = gamma * c.slice(t);
    out.slice(t).noalias() = gc * psi.transpose();
  }
  return out;
}

/// Sum over all entries of the elementwise product.
inline double frobenius_inner(const Tensor3& a, const Tensor3& b) {
  require_shape(a.same_shape(b), "frobenius_inner: " + a.dims() + " vs " + b.dims());
  double acc = 0.0;
  for (Index t = 0; t < a.slices(); ++t) acc += a.slice(t).cwiseProduct(b.slice(t)).sum();
  return acc;
}

}  // namespace sepdict
