#pragma once

// Patch pipeline on 2D slices of diffusion data. A slice is a Tensor3 of
// shape (g, width, height): entry (k, x, y) is measurement k at pixel (x, y).
// A P x P patch becomes a g x P^2 signal whose column dx + P*dy holds pixel
// (x0 + dx, y0 + dy).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "sepdict/csv.hpp"
#include "sepdict/descent.hpp"
#include "sepdict/parallel.hpp"
#include "sepdict/random.hpp"

namespace sepdict {

using VolumeSlice2D = Tensor3;

struct PatchOrigin {
  Index x = 0;
  Index y = 0;
  bool operator==(const PatchOrigin&) const = default;
};

struct PatchSet {
  Index p = 0;
  Tensor3 patches;  // g x p^2 x n
  std::vector<PatchOrigin> origins;
  bool with_replacement = false;  // set when n exceeded the number of distinct origins
};

inline void check_volume(const VolumeSlice2D& img, const char* who) {
  if (img.empty()) throw ShapeError(std::string(who) + ": empty slice");
  if (!img.all_finite()) throw NumericalError(std::string(who) + ": slice has non-finite values");
}

inline void copy_patch(const VolumeSlice2D& img, Index p, PatchOrigin o, SliceMap dst) {
  for (Index dy = 0; dy < p; ++dy)
    for (Index dx = 0; dx < p; ++dx) dst.col(dx + p * dy) = img.slice(o.y + dy).col(o.x + dx);
}

/// Cuts the patches at the given origins.
inline PatchSet patches_at(const VolumeSlice2D& img, Index p, std::vector<PatchOrigin> origins) {
  check_volume(img, "patches_at");
  if (p < 1 || p > std::min(img.cols(), img.slices())) throw ShapeError("patches_at: patch side must be in [1, min(width, height)]");
  if (origins.empty()) throw ShapeError("patches_at: no origins");
  PatchSet out{p, Tensor3(img.rows(), p * p, static_cast<Index>(origins.size())), std::move(origins), false};
  for (Index t = 0; t < out.patches.slices(); ++t) {
    const PatchOrigin o = out.origins[t];
    if (o.x < 0 || o.y < 0 || o.x + p > img.cols() || o.y + p > img.slices())
      throw ShapeError("patches_at: origin (" + std::to_string(o.x) + ", " + std::to_string(o.y) + ") out of bounds");
    copy_patch(img, p, o, out.patches.slice(t));
  }
  return out;
}

/// n uniformly random origins, distinct when n does not exceed the number of
/// possible origins; otherwise drawn with replacement and flagged.
inline PatchSet extract_patches(const VolumeSlice2D& img, Index p, Index n, std::uint64_t seed) {
  check_volume(img, "extract_patches");
  if (p < 1 || p > std::min(img.cols(), img.slices()))
    throw ShapeError("extract_patches: patch side must be in [1, min(width, height)]");
  if (n < 1) throw ParameterError("extract_patches: n must be >= 1");
  const Index nx = img.cols() - p + 1;
  const Index total = nx * (img.slices() - p + 1);
  Rng rng(seed);
  std::vector<Index> picks;
  const bool replace = n > total;
  if (replace) {
    for (Index k = 0; k < n; ++k) picks.push_back(static_cast<Index>(rng.below(static_cast<std::uint64_t>(total))));
  } else {
    std::vector<Index> pool(static_cast<std::size_t>(total));
    std::iota(pool.begin(), pool.end(), Index{0});
    for (Index k = 0; k < n; ++k) {
      const auto j = k + static_cast<Index>(rng.below(static_cast<std::uint64_t>(total - k)));
      std::swap(pool[k], pool[j]);
      picks.push_back(pool[k]);
    }
  }
  std::vector<PatchOrigin> origins;
  origins.reserve(picks.size());
  for (Index k : picks) origins.push_back({k % nx, k / nx});
  PatchSet out = patches_at(img, p, std::move(origins));
  out.with_replacement = replace;
  return out;
}

/// Writes patch t back into img at its origin (overwriting).
inline void place_patch(VolumeSlice2D& img, const PatchSet& ps, Index t) {
  const PatchOrigin o = ps.origins.at(static_cast<std::size_t>(t));
  const auto src = ps.patches.slice(t);
  for (Index dy = 0; dy < ps.p; ++dy)
    for (Index dx = 0; dx < ps.p; ++dx) img.slice(o.y + dy).col(o.x + dx) = src.col(dx + ps.p * dy);
}

/// Coefficients minimizing the objective over C alone with both dictionaries
/// fixed, starting from C = 0. Each slice is solved as its own problem.
inline Tensor3 sparse_code(const Tensor3& s, const Matrix& gamma, const Matrix& psi, double lambda,
                           const DescentConfig& cfg = {}) {
  require_positive_lambda(lambda);
  require_shape(gamma.rows() == s.rows() && psi.rows() == s.cols(),
                "sparse_code: dictionaries " + std::to_string(gamma.rows()) + "x" + std::to_string(gamma.cols()) +
                    " and " + std::to_string(psi.rows()) + "x" + std::to_string(psi.cols()) +
                    " do not match data " + s.dims());
  if (gamma.cols() < 1 || psi.cols() < 1 || gamma.isZero(0.0) || psi.isZero(0.0))
    throw ParameterError("sparse_code: dictionaries must be nonzero");
  DescentConfig dc = cfg;
  dc.update_gamma = false;
  dc.update_psi = false;
  dc.validate();

  Tensor3 coef(gamma.cols(), psi.cols(), s.slices());
  parallel_for(s.slices(), [&](Index t) {
    const Tensor3 st(s.rows(), s.cols(), 1, std::vector<double>(s.slice(t).data(), s.slice(t).data() + s.rows() * s.cols()));
    const Model m0{gamma, psi, Tensor3(gamma.cols(), psi.cols(), 1)};
    coef.slice(t) = descend(st, m0, lambda, dc).coef.slice(0);
  });
  return coef;
}

/// Patch origins along one axis: 0, stride, 2*stride, ... plus a final
/// edge-flush origin dim - p when the grid does not reach it.
inline std::vector<Index> grid_origins(Index dim, Index p, Index stride) {
  std::vector<Index> out;
  for (Index x = 0; x + p <= dim; x += stride) out.push_back(x);
  if (out.back() != dim - p) out.push_back(dim - p);
  return out;
}

/// Averages overlapping patches into a slice of the given size. Each pixel
/// sums its contributions in (y, x) origin order, so the result does not
/// depend on the order of the patches in the set.
inline VolumeSlice2D average_patches(const PatchSet& ps, Index width, Index height) {
  const Index p = ps.p;
  std::vector<std::size_t> order(ps.origins.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& oa = ps.origins[a];
    const auto& ob = ps.origins[b];
    return oa.y != ob.y ? oa.y < ob.y : oa.x < ob.x;
  });
  VolumeSlice2D sum(ps.patches.rows(), width, height);
  std::vector<double> weight(static_cast<std::size_t>(width * height), 0.0);
  for (std::size_t k : order) {
    const PatchOrigin o = ps.origins[k];
    const auto src = ps.patches.slice(static_cast<Index>(k));
    for (Index dy = 0; dy < p; ++dy)
      for (Index dx = 0; dx < p; ++dx) {
        sum.slice(o.y + dy).col(o.x + dx) += src.col(dx + p * dy);
        weight[static_cast<std::size_t>(o.x + dx + width * (o.y + dy))] += 1.0;
      }
  }
  for (Index y = 0; y < height; ++y)
    for (Index x = 0; x < width; ++x) {
      const double w = weight[static_cast<std::size_t>(x + width * y)];
      if (w > 0.0) sum.slice(y).col(x) /= w;
    }
  return sum;
}

/// Sparse-codes the given patches with fixed dictionaries and averages the
/// reconstructions.
inline VolumeSlice2D denoise_patches(const PatchSet& ps, Index width, Index height, const Matrix& gamma,
                                     const Matrix& psi, double lambda, const DescentConfig& cfg = {}) {
  const Tensor3 coef = sparse_code(ps.patches, gamma, psi, lambda, cfg);
  PatchSet rec{ps.p, mode_product(coef, gamma, psi), ps.origins, ps.with_replacement};
  return average_patches(rec, width, height);
}

/// Denoises with every patch on the stride grid plus edge-flush patches.
inline VolumeSlice2D denoise(const VolumeSlice2D& img, const Matrix& gamma, const Matrix& psi, double lambda, Index p,
                             Index stride, const DescentConfig& cfg = {}) {
  check_volume(img, "denoise");
  if (stride < 1) throw ParameterError("denoise: stride must be >= 1");
  if (p < 1 || p > std::min(img.cols(), img.slices())) throw ShapeError("denoise: patch side must be in [1, min(width, height)]");
  require_shape(gamma.rows() == img.rows() && psi.rows() == p * p,
                "denoise: dictionaries must have " + std::to_string(img.rows()) + " and " + std::to_string(p * p) +
                    " rows");
  std::vector<PatchOrigin> origins;
  for (Index y : grid_origins(img.slices(), p, stride))
    for (Index x : grid_origins(img.cols(), p, stride)) origins.push_back({x, y});
  return denoise_patches(patches_at(img, p, std::move(origins)), img.cols(), img.slices(), gamma, psi, lambda, cfg);
}

/// 10 log10(MAX^2 / MSE) with MAX the largest reference value; identical
/// inputs give +infinity.
inline double psnr(const VolumeSlice2D& reference, const VolumeSlice2D& test) {
  require_shape(reference.same_shape(test), "psnr: " + reference.dims() + " vs " + test.dims());
  if (reference.flat().isZero(0.0)) throw ParameterError("psnr: reference is identically zero");
  const double peak = reference.flat().maxCoeff();
  const double mse = (reference.flat() - test.flat()).squaredNorm() / static_cast<double>(reference.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

/// n values spaced evenly in log scale from lo to hi inclusive.
inline std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0 && hi >= lo) || n < 1) throw ParameterError("log_grid: need 0 < lo <= hi and n >= 1");
  std::vector<double> out;
  for (int k = 0; k < n; ++k)
    out.push_back(n == 1 ? lo : std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * k / (n - 1)));
  return out;
}

struct SweepPoint {
  double lambda = 0.0;
  double psnr = 0.0;
};

/// Denoises at each lambda and scores the output against the reference.
inline std::vector<SweepPoint> lambda_sweep(const VolumeSlice2D& noisy, const VolumeSlice2D& reference,
                                            const Matrix& gamma, const Matrix& psi, const std::vector<double>& lambdas,
                                            Index p, Index stride, const DescentConfig& cfg = {}) {
  std::vector<SweepPoint> out;
  for (double lambda : lambdas) out.push_back({lambda, psnr(reference, denoise(noisy, gamma, psi, lambda, p, stride, cfg))});
  return out;
}

inline std::string sweep_csv(const std::vector<SweepPoint>& pts) {
  std::string out = "lambda,psnr\n";
  for (const auto& pt : pts) out += csv::join({csv::real(pt.lambda), csv::real(pt.psnr)}) + "\n";
  return out;
}

}  // namespace sepdict
