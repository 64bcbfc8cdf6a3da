#pragma once

// Synthetic separable signals: each slice is a random positive combination
// of outer products of ground-truth angular and spatial atoms, plus i.i.d.
// Gaussian noise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sepdict/csv.hpp"
#include "sepdict/random.hpp"
#include "sepdict/tensor.hpp"

namespace sepdict {

struct SyntheticSpec {
  Index g = 10;
  Index v = 100;
  Index t = 1200;
  Index n_gamma_atoms = 3;
  Index n_psi_atoms = 6;
  double noise_var = 0.003;
  std::uint64_t seed = 0;
  // Per signal, the number of angular (resp. spatial) terms is uniform on
  // {1, .., max_gamma_terms} (resp. {1, .., max_psi_terms}).
  Index max_gamma_terms = 2;
  Index max_psi_terms = 3;

  void validate() const {
    if (g < 1 || v < 1 || t < 1) throw ParameterError("SyntheticSpec: g, v, t must be >= 1");
    if (n_gamma_atoms < 1 || n_psi_atoms < 1) throw ParameterError("SyntheticSpec: atom counts must be >= 1");
    if (max_gamma_terms < 1 || max_psi_terms < 1) throw ParameterError("SyntheticSpec: term counts must be >= 1");
    if (!(noise_var >= 0.0) || !std::isfinite(noise_var)) throw ParameterError("SyntheticSpec: noise_var must be >= 0");
  }
};

/// Atom indices and mixing weights of one generated signal; weights(p, q)
/// multiplies gamma atom gamma_idx[p] times psi atom psi_idx[q].
struct SignalRecipe {
  std::vector<Index> gamma_idx;
  std::vector<Index> psi_idx;
  Matrix weights;
};

struct SyntheticData {
  Tensor3 data;
  Tensor3 clean;
  Matrix gamma_atoms;  // g x n_gamma_atoms
  Matrix psi_atoms;    // v x n_psi_atoms
  std::vector<SignalRecipe> recipes;
};

namespace detail {

// Largest divisor of n not above sqrt(n): the grid is h x w with h <= w.
inline Index grid_height(Index n) {
  Index h = 1;
  for (Index d = 1; d * d <= n; ++d)
    if (n % d == 0) h = d;
  return h;
}

inline Vector gaussian_bump(Index n, double center, double width) {
  Vector out(n);
  for (Index k = 0; k < n; ++k) {
    const double z = (static_cast<double>(k) - center) / width;
    out(k) = std::exp(-0.5 * z * z);
  }
  return out;
}

inline Vector angular_atom(Index g, Index k) {
  const double last = static_cast<double>(g - 1);
  const double width = std::max(static_cast<double>(g) / 8.0, 0.5);
  switch (k % 3) {
    case 0:
      return Vector::Ones(g);
    case 1:
      return gaussian_bump(g, 0.5 * last, width);
    default:
      return gaussian_bump(g, 0.25 * last, width) + gaussian_bump(g, 0.75 * last, width);
  }
}

// Pixel (r, c) of the h x w grid is entry r + h*c.
inline Vector spatial_atom(Index v, Index k) {
  const Index h = grid_height(v);
  const Index w = v / h;
  const Index band_r = std::max<Index>(1, h / 5);
  const Index band_c = std::max<Index>(1, w / 5);
  const double cr = 0.5 * static_cast<double>(h - 1);
  const double cc = 0.5 * static_cast<double>(w - 1);
  const double r_out = 0.45 * static_cast<double>(std::min(h, w));
  const double r_in = r_out - std::max(1.0, 0.15 * static_cast<double>(std::min(h, w)));
  Vector out = Vector::Zero(v);
  for (Index c = 0; c < w; ++c)
    for (Index r = 0; r < h; ++r) {
      bool on = false;
      switch (k % 6) {
        case 0:  // horizontal bar
          on = r >= (h - band_r) / 2 && r < (h - band_r) / 2 + band_r;
          break;
        case 1:  // vertical bar
          on = c >= (w - band_c) / 2 && c < (w - band_c) / 2 + band_c;
          break;
        case 2:  // diagonal
          on = std::abs(static_cast<double>(r) - static_cast<double>(c) * static_cast<double>(h) / w) <= 0.5;
          break;
        case 3:  // centered square
          on = r >= h / 4 && r < h - h / 4 && c >= w / 4 && c < w - w / 4;
          break;
        case 4:  // corner block
          on = r < std::max<Index>(1, h / 3) && c < std::max<Index>(1, w / 3);
          break;
        default: {  // ring
          const double d = std::hypot(static_cast<double>(r) - cr, static_cast<double>(c) - cc);
          on = d >= r_in && d <= r_out;
        }
      }
      if (on) out(r + h * c) = 1.0;
    }
  if (out.sum() == 0.0) out(k % v) = 1.0;
  return out;
}

}  // namespace detail

/// Unit-norm angular atoms (constant, one bump, two bumps) and spatial
/// binary masks (horizontal bar, vertical bar, diagonal, centered square,
/// corner block, ring). Beyond these catalogues the patterns repeat.
inline std::pair<Matrix, Matrix> default_atoms(const SyntheticSpec& spec) {
  spec.validate();
  Matrix gamma(spec.g, spec.n_gamma_atoms);
  Matrix psi(spec.v, spec.n_psi_atoms);
  for (Index k = 0; k < spec.n_gamma_atoms; ++k) gamma.col(k) = detail::angular_atom(spec.g, k).normalized();
  for (Index k = 0; k < spec.n_psi_atoms; ++k) psi.col(k) = detail::spatial_atom(spec.v, k).normalized();
  return {gamma, psi};
}

/// Draws, per signal in order: the term counts, the atom indices (with
/// replacement), Uniform(0,1) weights rescaled to sum 1, then the noise.
inline SyntheticData generate(const SyntheticSpec& spec) {
  spec.validate();
  auto [gamma, psi] = default_atoms(spec);
  Rng rng(spec.seed);
  const double sd = std::sqrt(spec.noise_var);

  SyntheticData out{Tensor3(spec.g, spec.v, spec.t), Tensor3(spec.g, spec.v, spec.t), gamma, psi, {}};
  out.recipes.reserve(static_cast<std::size_t>(spec.t));
  for (Index t = 0; t < spec.t; ++t) {
    SignalRecipe rc;
    const Index m = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(spec.max_gamma_terms)));
    const Index n = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(spec.max_psi_terms)));
    for (Index p = 0; p < m; ++p)
      rc.gamma_idx.push_back(static_cast<Index>(rng.below(static_cast<std::uint64_t>(spec.n_gamma_atoms))));
    for (Index q = 0; q < n; ++q)
      rc.psi_idx.push_back(static_cast<Index>(rng.below(static_cast<std::uint64_t>(spec.n_psi_atoms))));
    rc.weights.resize(m, n);
    for (Index q = 0; q < n; ++q)
      for (Index p = 0; p < m; ++p) {
        double u = rng.uniform();
        while (u <= 0.0) u = rng.uniform();
        rc.weights(p, q) = u;
      }
    rc.weights /= rc.weights.sum();

    auto clean = out.clean.slice(t);
    for (Index q = 0; q < n; ++q)
      for (Index p = 0; p < m; ++p)
        clean.noalias() += rc.weights(p, q) * gamma.col(rc.gamma_idx[p]) * psi.col(rc.psi_idx[q]).transpose();
    auto noisy = out.data.slice(t);
    noisy = clean;
    if (sd > 0.0)
      for (Index j = 0; j < spec.v; ++j)
        for (Index i = 0; i < spec.g; ++i) noisy(i, j) += sd * rng.normal();
    out.recipes.push_back(std::move(rc));
  }
  return out;
}

/// "mode,atom,entry,value" rows for both atom matrices.
inline std::string atoms_csv(const Matrix& gamma, const Matrix& psi) {
  std::string out = "mode,atom,entry,value\n";
  const auto dump = [&out](const char* mode, const Matrix& a) {
    for (Index k = 0; k < a.cols(); ++k)
      for (Index e = 0; e < a.rows(); ++e)
        out += csv::join({mode, std::to_string(k), std::to_string(e), csv::real(a(e, k))}) + "\n";
  };
  dump("gamma", gamma);
  dump("psi", psi);
  return out;
}

}  // namespace sepdict
