#pragma once

// File formats.
//
// SDT1: the bytes "SDT1", three little-endian uint32 (G, V, T), then G*V*T
// little-endian float64 values in tensor storage order. Matrices are stored
// as SDT1 tensors with T = 1. A model directory holds gamma.sdt, psi.sdt
// and coef.sdt.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "sepdict/csv.hpp"
#include "sepdict/objective.hpp"
#include "sepdict/tensor.hpp"

namespace sepdict::io {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

namespace detail {

template <class T>
T byteswap_if_big(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

template <class T>
void put(std::ostream& os, T v) {
  v = byteswap_if_big(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
bool get(std::istream& is, T& v) {
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) return false;
  v = byteswap_if_big(v);
  return true;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string() + " for reading");
  return is;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  return os;
}

inline void read_doubles(std::istream& is, std::vector<double>& out, const std::string& what) {
  for (double& v : out)
    if (!get(is, v)) throw FormatError(what + ": truncated data");
}

}  // namespace detail

inline void write_sdt(std::ostream& os, const Tensor3& x) {
  const auto limit = static_cast<Index>(std::numeric_limits<std::uint32_t>::max());
  if (x.rows() > limit || x.cols() > limit || x.slices() > limit) throw ShapeError("write_sdt: dimension exceeds uint32");
  os.write("SDT1", 4);
  detail::put(os, static_cast<std::uint32_t>(x.rows()));
  detail::put(os, static_cast<std::uint32_t>(x.cols()));
  detail::put(os, static_cast<std::uint32_t>(x.slices()));
  for (Index k = 0; k < x.size(); ++k) detail::put(os, x.data()[k]);
  if (!os) throw FormatError("write_sdt: write failed");
}

inline Tensor3 read_sdt(std::istream& is, const std::string& what = "SDT1 stream") {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "SDT1", 4) != 0) throw FormatError(what + ": bad magic, not an SDT1 file");
  std::uint32_t g = 0, v = 0, t = 0;
  if (!detail::get(is, g) || !detail::get(is, v) || !detail::get(is, t)) throw FormatError(what + ": truncated header");
  if (g == 0 || v == 0 || t == 0) throw FormatError(what + ": zero dimension in header");
  std::vector<double> values(static_cast<std::size_t>(g) * v * t);
  detail::read_doubles(is, values, what);
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError(what + ": trailing bytes after data");
  return Tensor3(g, v, t, std::move(values));
}

inline void save_sdt(const std::filesystem::path& path, const Tensor3& x) {
  auto os = detail::open_out(path);
  write_sdt(os, x);
}

inline Tensor3 load_sdt(const std::filesystem::path& path) {
  auto is = detail::open_in(path);
  return read_sdt(is, path.string());
}

inline void save_matrix(const std::filesystem::path& path, const Matrix& m) {
  save_sdt(path, Tensor3(m.rows(), m.cols(), 1, std::vector<double>(m.data(), m.data() + m.size())));
}

inline Matrix load_matrix(const std::filesystem::path& path) {
  const Tensor3 x = load_sdt(path);
  if (x.slices() != 1) throw FormatError(path.string() + ": expected a matrix (T = 1), got T = " + std::to_string(x.slices()));
  return x.slice(0);
}

/// Header "g,v,t,value", then one row per entry in storage order.
inline std::string tensor_csv(const Tensor3& x) {
  std::string out = "g,v,t,value\n";
  for (Index t = 0; t < x.slices(); ++t)
    for (Index v = 0; v < x.cols(); ++v)
      for (Index g = 0; g < x.rows(); ++g)
        out += csv::join({std::to_string(g), std::to_string(v), std::to_string(t), csv::real(x(g, v, t))}) + "\n";
  return out;
}

/// Inverse of tensor_csv. Rows may come in any order; missing entries are
/// an error, dimensions are one past the largest index seen.
inline Tensor3 parse_tensor_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "g,v,t,value") throw FormatError("tensor CSV: missing header g,v,t,value");
  struct Entry {
    long g, v, t;
    double value;
  };
  std::vector<Entry> entries;
  long gm = -1, vm = -1, tm = -1;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Entry e{};
    char c1 = 0, c2 = 0, c3 = 0;
    std::istringstream row(line);
    std::string value;
    if (!(row >> e.g >> c1 >> e.v >> c2 >> e.t >> c3) || c1 != ',' || c2 != ',' || c3 != ',' || !(row >> value) ||
        e.g < 0 || e.v < 0 || e.t < 0)
      throw FormatError("tensor CSV: malformed line " + std::to_string(lineno));
    try {
      std::size_t used = 0;
      e.value = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw FormatError("tensor CSV: bad value on line " + std::to_string(lineno));
    }
    gm = std::max(gm, e.g);
    vm = std::max(vm, e.v);
    tm = std::max(tm, e.t);
    entries.push_back(e);
  }
  if (entries.empty()) throw FormatError("tensor CSV: no entries");
  Tensor3 x(gm + 1, vm + 1, tm + 1);
  std::vector<char> seen(static_cast<std::size_t>(x.size()), 0);
  for (const auto& e : entries) {
    const auto k = static_cast<std::size_t>(e.g + x.rows() * (e.v + x.cols() * e.t));
    if (seen[k]) throw FormatError("tensor CSV: duplicate entry");
    seen[k] = 1;
    x(e.g, e.v, e.t) = e.value;
  }
  for (char s : seen)
    if (!s) throw FormatError("tensor CSV: missing entries");
  return x;
}

/// Raw little-endian float64 volume of g * width * height values stored
/// measurement-fastest, then x, then y.
inline Tensor3 load_raw_volume(const std::filesystem::path& path, Index g, Index width, Index height) {
  if (g < 1 || width < 1 || height < 1) throw ShapeError("load_raw_volume: dimensions must be positive");
  auto is = detail::open_in(path);
  std::vector<double> values(static_cast<std::size_t>(g * width * height));
  detail::read_doubles(is, values, path.string());
  if (is.peek() != std::char_traits<char>::eof())
    throw FormatError(path.string() + ": file is larger than the given dimensions");
  return Tensor3(g, width, height, std::move(values));
}

inline void save_raw_volume(const std::filesystem::path& path, const Tensor3& x) {
  auto os = detail::open_out(path);
  for (Index k = 0; k < x.size(); ++k) detail::put(os, x.data()[k]);
  if (!os) throw FormatError("save_raw_volume: write failed");
}

inline void save_model(const std::filesystem::path& dir, const Model& m) {
  m.validate();
  std::filesystem::create_directories(dir);
  save_matrix(dir / "gamma.sdt", m.gamma);
  save_matrix(dir / "psi.sdt", m.psi);
  save_sdt(dir / "coef.sdt", m.coef);
}

inline Model load_model(const std::filesystem::path& dir) {
  Model m{load_matrix(dir / "gamma.sdt"), load_matrix(dir / "psi.sdt"), load_sdt(dir / "coef.sdt")};
  try {
    m.validate();
  } catch (const ShapeError& e) {
    throw FormatError(dir.string() + ": inconsistent model files (" + e.what() + ")");
  }
  return m;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  auto os = detail::open_out(path);
  os << text;
  if (!os) throw FormatError("cannot write " + path.string());
}

}  // namespace sepdict::io
