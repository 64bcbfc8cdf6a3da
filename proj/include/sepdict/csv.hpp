#pragma once

// CSV helpers. Reals are printed with 17 significant digits so values
// round-trip exactly and diffs between runs are stable.

#include <cmath>
#include <cstdio>
#include <initializer_list>
#include <limits>
#include <string>

namespace sepdict::csv {

inline std::string real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string join(std::initializer_list<std::string> fields) {
  std::string out;
  bool first = true;
  for (const auto& f : fields) {
    if (!first) out += ',';
    out += f;
    first = false;
  }
  return out;
}

}  // namespace sepdict::csv
