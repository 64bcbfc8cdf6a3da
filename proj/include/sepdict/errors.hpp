#pragma once

#include <stdexcept>
#include <string>

namespace sepdict {

/// Dimensions of two operands do not agree.
class ShapeError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A scalar parameter is outside its admissible range (e.g. lambda <= 0).
class ParameterError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A computation produced a non-finite value.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An operation was invoked in a state where it is not defined.
class MisuseError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// Malformed or unreadable file.
class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline void require_shape(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

}  // namespace sepdict
