#pragma once

#include <stdexcept>
#include <string>

namespace geosic {

enum class ErrorKind {
  invalid_argument,
  parse,
  validation,
  infeasible,
  capacity,
  decomposition,
  io,
  internal,
};

const char* to_string(ErrorKind kind) noexcept;

/// Single exception type for the library. `kind()` drives the C API status
/// code and the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(ErrorKind::invalid_argument, what);
}

}  // namespace geosic
