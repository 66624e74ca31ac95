#include "geosic/error.hpp"

namespace geosic {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid argument";
    case ErrorKind::parse: return "parse error";
    case ErrorKind::validation: return "validation error";
    case ErrorKind::infeasible: return "infeasible";
    case ErrorKind::capacity: return "capacity exceeded";
    case ErrorKind::decomposition: return "decomposition error";
    case ErrorKind::io: return "i/o error";
    case ErrorKind::internal: return "internal error";
  }
  return "unknown error";
}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace geosic
