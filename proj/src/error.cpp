#include "bioslam/error.hpp"

namespace bioslam {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::dimension_mismatch: return "dimension_mismatch";
    case ErrorKind::non_finite: return "non_finite";
    case ErrorKind::degenerate_descriptor: return "degenerate_descriptor";
    case ErrorKind::empty_memory: return "empty_memory";
    case ErrorKind::invalid_config: return "invalid_config";
    case ErrorKind::digest_mismatch: return "digest_mismatch";
    case ErrorKind::corrupt_file: return "corrupt_file";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace bioslam
