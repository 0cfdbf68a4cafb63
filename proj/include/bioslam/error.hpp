#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bioslam {

enum class ErrorKind {
  invalid_argument,
  dimension_mismatch,
  non_finite,
  degenerate_descriptor,
  empty_memory,
  invalid_config,
  digest_mismatch,
  corrupt_file,
  io,
};

std::string_view to_string(ErrorKind kind);

/// Library-wide exception. `what()` is a single line of the form
/// "<kind>: <message>" so the CLI can forward it verbatim.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace bioslam
