#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace egostance {

/// Coarse failure class, surfaced verbatim by the CLI as a machine-readable tag.
enum class ErrorKind { Usage, Io, Parse, Validation, Runtime };

inline std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Io: return "io";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Runtime: return "runtime";
  }
  return "runtime";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace egostance
