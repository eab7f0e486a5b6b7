#pragma once

#include <stdexcept>
#include <string>

namespace aniso {

/// Broad failure classes. The CLI maps these onto process exit codes.
enum class ErrorKind {
  InvalidInput,
  InvalidArchitecture,
  Validation,
  MissingArtifact,
  Degenerate,
  OutOfBounds,
  NoValidLocation,
  InfeasibleProbe,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput:        return "invalid-input";
    case ErrorKind::InvalidArchitecture: return "invalid-architecture";
    case ErrorKind::Validation:          return "validation";
    case ErrorKind::MissingArtifact:     return "missing-artifact";
    case ErrorKind::Degenerate:          return "degenerate-target";
    case ErrorKind::OutOfBounds:         return "out-of-bounds";
    case ErrorKind::NoValidLocation:     return "no-valid-location";
    case ErrorKind::InfeasibleProbe:     return "infeasible-probe";
    case ErrorKind::Io:                  return "io";
  }
  return "unknown";
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace aniso
