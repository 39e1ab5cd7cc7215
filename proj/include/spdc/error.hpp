#pragma once

#include <stdexcept>
#include <string>

namespace spdc {

enum class ErrorKind {
  Range,
  NoPhaseMatch,
  SingularSystem,
  NegativeThickness,
  Resolution,
  DegenerateFit,
  InvalidStack,
  InvalidArgument,
  ZeroWeight,
  Config,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Range: return "RangeError";
    case ErrorKind::NoPhaseMatch: return "NoPhaseMatch";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::NegativeThickness: return "NegativeThickness";
    case ErrorKind::Resolution: return "ResolutionError";
    case ErrorKind::DegenerateFit: return "DegenerateFit";
    case ErrorKind::InvalidStack: return "InvalidStack";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ZeroWeight: return "ZeroWeight";
    case ErrorKind::Config: return "ConfigError";
  }
  return "Error";
}

// Every failure raised by the library carries a kind so callers (the CLI in
// particular) can map it to an exit code without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  // Config errors are usage problems; everything else is a domain failure.
  bool is_domain_error() const noexcept { return kind_ != ErrorKind::Config; }

 private:
  ErrorKind kind_;
};

}  // namespace spdc
