#pragma once

#include <stdexcept>
#include <string>

namespace pufbench {

enum class ErrorKind {
  InvalidConfig,
  InvalidArgument,
  WidthMismatch,
  ShapeMismatch,
  Domain,
  Io,
  BadMagic,
  UnsupportedVersion,
  TruncatedFile,
  CountMismatch,
  Divergence,
  FamilyMismatch,
  IncompleteRun,
};

const char* to_string(ErrorKind kind);

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidConfig: return "invalid-config";
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::WidthMismatch: return "width-mismatch";
    case ErrorKind::ShapeMismatch: return "shape-mismatch";
    case ErrorKind::Domain: return "domain-error";
    case ErrorKind::Io: return "io-failure";
    case ErrorKind::BadMagic: return "bad-magic";
    case ErrorKind::UnsupportedVersion: return "unsupported-version";
    case ErrorKind::TruncatedFile: return "truncated-file";
    case ErrorKind::CountMismatch: return "count-mismatch";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::FamilyMismatch: return "family-mismatch";
    case ErrorKind::IncompleteRun: return "incomplete-run";
  }
  return "unknown";
}

}  // namespace pufbench
