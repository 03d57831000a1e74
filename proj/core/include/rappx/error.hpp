#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rappx {

enum class ErrorCode {
  Domain,
  InsufficientData,
  DegenerateData,
  DegenerateGrid,
  RankDeficient,
  NonConvergence,
  EmptyFrame,
  ZeroFrame,
  LengthMismatch,
  MissingGridCell,
  Format,
  UnsupportedVersion,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rappx
