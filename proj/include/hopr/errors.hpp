#pragma once

#include <stdexcept>
#include <string>

namespace hopr {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Rejected data: negative/NaN entries, dimension mismatch, column mass > 1.
struct InvalidInput : Error {
  using Error::Error;
};

/// Rejected solver or CLI configuration (bad alpha, beta, tau, ...).
struct InvalidConfig : Error {
  using Error::Error;
};

/// Problem size outside the supported range of an operation.
struct UnsupportedSize : Error {
  using Error::Error;
};

/// Malformed file: bad magic line, version mismatch, parse failure.
struct FormatError : Error {
  using Error::Error;
};

}  // namespace hopr
