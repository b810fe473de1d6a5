#pragma once

#include <stdexcept>
#include <string>

namespace lcsum {

// Broken preconditions: shape mismatches, out-of-range arguments, bad records.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// NaN/Inf where finite values are required.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem and parse failures; messages carry the offending path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A problem too large for an exact solver's table or enumeration.
class SizeLimitError : public ContractError {
 public:
  using ContractError::ContractError;
};

#define LCSUM_REQUIRE(cond, msg)                 \
  do {                                           \
    if (!(cond)) throw ::lcsum::ContractError(msg); \
  } while (0)

}  // namespace lcsum
