#pragma once

#include <stdexcept>
#include <string>

namespace morsel {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Ill-formed tree / alignment / segmentation.
struct ValidationError : Error {
  using Error::Error;
};

// Canonical form longer than the insertion budget allows.
struct BudgetError : Error {
  using Error::Error;
};

// Exact-enumeration helpers refuse instances beyond their size guards.
struct GuardError : Error {
  using Error::Error;
};

// Problems in input files (format, line numbers in message).
struct DataError : Error {
  using Error::Error;
};

// Bad configuration (unknown metric name, empty grid, ...).
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace morsel
