#pragma once

#include <stdexcept>
#include <string>

namespace smbo {

/// Raised for bad user input: malformed files, invalid assignments, config
/// mismatches. Anything else escaping the library is an internal fault.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The evaluator could not run at all (e.g. the training command cannot be
/// spawned). Aborts an optimization run; the store keeps what was written.
class HardFault : public Error {
 public:
  using Error::Error;
};

}  // namespace smbo
