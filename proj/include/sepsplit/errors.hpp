#pragma once

#include <stdexcept>
#include <string>

namespace sepsplit {

// Bad input: malformed model files, violated preconditions, out-of-scope regimes.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A computation that was well posed but could not be carried out to the
// requested accuracy (step underflow, divergence, precision exhausted, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sepsplit
