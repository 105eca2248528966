#pragma once

#include <stdexcept>
#include <string>

namespace shufflecast {

/// Bad input from a caller: out-of-range IDs, invalid parameters, malformed files.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A checked structural property did not hold. Always indicates a bug.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ValidationError(what);
}

inline void check_invariant(bool cond, const std::string& what) {
  if (!cond) throw InvariantViolation(what);
}

}  // namespace shufflecast
