#pragma once

#include <stdexcept>
#include <string>

namespace ehsim {

// A policy asked the battery to spend more than it holds. Policies are
// required to respect energy neutrality, so this is a logic bug, not a
// recoverable condition.
class NeutralityViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// An iteration (series sum, continued fraction, bisection) failed to meet
// its tolerance within the configured iteration budget.
class NonConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Root bracketing failed: f(lo) and f(hi) do not straddle zero.
class BracketError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The configuration is valid input but outside the regime the analysis
// supports (e.g. arrival median larger than the battery capacity).
class UnsupportedRegime : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or out-of-range user configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace ehsim
