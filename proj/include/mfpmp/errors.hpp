#pragma once

#include <stdexcept>
#include <string>

namespace mfpmp {

// Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Maps to CLI exit code 2. Raised when a trajectory leaves the hard
// support cap or produces a non-finite value.
class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(const std::string& msg, int step_index)
      : std::runtime_error(msg + " (step " + std::to_string(step_index) + ")"),
        step(step_index) {}
  int step;
};

// Maps to CLI exit code 3 where a hard failure is wanted; the sweep
// itself returns a warning bundle instead of throwing.
class NonConvergence : public std::runtime_error {
 public:
  explicit NonConvergence(const std::string& msg) : std::runtime_error(msg) {}
};

// Measure support outside the configured phase-space ball: the
// constrained Hamiltonian is +infinity there and evaluators refuse.
class SupportViolation : public std::runtime_error {
 public:
  explicit SupportViolation(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mfpmp
