#pragma once

#include <stdexcept>
#include <string>

namespace artik {

// Base class for all library errors. Subclasses name the failure condition;
// the CLI maps them onto exit codes (parse/config -> 2, numerical -> 3).
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Input file or schema violation.
struct ParseError : Error {
  using Error::Error;
};

// Invalid configuration value (non-positive threshold, empty box, ...).
struct ConfigError : Error {
  using Error::Error;
};

// File could not be read or written.
struct IoError : Error {
  using Error::Error;
};

// Vector/matrix sizes disagree with the model they are applied to.
struct DimensionMismatch : Error {
  using Error::Error;
};

// Pair fit requested on frames with no usable rotation between them.
struct DegenerateRotation : Error {
  using Error::Error;
};

// Pair fit requested on frames with no usable translation between them.
struct DegenerateTranslation : Error {
  using Error::Error;
};

// Articulated-body inertia lost positive definiteness.
struct SingularInertia : Error {
  using Error::Error;
};

// A finite-difference probe produced a non-finite loss value.
struct NonFiniteLoss : Error {
  using Error::Error;
};

// Parameter vector left its configured box.
struct LimitViolation : Error {
  using Error::Error;
};

// Every sampled control rollout diverged; no plan can be formed.
struct AllRolloutsDiverged : Error {
  using Error::Error;
};

}  // namespace artik
