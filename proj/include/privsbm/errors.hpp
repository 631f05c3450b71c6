#pragma once

#include <stdexcept>
#include <string>

namespace privsbm {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Parameter outside its admissible range (n, r, epsilon, probabilities, ...).
struct OutOfRangeError : Error {
  using Error::Error;
};

// Two containers that must describe the same vertex set do not.
struct SizeMismatchError : Error {
  using Error::Error;
};

// Input outside the mathematical domain of a formula (log of 0, p=1, ...).
struct DomainError : Error {
  using Error::Error;
};

// Exhaustive search or enumeration would exceed the configured budget.
struct TooLargeError : Error {
  using Error::Error;
};

// Spectral structure too ambiguous to round into a labeling.
struct DegenerateSpectrumError : Error {
  using Error::Error;
};

// Requested privacy budget below the mechanism's admissible floor.
struct EpsilonBelowFloorError : Error {
  using Error::Error;
};

// (mechanism, r) or similar pair for which no formula is defined.
struct UnsupportedCombinationError : Error {
  using Error::Error;
};

// A selection step ended with an empty candidate set.
struct EmptySelectionError : Error {
  using Error::Error;
};

// Malformed text input; message carries the 1-based line number.
struct ParseError : Error {
  using Error::Error;
};

// Edge list contains u-u.
struct SelfLoopError : Error {
  using Error::Error;
};

// Labels file length does not match the vertex count.
struct LabelCountMismatchError : Error {
  using Error::Error;
};

// Filesystem-level failure (missing file, unwritable path).
struct IoError : Error {
  using Error::Error;
};

}  // namespace privsbm
