#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bierl {

/// Invalid or inconsistent configuration (bad ranges, sizes, unknown keys).
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition between already-valid objects was broken,
/// e.g. mismatched vector lengths.
class InvariantError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// Operation called in a state that does not support it (empty buffer...).
class StateError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed or incompatible file contents.
class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A fitness evaluation produced a non-finite value. `index` is the
/// individual within the population, `repetition` the lookahead repeat
/// (or -1 when not applicable).
class EvaluationError : public std::runtime_error {
public:
  EvaluationError(const std::string& what, std::ptrdiff_t index, std::ptrdiff_t repetition = -1)
      : std::runtime_error(what), index_(index), repetition_(repetition) {}

  std::ptrdiff_t index() const noexcept { return index_; }
  std::ptrdiff_t repetition() const noexcept { return repetition_; }

private:
  std::ptrdiff_t index_;
  std::ptrdiff_t repetition_;
};

}  // namespace bierl
