#pragma once

#include <stdexcept>
#include <string>

namespace martonlab {

/// Malformed or out-of-range input (bad simplex, mismatched dimensions, ...).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Alphabet or grid exceeds what an operation supports.
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// A deterministic map cannot carry the requested input law.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A formula needs strictly positive probabilities and did not get them.
class DegeneracyError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace martonlab
