#pragma once

#include <stdexcept>
#include <string>

namespace krs {

// Shape or size disagreement between operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside its documented domain (epsilon range, zero counts, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite input, singular system, degenerate baseline.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An oracle-only path was asked to build something larger than its cap.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input file with a missing or mismatched schema header or malformed rows.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace krs
