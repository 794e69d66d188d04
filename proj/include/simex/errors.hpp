#pragma once

#include <stdexcept>
#include <string>

namespace simex {

// Malformed input: unparseable files, unknown config keys, bad JSON,
// incompatible checkpoint versions.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated precondition on values: out-of-range ids, self-loops, negative
// weights, bad option combinations.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape mismatch between containers that must agree (feature rows vs node
// count, weight vector vs edge count, parameter dimensions).
class DimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure at run time: non-finite loss, diverged optimization.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A node embedding has zero norm, so cosine similarity is undefined.
class DegenerateEmbedding : public NumericError {
 public:
  using NumericError::NumericError;
};

// Filesystem failure while reading or writing artifacts.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace simex
