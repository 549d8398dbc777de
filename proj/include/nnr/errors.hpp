#pragma once

#include <stdexcept>

namespace nnr {

/// Operand shapes are incompatible with an op's contract.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Input is well-typed but degenerate (empty sequence, fully masked row, ...).
struct DegenerateInputError : std::domain_error {
  using std::domain_error::domain_error;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct IndexError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AccountingError : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace nnr
