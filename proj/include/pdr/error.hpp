// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace pdr {

// Shape or rank disagreement between operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Bad caller-supplied argument (counts out of range, empty clouds, ...).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Invalid hyperparameters or manifest content. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Missing, truncated or malformed files. CLI exit code 3.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// NaN/Inf encountered during training. CLI exit code 4.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Misuse of the autodiff tape (double backward, detached loss, ...).
class TapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace pdr
