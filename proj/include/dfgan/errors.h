#pragma once

#include <stdexcept>
#include <string>

namespace dfgan {

/// Invalid shapes, unknown enum values, out-of-range hyperparameters.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// NaN/Inf produced by a forward pass, a loss or an optimizer update.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A tape was replayed after the parameters it recorded were modified.
class StaleTapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Batch normalization asked to normalize fewer than two rows in train mode.
class DegenerateBatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The filtered-matching system (I + C_eps) q = 2t has no unique solution.
class NonUniqueError : public std::runtime_error {
 public:
  NonUniqueError(const std::string& what, double min_gap)
      : std::runtime_error(what), min_gap_(min_gap) {}
  double min_gap() const noexcept { return min_gap_; }

 private:
  double min_gap_;
};

/// Checkpoint / CSV / manifest I/O failures.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dfgan
