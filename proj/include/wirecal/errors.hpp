#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace wirecal {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model, plan or log does not have the shape an operation needs
/// (nonexistent joint, missing measurements, mismatched sizes).
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Non-finite input or intermediate value.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Wire direction undefined: the calibration point coincides with the anchor.
class DegenerateDirectionError : public Error {
 public:
  using Error::Error;
};

/// Wire would extend past the encoder's range.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Least-squares design matrix lacks full column rank.
class RankDeficiencyError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Carries the offending location.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Greedy ordering got stuck: no remaining parameter can be isolated.
class OrderingFailure : public Error {
 public:
  OrderingFailure(std::vector<std::string> partial, std::vector<std::string> stuck);

  const std::vector<std::string>& partial() const noexcept { return partial_; }
  const std::vector<std::string>& stuck() const noexcept { return stuck_; }

 private:
  std::vector<std::string> partial_;
  std::vector<std::string> stuck_;
};

}  // namespace wirecal
