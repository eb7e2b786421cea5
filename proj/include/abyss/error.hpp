#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace abyss {

/// Caller passed something outside an operation's precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// No JPEG quality level fits the requested byte budget.
class BudgetInfeasible : public std::runtime_error {
 public:
  BudgetInfeasible(std::size_t budget, std::size_t smallest)
      : std::runtime_error("jpeg budget of " + std::to_string(budget) +
                           " bytes is infeasible; smallest encoding is " +
                           std::to_string(smallest) + " bytes"),
        budget_(budget),
        smallest_(smallest) {}

  std::size_t budget() const noexcept { return budget_; }
  std::size_t smallest_size() const noexcept { return smallest_; }

 private:
  std::size_t budget_;
  std::size_t smallest_;
};

/// Malformed or truncated image byte stream.
class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Model/checkpoint configuration does not match what was requested.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite value reached a loss or objective.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace abyss
