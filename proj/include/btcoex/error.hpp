#pragma once

#include <stdexcept>
#include <string>

namespace btcoex {

// Raised when an operation's input violates its documented shape or range.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Zero channel gain on a data subcarrier that is not erased.
class DegenerateChannel : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace btcoex
