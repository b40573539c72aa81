#pragma once

#include <stdexcept>
#include <string>

namespace cpl {

// Bad arguments, malformed files, precondition violations. CLI exit code 2.
struct input_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite values or failed factorizations during computation. CLI exit code 3.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cpl
