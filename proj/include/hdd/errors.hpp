#pragma once

#include <stdexcept>
#include <string>

namespace hdd {

// Invalid or inconsistent input data (bad files, malformed matrices,
// degenerate parameter combinations). CLI exit code 2.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure inside an otherwise valid computation (non-convergent
// eigensolver, stochasticity violated beyond tolerance). CLI exit code 3.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace hdd
