#pragma once

#include <stdexcept>
#include <string>

namespace ldmatrix {

// Raised for malformed configuration, invalid ensembles, or out-of-domain
// arguments.  The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when a numerical procedure fails to meet its contract (no root in
// bracket, divergence, budget exceeded, ...).  The CLI maps this to exit
// code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ldmatrix
