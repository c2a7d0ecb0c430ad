#pragma once

#include <stdexcept>
#include <string>

namespace deskmt {

// Maps to CLI exit code 1.
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad input data or violated data precondition. Maps to CLI exit code 2.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Internal failure at run time (divergence, inconsistent state). Exit code 3.
struct RuntimeFailure : std::runtime_error {
  explicit RuntimeFailure(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace deskmt
