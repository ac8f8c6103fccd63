#pragma once

#include <stdexcept>
#include <string>

namespace mss {

// Raised for bad user input: malformed configs, out-of-domain parameters,
// unreadable files.  The CLI maps this to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// Raised for failures after inputs validated (I/O faults, resource limits).
// The CLI maps this to exit code 2.
class RuntimeFault : public std::runtime_error {
 public:
  explicit RuntimeFault(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mss
