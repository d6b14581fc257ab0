#pragma once

#include <stdexcept>
#include <string>

namespace vdlab {

// Raised for bad user input: missing files, malformed configs, exhausted
// pools. The CLI maps this to exit code 2; everything else exits 1.
class UserError : public std::runtime_error {
 public:
  explicit UserError(const std::string& msg) : std::runtime_error(msg) {}
};

[[noreturn]] inline void fail(const std::string& msg) { throw UserError(msg); }

}  // namespace vdlab
