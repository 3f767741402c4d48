#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace srm {

enum class ErrorCode {
  parse,         // malformed input file
  validation,    // input violates a documented invariant
  hash_mismatch, // template / scalp / field / model disagree
  degenerate,    // geometry too degenerate to proceed
  argument,      // bad parameter value
  io,            // file system failure
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace srm
