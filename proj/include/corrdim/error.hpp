#pragma once

#include <stdexcept>
#include <string>

namespace corrdim {

enum class ErrorCode {
  io,
  bad_magic,
  unsupported_version,
  truncated_payload,
  invalid_entry,
  invariant_violation,
  dimension_mismatch,
  infinite_entry,
  invalid_argument,
  degenerate_point_set,
  missing_token_ids,
};

const char* to_string(ErrorCode code);

// Every library failure, tagged with a code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace corrdim
