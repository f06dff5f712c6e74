// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace eb {

enum class ErrorCode {
  Domain,
  Config,
  ConstantInfeasible,
  Admissibility,
  NumericalBlowup,
  Size,
  Quadrature,
  Verification,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

const char* error_code_name(ErrorCode code) noexcept;

// CLI exit status for an error code
int exit_status(ErrorCode code) noexcept;

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace eb
