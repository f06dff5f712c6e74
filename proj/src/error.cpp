// SPDX-License-Identifier: Apache-2.0
#include "eulerbound/error.hpp"

namespace eb {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Domain: return "domain_error";
    case ErrorCode::Config: return "config_error";
    case ErrorCode::ConstantInfeasible: return "constant_infeasible";
    case ErrorCode::Admissibility: return "admissibility_error";
    case ErrorCode::NumericalBlowup: return "numerical_blowup";
    case ErrorCode::Size: return "size_error";
    case ErrorCode::Quadrature: return "quadrature_error";
    case ErrorCode::Verification: return "verification_failure";
  }
  return "unknown";
}

int exit_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Config:
    case ErrorCode::Domain:
    case ErrorCode::Size:
      return 2;
    case ErrorCode::ConstantInfeasible:
    case ErrorCode::Admissibility:
      return 3;
    case ErrorCode::NumericalBlowup:
      return 4;
    case ErrorCode::Quadrature:
    case ErrorCode::Verification:
      return 5;
  }
  return 1;
}

}  // namespace eb
