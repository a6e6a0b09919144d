#include "cefe/errors.hpp"

namespace cefe {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInput: return "empty_input";
    case ErrorCode::Parse: return "parse_error";
    case ErrorCode::Schema: return "schema_error";
    case ErrorCode::Io: return "io_error";
    case ErrorCode::Domain: return "domain_error";
    case ErrorCode::InjectionInfeasible: return "injection_infeasible";
    case ErrorCode::EmptyPool: return "empty_pool";
    case ErrorCode::Translation: return "translation_error";
    case ErrorCode::EmptyAggregation: return "empty_aggregation";
    case ErrorCode::MissingClass: return "missing_class";
    case ErrorCode::Shape: return "shape_error";
    case ErrorCode::Config: return "config_error";
    case ErrorCode::Alignment: return "alignment_error";
    case ErrorCode::Usage: return "usage_error";
  }
  return "unknown_error";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Usage:
      return 2;
    case ErrorCode::Config:
    case ErrorCode::Domain:
      return 3;
    default:
      return 1;
  }
}

}  // namespace cefe
