#include "mcbf/types.hpp"

namespace mcbf {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid argument";
    case ErrorCode::degenerate_instance: return "degenerate instance";
    case ErrorCode::degenerate_anchor: return "degenerate anchor";
    case ErrorCode::cannot_certify: return "cannot certify";
    case ErrorCode::numerical_degeneracy: return "numerical degeneracy";
    case ErrorCode::refused: return "refused";
    case ErrorCode::config: return "config error";
  }
  return "unknown";
}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace mcbf
