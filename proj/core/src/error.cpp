#include "fsstdef/error.hpp"

namespace fsstdef {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::parse: return "parse error";
    case ErrorCode::format: return "format error";
    case ErrorCode::insufficient_data: return "insufficient data";
    case ErrorCode::unrecoverable_data: return "unrecoverable data";
    case ErrorCode::parameter: return "parameter error";
    case ErrorCode::contract_violation: return "contract violation";
    case ErrorCode::undefined_entropy: return "undefined entropy";
    case ErrorCode::no_ridge: return "no ridge";
    case ErrorCode::data: return "data error";
  }
  return "error";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

ParseError::ParseError(std::size_t line, const std::string& message)
    : Error(ErrorCode::parse, "line " + std::to_string(line) + ": " + message), line_(line) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace fsstdef
