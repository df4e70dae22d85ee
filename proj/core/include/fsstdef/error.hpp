#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fsstdef {

enum class ErrorCode {
  parse,
  format,
  insufficient_data,
  unrecoverable_data,
  parameter,
  contract_violation,
  undefined_entropy,
  no_ridge,
  data,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Malformed input row. `line()` is 1-based and counts the header.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message);

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace fsstdef
