#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace plaway {

enum class ErrorKind {
  Syntax,
  Unsupported,
  Undeclared,
  Semantic,
  TypeMismatch,
  Arithmetic,
  IterationCap,
  Oracle,
  Data,
  Internal,
};

std::string_view error_kind_name(ErrorKind kind);

/// Every failure raised by the compiler, the interpreters and the runtime.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace plaway
