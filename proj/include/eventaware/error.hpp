#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace eventaware {

enum class ErrorKind {
  parse,
  empty_corpus,
  duplicate_id,
  missing_assignment,
  invalid_metadata,
  undefined_distribution,
  spec_validation,
  config,
  shape,
  index,
  numeric,
  parameter,
  io,
  compatibility,
  empty_evaluation,
  mode,
};

std::string_view to_string(ErrorKind kind);

/// Exception carrying a machine-readable kind. The CLI maps kinds to exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// 1 for internal/numeric failures, 2 for usage/input problems.
int exit_code_for(ErrorKind kind);

}  // namespace eventaware
