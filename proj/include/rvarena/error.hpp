#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rvarena {

enum class ErrorKind {
  invalid_argument,
  missing_offset,
  degenerate_covariance,
  generation_exhausted,
  ingestion,
  invalid_truth,
  rejected_submission,
  insufficient_data,
  degenerate_fit,
  fit_failure,
  terminal_state,
  attempt_cap,
  budget_exceeded,
  invalid_usage,
  not_found,
  conflict,
  protocol,
  schema,
  aggregation,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace rvarena
