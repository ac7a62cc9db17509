#include "rvarena/error.hpp"

namespace rvarena {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::missing_offset: return "missing_offset";
    case ErrorKind::degenerate_covariance: return "degenerate_covariance";
    case ErrorKind::generation_exhausted: return "generation_exhausted";
    case ErrorKind::ingestion: return "ingestion";
    case ErrorKind::invalid_truth: return "invalid_truth";
    case ErrorKind::rejected_submission: return "rejected_submission";
    case ErrorKind::insufficient_data: return "insufficient_data";
    case ErrorKind::degenerate_fit: return "degenerate_fit";
    case ErrorKind::fit_failure: return "fit_failure";
    case ErrorKind::terminal_state: return "terminal_state";
    case ErrorKind::attempt_cap: return "attempt_cap";
    case ErrorKind::budget_exceeded: return "budget_exceeded";
    case ErrorKind::invalid_usage: return "invalid_usage";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::conflict: return "conflict";
    case ErrorKind::protocol: return "protocol";
    case ErrorKind::schema: return "schema";
    case ErrorKind::aggregation: return "aggregation";
  }
  return "unknown";
}

}  // namespace rvarena
