#include "sparse_lq/errors.h"

namespace sparse_lq {

const char* ToString(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kInvalidArgument:
      return "invalid-argument";
    case ErrorCategory::kConvergence:
      return "convergence";
    case ErrorCategory::kDivergence:
      return "divergence";
    case ErrorCategory::kNumerical:
      return "numerical";
    case ErrorCategory::kStability:
      return "stability";
    case ErrorCategory::kGeneration:
      return "generation";
    case ErrorCategory::kBudget:
      return "budget";
    case ErrorCategory::kSelection:
      return "selection";
    case ErrorCategory::kConfig:
      return "config";
    case ErrorCategory::kIo:
      return "io";
  }
  return "unknown";
}

}  // namespace sparse_lq
