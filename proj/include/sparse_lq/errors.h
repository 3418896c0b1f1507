#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sparse_lq {

/// Broad failure classes. The CLI maps each class onto a process exit code.
enum class ErrorCategory {
  kInvalidArgument,
  kConvergence,
  kDivergence,
  kNumerical,
  kStability,
  kGeneration,
  kBudget,
  kSelection,
  kConfig,
  kIo,
};

const char* ToString(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what)
      : Error(ErrorCategory::kInvalidArgument, what) {}
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_residual)
      : Error(ErrorCategory::kConvergence, what),
        last_residual_(last_residual) {}

  double last_residual() const { return last_residual_; }

 private:
  double last_residual_;
};

/// Raised when a simulated state leaves the configured divergence cap.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::int64_t step)
      : Error(ErrorCategory::kDivergence, what), step_(step) {}

  std::int64_t step() const { return step_; }

 private:
  std::int64_t step_;
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorCategory::kNumerical, what) {}
};

/// Closed loop is not contractive; carries the offending norm.
class StabilityError : public Error {
 public:
  StabilityError(const std::string& what, double norm)
      : Error(ErrorCategory::kStability, what), norm_(norm) {}

  double norm() const { return norm_; }

 private:
  double norm_;
};

class GenerationError : public Error {
 public:
  explicit GenerationError(const std::string& what)
      : Error(ErrorCategory::kGeneration, what) {}
};

class BudgetError : public Error {
 public:
  explicit BudgetError(const std::string& what)
      : Error(ErrorCategory::kBudget, what) {}
};

class SelectionError : public Error {
 public:
  explicit SelectionError(const std::string& what)
      : Error(ErrorCategory::kSelection, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorCategory::kConfig, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::kIo, what) {}
};

inline void Require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

}  // namespace sparse_lq
