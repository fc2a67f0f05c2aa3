#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace agentos {

enum class ErrorCode {
  // simenv
  UnknownApp,
  AppNotRunning,
  ControlNotFound,
  ControlDisabled,
  NoMatchingRule,
  AppCrashed,
  MalformedCatalog,
  // puppeteer
  DuplicateApi,
  MissingBinding,
  SchemaViolation,
  ApiHandlerError,
  // safeguard
  MalformedRule,
  // planner
  BackendUnavailable,
  PlannerOutputMalformed,
  // agents
  IllegalTransition,
  InvalidRequest,
  BudgetExhausted,
  NotPending,
  Cancelled,
  // blackboard / session
  SessionClosed,
  RoundInProgress,
  ScenarioCriteriaMissing,
  CatalogMismatch,
  // knowledge
  MalformedRecord,
  // generic
  InvalidArgument,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Runtime error carrying a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace agentos
