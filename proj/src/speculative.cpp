#include "agentos/speculative.hpp"

namespace agentos::speculative {

std::string_view to_string(ValidationReason r) {
  switch (r) {
    case ValidationReason::Ok: return "Ok";
    case ValidationReason::TargetRequired: return "TargetRequired";
    case ValidationReason::ControlMissing: return "ControlMissing";
    case ValidationReason::ControlInvisible: return "ControlInvisible";
    case ValidationReason::ControlDisabled: return "ControlDisabled";
    case ValidationReason::ApiUnregistered: return "ApiUnregistered";
    case ValidationReason::SchemaViolation: return "SchemaViolation";
  }
  return "?";
}

Validation validate(const PlannedAction& action, const Observation& context, const puppeteer::ApiRegistry& registry) {
  auto fail = [](ValidationReason r, std::string detail) { return Validation{false, r, std::move(detail)}; };

  if (action.operation == Operation::ApiCall) {
    const auto name = action.api_name();
    const auto* entry = registry.find(context.app_id, name);
    const bool has_fallback = !action.gui_fallback().empty();
    if (!entry) {
      if (has_fallback) return {};
      return fail(ValidationReason::ApiUnregistered, "API '" + name + "' not registered for " + context.app_id);
    }
    if (auto violation = puppeteer::validate_args(entry->spec, action.api_args())) {
      if (has_fallback) return {};
      return fail(ValidationReason::SchemaViolation, *violation);
    }
    return {};
  }

  if (!action.target) return fail(ValidationReason::TargetRequired, "GUI action without target");
  const Control* c = context.find(*action.target);
  if (!c) return fail(ValidationReason::ControlMissing, "control '" + *action.target + "' not in current context");
  // Break when either predicate fails.
  if (!c->enabled) return fail(ValidationReason::ControlDisabled, "control '" + c->id + "' is disabled");
  if (!c->visible || c->stale) return fail(ValidationReason::ControlInvisible, "control '" + c->id + "' is not visible");
  return {};
}

ActionOutcome PuppeteerExecutor::execute(const PlannedAction& action, const Observation& context) {
  return puppeteer_.execute(app_id_, action, context);
}

Observation PuppeteerExecutor::refresh() {
  return detection::perceive(desktop_, app_id_, detector_, fusion_).observation;
}

ExecutionReport run_batch(const SpeculativeBatch& batch, Observation c0, const puppeteer::ApiRegistry& registry,
                          ActionExecutor& executor, std::size_t max_k, const BatchHooks& hooks) {
  batch.check(max_k);

  ExecutionReport report;
  Observation context = std::move(c0);
  for (std::size_t i = 0; i < batch.k(); ++i) {
    const auto& action = batch.actions[i];
    if (hooks.cancelled && hooks.cancelled()) {
      report.halted_early = true;
      report.halt_reason = HaltReason::ExecutionError;
      report.halt_detail = "cancelled";
      break;
    }

    const auto check = validate(action, context, registry);
    if (hooks.on_validate) hooks.on_validate(i, action, check);
    if (!check.ok) {
      report.halted_early = true;
      report.halt_reason = HaltReason::ValidationFailed;
      report.halt_detail = std::string(to_string(check.reason)) + ": " + check.detail;
      report.failed = ExecutedAction{action, ActionOutcome::failure(ErrorCode::InvalidArgument, check.detail)};
      break;
    }

    ExecutedAction done{action, executor.execute(action, context)};
    if (hooks.on_execute) hooks.on_execute(i, done);
    if (!done.outcome.ok()) {
      report.halted_early = true;
      report.halt_reason = HaltReason::ExecutionError;
      report.halt_detail = std::string(to_string(done.outcome.error.value_or(ErrorCode::InvalidArgument))) + ": " +
                           done.outcome.message;
      report.failed = std::move(done);
      try {
        context = executor.refresh();
      } catch (const Error&) {
        // App gone; keep the last context.
      }
      break;
    }
    report.executed.push_back(std::move(done));
    context = executor.refresh();
  }
  report.final_context = std::move(context);
  return report;
}

}  // namespace agentos::speculative
