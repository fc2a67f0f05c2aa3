#pragma once

// Speculative multi-action execution. One planner call yields a batch; each
// action is validated against the context produced by its predecessors and
// the loop stops at the first action that no longer applies.

#include <cstddef>
#include <functional>
#include <string>

#include "agentos/detection.hpp"
#include "agentos/domain.hpp"
#include "agentos/puppeteer.hpp"

namespace agentos::speculative {

inline constexpr std::size_t kDefaultMaxBatch = 5;

enum class ValidationReason {
  Ok,
  TargetRequired,
  ControlMissing,
  ControlInvisible,
  ControlDisabled,
  ApiUnregistered,
  SchemaViolation,
};

std::string_view to_string(ValidationReason r);

struct Validation {
  bool ok = true;
  ValidationReason reason = ValidationReason::Ok;
  std::string detail;
};

/// GUI actions: target present, visible and enabled in `context`.
/// ApiCall: registered for the app with valid arguments, or carrying a GUI fallback.
Validation validate(const PlannedAction& action, const Observation& context, const puppeteer::ApiRegistry& registry);

/// Seam between the loop and the desktop.
class ActionExecutor {
 public:
  virtual ~ActionExecutor() = default;
  virtual ActionOutcome execute(const PlannedAction& action, const Observation& context) = 0;
  virtual Observation refresh() = 0;
};

/// Executes through the puppeteer and refreshes via the perception pipeline.
class PuppeteerExecutor : public ActionExecutor {
 public:
  PuppeteerExecutor(puppeteer::Puppeteer& puppeteer, const simenv::Desktop& desktop, std::string app_id,
                    detection::VisionDetector* detector, detection::FusionOptions fusion = {})
      : puppeteer_(puppeteer), desktop_(desktop), app_id_(std::move(app_id)), detector_(detector), fusion_(fusion) {}

  ActionOutcome execute(const PlannedAction& action, const Observation& context) override;
  Observation refresh() override;

 private:
  puppeteer::Puppeteer& puppeteer_;
  const simenv::Desktop& desktop_;
  std::string app_id_;
  detection::VisionDetector* detector_;
  detection::FusionOptions fusion_;
};

struct BatchHooks {
  std::function<void(std::size_t index, const PlannedAction&, const Validation&)> on_validate;
  std::function<void(std::size_t index, const ExecutedAction&)> on_execute;
  /// Polled before each action; true halts the batch.
  std::function<bool()> cancelled;
};

/// Throws InvalidArgument for an empty batch or one larger than max_k.
ExecutionReport run_batch(const SpeculativeBatch& batch, Observation c0, const puppeteer::ApiRegistry& registry,
                          ActionExecutor& executor, std::size_t max_k = kDefaultMaxBatch,
                          const BatchHooks& hooks = {});

}  // namespace agentos::speculative
