#pragma once

// Core value types shared by every runtime module, plus their canonical JSON
// form. Canonical JSON is nlohmann's dump() of these objects: object keys are
// sorted, so equal values always serialize to identical bytes.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "agentos/error.hpp"

namespace agentos {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Geometry

struct BoundingBox {
  int left = 0;
  int top = 0;
  int right = 0;
  int bottom = 0;

  bool valid() const { return left <= right && top <= bottom; }
  std::int64_t width() const { return std::int64_t{right} - left; }
  std::int64_t height() const { return std::int64_t{bottom} - top; }
  std::int64_t area() const { return width() * height(); }
  int center_x() const { return left + (right - left) / 2; }
  int center_y() const { return top + (bottom - top) / 2; }
  bool contains(int x, int y) const {
    return x >= left && x < right && y >= top && y < bottom;
  }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Exact non-negative fraction. Comparisons are done by cross multiplication
/// in 128-bit arithmetic, never through floating point.
struct Ratio {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }
  bool greater_than(Ratio other) const {
    return static_cast<__int128>(num) * other.den > static_cast<__int128>(other.num) * den;
  }
  friend bool operator==(Ratio a, Ratio b) {
    return static_cast<__int128>(a.num) * b.den == static_cast<__int128>(b.num) * a.den;
  }
};

std::int64_t intersection_area(const BoundingBox& a, const BoundingBox& b);

/// Intersection over union. Zero-area unions yield 0.
Ratio iou(const BoundingBox& a, const BoundingBox& b);

// ---------------------------------------------------------------------------
// Controls and observations

enum class ControlSource { Accessibility, Vision };

struct Control {
  std::string id;
  ControlSource source = ControlSource::Accessibility;
  std::string control_type;
  std::string label;
  BoundingBox box;
  bool visible = true;
  bool enabled = true;
  std::optional<int> som_mark;
  std::optional<double> confidence;  // vision-sourced only
  bool stale = false;

  friend bool operator==(const Control&, const Control&) = default;
};

struct Observation {
  std::string app_id;
  std::string screenshot_ref;
  std::vector<Control> controls;
  std::uint64_t timestamp = 0;

  const Control* find(std::string_view id) const;

  friend bool operator==(const Observation&, const Observation&) = default;
};

// ---------------------------------------------------------------------------
// Actions

enum class Operation { Click, TypeText, Hotkey, ApiCall };

bool is_gui(Operation op);

/// One planned step. Payload shapes:
///   TypeText {"text": str}; Hotkey {"keys": str};
///   ApiCall  {"api": str, "args": {...}, "gui_fallback": [PlannedAction...]}.
struct PlannedAction {
  std::optional<std::string> target;
  Operation operation = Operation::Click;
  Json payload = Json::object();
  std::string rationale;

  static PlannedAction click(std::string target, std::string rationale = {});
  static PlannedAction type_text(std::string target, std::string text);
  static PlannedAction hotkey(std::string target, std::string keys);
  static PlannedAction api_call(std::string api, Json args, std::string rationale = {});

  std::string api_name() const;
  Json api_args() const;
  /// Planner-supplied GUI steps to run if the API path fails; empty if none.
  std::vector<PlannedAction> gui_fallback() const;
  /// Short human-readable form, e.g. `Click save_button` or `ApiCall save_as(format=csv)`.
  std::string describe() const;

  friend bool operator==(const PlannedAction&, const PlannedAction&) = default;
};

struct SpeculativeBatch {
  std::vector<PlannedAction> actions;

  std::size_t k() const { return actions.size(); }
  /// Throws InvalidArgument unless 1 <= k <= max_k.
  void check(std::size_t max_k) const;
};

enum class OutcomeStatus { Success, NoOp, Error };

struct ActionOutcome {
  OutcomeStatus status = OutcomeStatus::Success;
  std::optional<ErrorCode> error;
  std::string message;
  bool fell_back = false;
  int executor_actions = 0;  // simulated-desktop actions this step consumed
  Json result = Json::object();

  bool ok() const { return status != OutcomeStatus::Error; }

  static ActionOutcome failure(ErrorCode code, std::string message);
};

struct ExecutedAction {
  PlannedAction action;
  ActionOutcome outcome;
};

enum class HaltReason { None, ValidationFailed, ExecutionError };

struct ExecutionReport {
  std::vector<ExecutedAction> executed;
  bool halted_early = false;
  HaltReason halt_reason = HaltReason::None;
  std::string halt_detail;
  std::optional<ExecutedAction> failed;  // the action that stopped the loop
  Observation final_context;

  bool replan() const { return halted_early; }
  int executor_actions() const;
};

// ---------------------------------------------------------------------------
// Planning and agent state

struct Subtask {
  std::string description;
  std::string target_app;
  std::vector<std::size_t> depends_on;
};

struct SubtaskPlan {
  std::vector<Subtask> subtasks;
  std::string origin_request;

  /// Every dependency must point at an earlier subtask, which also rules out cycles.
  void validate() const;
};

enum class HostState { Continue, Assign, Pending, Finish, Fail };
enum class AppState { Continue, Pending, Finish, Fail };

enum class EntryKind { Result, Error, Insight, Metadata };

struct BlackboardEntry {
  std::uint64_t seq = 0;
  std::string author;
  EntryKind kind = EntryKind::Insight;
  Json body = Json::object();
  int round = 0;

  friend bool operator==(const BlackboardEntry&, const BlackboardEntry&) = default;
};

// ---------------------------------------------------------------------------
// Enum names

std::string_view to_string(ControlSource v);
std::string_view to_string(Operation v);
std::string_view to_string(OutcomeStatus v);
std::string_view to_string(HaltReason v);
std::string_view to_string(HostState v);
std::string_view to_string(AppState v);
std::string_view to_string(EntryKind v);

ControlSource parse_control_source(std::string_view s);
Operation parse_operation(std::string_view s);
HostState parse_host_state(std::string_view s);
AppState parse_app_state(std::string_view s);
EntryKind parse_entry_kind(std::string_view s);
HaltReason parse_halt_reason(std::string_view s);
OutcomeStatus parse_outcome_status(std::string_view s);
ErrorCode parse_error_code(std::string_view s);

// ---------------------------------------------------------------------------
// JSON

void to_json(Json& j, const BoundingBox& v);
void from_json(const Json& j, BoundingBox& v);
void to_json(Json& j, const Control& v);
void from_json(const Json& j, Control& v);
void to_json(Json& j, const Observation& v);
void from_json(const Json& j, Observation& v);
void to_json(Json& j, const PlannedAction& v);
void from_json(const Json& j, PlannedAction& v);
void to_json(Json& j, const SpeculativeBatch& v);
void from_json(const Json& j, SpeculativeBatch& v);
void to_json(Json& j, const ActionOutcome& v);
void from_json(const Json& j, ActionOutcome& v);
void to_json(Json& j, const ExecutedAction& v);
void from_json(const Json& j, ExecutedAction& v);
void to_json(Json& j, const ExecutionReport& v);
void from_json(const Json& j, ExecutionReport& v);
void to_json(Json& j, const Subtask& v);
void from_json(const Json& j, Subtask& v);
void to_json(Json& j, const SubtaskPlan& v);
void from_json(const Json& j, SubtaskPlan& v);
void to_json(Json& j, const BlackboardEntry& v);
void from_json(const Json& j, BlackboardEntry& v);

/// Canonical serialization used for hashing and trace files.
std::string canonical(const Json& j);

}  // namespace agentos
