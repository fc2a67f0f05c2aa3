#include "agentos/domain.hpp"

#include <algorithm>
#include <array>
#include <utility>

namespace agentos {

namespace {

template <typename E, std::size_t N>
using NameTable = std::array<std::pair<E, std::string_view>, N>;

template <typename E, std::size_t N>
std::string_view lookup_name(const NameTable<E, N>& table, E v) {
  for (const auto& [e, name] : table) {
    if (e == v) return name;
  }
  return "?";
}

template <typename E, std::size_t N>
E lookup_value(const NameTable<E, N>& table, std::string_view s, std::string_view what) {
  for (const auto& [e, name] : table) {
    if (name == s) return e;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown " + std::string(what) + ": '" + std::string(s) + "'");
}

constexpr NameTable<ErrorCode, 26> kErrorNames{{
    {ErrorCode::UnknownApp, "UnknownApp"},
    {ErrorCode::AppNotRunning, "AppNotRunning"},
    {ErrorCode::ControlNotFound, "ControlNotFound"},
    {ErrorCode::ControlDisabled, "ControlDisabled"},
    {ErrorCode::NoMatchingRule, "NoMatchingRule"},
    {ErrorCode::AppCrashed, "AppCrashed"},
    {ErrorCode::MalformedCatalog, "MalformedCatalog"},
    {ErrorCode::DuplicateApi, "DuplicateApi"},
    {ErrorCode::MissingBinding, "MissingBinding"},
    {ErrorCode::SchemaViolation, "SchemaViolation"},
    {ErrorCode::ApiHandlerError, "ApiHandlerError"},
    {ErrorCode::MalformedRule, "MalformedRule"},
    {ErrorCode::BackendUnavailable, "BackendUnavailable"},
    {ErrorCode::PlannerOutputMalformed, "PlannerOutputMalformed"},
    {ErrorCode::IllegalTransition, "IllegalTransition"},
    {ErrorCode::InvalidRequest, "InvalidRequest"},
    {ErrorCode::BudgetExhausted, "BudgetExhausted"},
    {ErrorCode::NotPending, "NotPending"},
    {ErrorCode::Cancelled, "Cancelled"},
    {ErrorCode::SessionClosed, "SessionClosed"},
    {ErrorCode::RoundInProgress, "RoundInProgress"},
    {ErrorCode::ScenarioCriteriaMissing, "ScenarioCriteriaMissing"},
    {ErrorCode::CatalogMismatch, "CatalogMismatch"},
    {ErrorCode::MalformedRecord, "MalformedRecord"},
    {ErrorCode::InvalidArgument, "InvalidArgument"},
    {ErrorCode::IoError, "IoError"},
}};

constexpr NameTable<ControlSource, 2> kSourceNames{{
    {ControlSource::Accessibility, "accessibility"},
    {ControlSource::Vision, "vision"},
}};

constexpr NameTable<Operation, 4> kOperationNames{{
    {Operation::Click, "Click"},
    {Operation::TypeText, "TypeText"},
    {Operation::Hotkey, "Hotkey"},
    {Operation::ApiCall, "ApiCall"},
}};

constexpr NameTable<OutcomeStatus, 3> kOutcomeNames{{
    {OutcomeStatus::Success, "success"},
    {OutcomeStatus::NoOp, "noop"},
    {OutcomeStatus::Error, "error"},
}};

constexpr NameTable<HaltReason, 3> kHaltNames{{
    {HaltReason::None, "None"},
    {HaltReason::ValidationFailed, "ValidationFailed"},
    {HaltReason::ExecutionError, "ExecutionError"},
}};

constexpr NameTable<HostState, 5> kHostNames{{
    {HostState::Continue, "CONTINUE"},
    {HostState::Assign, "ASSIGN"},
    {HostState::Pending, "PENDING"},
    {HostState::Finish, "FINISH"},
    {HostState::Fail, "FAIL"},
}};

constexpr NameTable<AppState, 4> kAppNames{{
    {AppState::Continue, "CONTINUE"},
    {AppState::Pending, "PENDING"},
    {AppState::Finish, "FINISH"},
    {AppState::Fail, "FAIL"},
}};

constexpr NameTable<EntryKind, 4> kEntryNames{{
    {EntryKind::Result, "Result"},
    {EntryKind::Error, "Error"},
    {EntryKind::Insight, "Insight"},
    {EntryKind::Metadata, "Metadata"},
}};

}  // namespace

std::string_view to_string(ErrorCode v) { return lookup_name(kErrorNames, v); }
std::string_view to_string(ControlSource v) { return lookup_name(kSourceNames, v); }
std::string_view to_string(Operation v) { return lookup_name(kOperationNames, v); }
std::string_view to_string(OutcomeStatus v) { return lookup_name(kOutcomeNames, v); }
std::string_view to_string(HaltReason v) { return lookup_name(kHaltNames, v); }
std::string_view to_string(HostState v) { return lookup_name(kHostNames, v); }
std::string_view to_string(AppState v) { return lookup_name(kAppNames, v); }
std::string_view to_string(EntryKind v) { return lookup_name(kEntryNames, v); }

ErrorCode parse_error_code(std::string_view s) { return lookup_value(kErrorNames, s, "error code"); }
ControlSource parse_control_source(std::string_view s) { return lookup_value(kSourceNames, s, "control source"); }
Operation parse_operation(std::string_view s) { return lookup_value(kOperationNames, s, "operation"); }
OutcomeStatus parse_outcome_status(std::string_view s) { return lookup_value(kOutcomeNames, s, "outcome status"); }
HaltReason parse_halt_reason(std::string_view s) { return lookup_value(kHaltNames, s, "halt reason"); }
HostState parse_host_state(std::string_view s) { return lookup_value(kHostNames, s, "host state"); }
AppState parse_app_state(std::string_view s) { return lookup_value(kAppNames, s, "app state"); }
EntryKind parse_entry_kind(std::string_view s) { return lookup_value(kEntryNames, s, "entry kind"); }

// ---------------------------------------------------------------------------

std::int64_t intersection_area(const BoundingBox& a, const BoundingBox& b) {
  const std::int64_t w = std::int64_t{std::min(a.right, b.right)} - std::max(a.left, b.left);
  const std::int64_t h = std::int64_t{std::min(a.bottom, b.bottom)} - std::max(a.top, b.top);
  if (w <= 0 || h <= 0) return 0;
  return w * h;
}

Ratio iou(const BoundingBox& a, const BoundingBox& b) {
  const std::int64_t inter = intersection_area(a, b);
  const std::int64_t uni = a.area() + b.area() - inter;
  if (uni <= 0) return Ratio{0, 1};
  return Ratio{inter, uni};
}

const Control* Observation::find(std::string_view id) const {
  for (const auto& c : controls) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

bool is_gui(Operation op) { return op != Operation::ApiCall; }

PlannedAction PlannedAction::click(std::string target, std::string rationale) {
  PlannedAction a;
  a.target = std::move(target);
  a.operation = Operation::Click;
  a.rationale = std::move(rationale);
  return a;
}

PlannedAction PlannedAction::type_text(std::string target, std::string text) {
  PlannedAction a;
  a.target = std::move(target);
  a.operation = Operation::TypeText;
  a.payload = Json{{"text", std::move(text)}};
  return a;
}

PlannedAction PlannedAction::hotkey(std::string target, std::string keys) {
  PlannedAction a;
  a.target = std::move(target);
  a.operation = Operation::Hotkey;
  a.payload = Json{{"keys", std::move(keys)}};
  return a;
}

PlannedAction PlannedAction::api_call(std::string api, Json args, std::string rationale) {
  PlannedAction a;
  a.operation = Operation::ApiCall;
  a.payload = Json{{"api", std::move(api)}, {"args", std::move(args)}};
  a.rationale = std::move(rationale);
  return a;
}

std::string PlannedAction::api_name() const {
  if (payload.is_object() && payload.contains("api") && payload["api"].is_string()) {
    return payload["api"].get<std::string>();
  }
  return {};
}

Json PlannedAction::api_args() const {
  if (payload.is_object() && payload.contains("args") && payload["args"].is_object()) return payload["args"];
  return Json::object();
}

std::vector<PlannedAction> PlannedAction::gui_fallback() const {
  std::vector<PlannedAction> steps;
  if (payload.is_object() && payload.contains("gui_fallback") && payload["gui_fallback"].is_array()) {
    for (const auto& s : payload["gui_fallback"]) steps.push_back(s.get<PlannedAction>());
  }
  return steps;
}

namespace {

std::string payload_text(const Json& payload, const char* key) {
  const auto it = payload.find(key);
  if (it == payload.end()) return "";
  return it->is_string() ? it->get<std::string>() : it->dump();
}

}  // namespace

std::string PlannedAction::describe() const {
  std::string out(to_string(operation));
  switch (operation) {
    case Operation::ApiCall: {
      out += " " + api_name() + "(";
      bool first = true;
      const Json args = api_args();
      for (const auto& [k, v] : args.items()) {
        if (!first) out += ", ";
        first = false;
        out += k + "=" + (v.is_string() ? v.get<std::string>() : v.dump());
      }
      out += ")";
      break;
    }
    case Operation::TypeText:
      out += " " + target.value_or("?") + " \"" + payload_text(payload, "text") + "\"";
      break;
    case Operation::Hotkey:
      out += " " + target.value_or("?") + " [" + payload_text(payload, "keys") + "]";
      break;
    case Operation::Click:
      out += " " + target.value_or("?");
      break;
  }
  return out;
}

void SpeculativeBatch::check(std::size_t max_k) const {
  if (actions.empty()) throw Error(ErrorCode::InvalidArgument, "speculative batch is empty");
  if (actions.size() > max_k) {
    throw Error(ErrorCode::InvalidArgument, "batch of " + std::to_string(actions.size()) +
                                                " exceeds maximum batch size " + std::to_string(max_k));
  }
}

ActionOutcome ActionOutcome::failure(ErrorCode code, std::string message) {
  ActionOutcome o;
  o.status = OutcomeStatus::Error;
  o.error = code;
  o.message = std::move(message);
  return o;
}

int ExecutionReport::executor_actions() const {
  int n = 0;
  for (const auto& e : executed) n += e.outcome.executor_actions;
  if (failed) n += failed->outcome.executor_actions;
  return n;
}

void SubtaskPlan::validate() const {
  for (std::size_t i = 0; i < subtasks.size(); ++i) {
    const auto& s = subtasks[i];
    if (s.target_app.empty()) {
      throw Error(ErrorCode::InvalidArgument, "subtask " + std::to_string(i) + " has no target_app");
    }
    for (auto dep : s.depends_on) {
      if (dep >= i) {
        throw Error(ErrorCode::InvalidArgument, "subtask " + std::to_string(i) +
                                                    " depends on non-preceding subtask " + std::to_string(dep));
      }
    }
  }
}

// ---------------------------------------------------------------------------
// JSON

void to_json(Json& j, const BoundingBox& v) { j = Json::array({v.left, v.top, v.right, v.bottom}); }

void from_json(const Json& j, BoundingBox& v) {
  if (j.is_array()) {
    if (j.size() != 4) throw Error(ErrorCode::InvalidArgument, "box must have 4 coordinates");
    v = BoundingBox{j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
  } else {
    v = BoundingBox{j.at("left").get<int>(), j.at("top").get<int>(), j.at("right").get<int>(),
                    j.at("bottom").get<int>()};
  }
  if (!v.valid()) throw Error(ErrorCode::InvalidArgument, "box has left>right or top>bottom");
}

void to_json(Json& j, const Control& v) {
  j = Json{{"id", v.id},           {"source", to_string(v.source)},
           {"control_type", v.control_type}, {"label", v.label},
           {"box", v.box},         {"visible", v.visible},
           {"enabled", v.enabled}};
  j["som_mark"] = v.som_mark ? Json(*v.som_mark) : Json(nullptr);
  if (v.confidence) j["confidence"] = *v.confidence;
  if (v.stale) j["stale"] = true;
}

void from_json(const Json& j, Control& v) {
  v.id = j.at("id").get<std::string>();
  v.source = parse_control_source(j.value("source", "accessibility"));
  v.control_type = j.value("control_type", "");
  v.label = j.value("label", "");
  v.box = j.at("box").get<BoundingBox>();
  v.visible = j.value("visible", true);
  v.enabled = j.value("enabled", true);
  v.som_mark.reset();
  if (j.contains("som_mark") && !j["som_mark"].is_null()) v.som_mark = j["som_mark"].get<int>();
  v.confidence.reset();
  if (j.contains("confidence") && !j["confidence"].is_null()) v.confidence = j["confidence"].get<double>();
  v.stale = j.value("stale", false);
}

void to_json(Json& j, const Observation& v) {
  j = Json{{"app_id", v.app_id},
           {"screenshot_ref", v.screenshot_ref},
           {"controls", v.controls},
           {"timestamp", v.timestamp}};
}

void from_json(const Json& j, Observation& v) {
  v.app_id = j.at("app_id").get<std::string>();
  v.screenshot_ref = j.value("screenshot_ref", "");
  v.controls = j.value("controls", std::vector<Control>{});
  v.timestamp = j.value("timestamp", std::uint64_t{0});
}

void to_json(Json& j, const PlannedAction& v) {
  j = Json{{"target", v.target ? Json(*v.target) : Json(nullptr)},
           {"operation", to_string(v.operation)},
           {"payload", v.payload},
           {"rationale", v.rationale}};
}

void from_json(const Json& j, PlannedAction& v) {
  v.target.reset();
  if (j.contains("target") && !j["target"].is_null()) v.target = j["target"].get<std::string>();
  v.operation = parse_operation(j.at("operation").get<std::string>());
  v.payload = j.value("payload", Json::object());
  if (!v.payload.is_object()) throw Error(ErrorCode::InvalidArgument, "action payload must be an object");
  v.rationale = j.value("rationale", "");
  if (is_gui(v.operation) && !v.target) {
    throw Error(ErrorCode::InvalidArgument, std::string(to_string(v.operation)) + " action requires a target");
  }
  if (v.operation == Operation::ApiCall && v.api_name().empty()) {
    throw Error(ErrorCode::InvalidArgument, "ApiCall action requires payload.api");
  }
}

void to_json(Json& j, const SpeculativeBatch& v) { j = Json{{"actions", v.actions}, {"k", v.k()}}; }

void from_json(const Json& j, SpeculativeBatch& v) {
  v.actions = j.at("actions").get<std::vector<PlannedAction>>();
}

void to_json(Json& j, const ActionOutcome& v) {
  j = Json{{"status", to_string(v.status)},
           {"error", v.error ? Json(to_string(*v.error)) : Json(nullptr)},
           {"message", v.message},
           {"fell_back", v.fell_back},
           {"executor_actions", v.executor_actions},
           {"result", v.result}};
}

void from_json(const Json& j, ActionOutcome& v) {
  v.status = parse_outcome_status(j.at("status").get<std::string>());
  v.error.reset();
  if (j.contains("error") && !j["error"].is_null()) v.error = parse_error_code(j["error"].get<std::string>());
  v.message = j.value("message", "");
  v.fell_back = j.value("fell_back", false);
  v.executor_actions = j.value("executor_actions", 0);
  v.result = j.value("result", Json::object());
}

void to_json(Json& j, const ExecutedAction& v) { j = Json{{"action", v.action}, {"outcome", v.outcome}}; }

void from_json(const Json& j, ExecutedAction& v) {
  v.action = j.at("action").get<PlannedAction>();
  v.outcome = j.at("outcome").get<ActionOutcome>();
}

void to_json(Json& j, const ExecutionReport& v) {
  j = Json{{"executed", v.executed},
           {"halted_early", v.halted_early},
           {"halt_reason", to_string(v.halt_reason)},
           {"halt_detail", v.halt_detail},
           {"failed", v.failed ? Json(*v.failed) : Json(nullptr)},
           {"final_context", v.final_context},
           {"replan", v.replan()}};
}

void from_json(const Json& j, ExecutionReport& v) {
  v.executed = j.at("executed").get<std::vector<ExecutedAction>>();
  v.halted_early = j.at("halted_early").get<bool>();
  v.halt_reason = parse_halt_reason(j.value("halt_reason", "None"));
  v.halt_detail = j.value("halt_detail", "");
  v.failed.reset();
  if (j.contains("failed") && !j["failed"].is_null()) v.failed = j["failed"].get<ExecutedAction>();
  v.final_context = j.at("final_context").get<Observation>();
}

void to_json(Json& j, const Subtask& v) {
  j = Json{{"description", v.description}, {"target_app", v.target_app}, {"depends_on", v.depends_on}};
}

void from_json(const Json& j, Subtask& v) {
  v.description = j.at("description").get<std::string>();
  v.target_app = j.at("target_app").get<std::string>();
  v.depends_on = j.value("depends_on", std::vector<std::size_t>{});
}

void to_json(Json& j, const SubtaskPlan& v) {
  j = Json{{"subtasks", v.subtasks}, {"origin_request", v.origin_request}};
}

void from_json(const Json& j, SubtaskPlan& v) {
  v.subtasks = j.at("subtasks").get<std::vector<Subtask>>();
  v.origin_request = j.value("origin_request", "");
}

void to_json(Json& j, const BlackboardEntry& v) {
  j = Json{{"seq", v.seq}, {"author", v.author}, {"kind", to_string(v.kind)}, {"body", v.body}, {"round", v.round}};
}

void from_json(const Json& j, BlackboardEntry& v) {
  v.seq = j.at("seq").get<std::uint64_t>();
  v.author = j.at("author").get<std::string>();
  v.kind = parse_entry_kind(j.at("kind").get<std::string>());
  v.body = j.value("body", Json::object());
  v.round = j.value("round", 0);
}

std::string canonical(const Json& j) { return j.dump(); }

}  // namespace agentos
