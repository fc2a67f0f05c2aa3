#pragma once

// The LLM seam. Planner assembles prompts, calls a Backend, and parses the
// strict-JSON output contracts (HostOutput, AppAgentOutput), re-prompting once
// with the parse error before giving up.

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "agentos/domain.hpp"
#include "agentos/knowledge.hpp"

namespace agentos::planner {

// ---------------------------------------------------------------------------
// Output contracts

struct AssignedApp {
  std::string app_id;
  int instance = 0;
};

struct HostOutput {
  SubtaskPlan subtask_plan;
  std::vector<std::string> shell_commands;  // "launch <app_id>"
  std::optional<AssignedApp> assigned_app;
  std::string agent_message;
  std::optional<std::string> user_prompt;
  HostState host_state = HostState::Assign;
};

/// Parses and checks the contract; throws PlannerOutputMalformed.
HostOutput parse_host_output(const Json& j);
void to_json(Json& j, const HostOutput& v);

struct AppAgentOutput {
  SpeculativeBatch batch;
  std::string rationale;
  AppState local_state = AppState::Continue;
  std::vector<Json> blackboard_updates;  // {"kind"?, ...body}
  /// Set when actions were dropped after parsing (max_k, or an unknown control).
  bool truncated = false;
  bool replan = false;
  std::string truncation_reason;
};

/// Throws PlannerOutputMalformed. An empty batch is allowed here.
AppAgentOutput parse_app_output(const Json& j);
void to_json(Json& j, const AppAgentOutput& v);

// ---------------------------------------------------------------------------
// Backends

enum class Role { Host, App, Judge };
std::string_view to_string(Role r);

struct PlannerRequest {
  Role role = Role::App;
  std::string trigger_key;  // host: request; app: subtask description
  int step = 0;             // planner invocation index within the subtask
  int attempt = 0;          // 1 on the repair re-prompt
  std::string system_prompt;
  std::string user_prompt;
  Json context = Json::object();  // structured inputs the prompt was built from
};

class Backend {
 public:
  virtual ~Backend() = default;
  /// Raw model text. Throws BackendUnavailable.
  virtual std::string complete(const PlannerRequest& request) = 0;
};

/// Deterministic fixture-driven backend; a pure function of the request.
///
/// Fixture:
///   {"host": {"<request>": <HostOutput> | {"raw": "...", "repair": <HostOutput>}},
///    "app":  {"<subtask>": {"steps": [<AppAgentOutput | raw/repair>...]}
///                        | {"trajectory": {"batches": [[action...]...],
///                                          "guesses": {"<batch>": [action...]}}}},
///    "judge": {"<request>": <EvaluationResult>}}
///
/// "steps" are indexed by planner step (the last repeats). A trajectory is
/// replayed from the number of actions already executed: the response is the
/// rest of the batch holding the next required action, followed by that
/// batch's speculative guesses; FINISH once every action has executed.
/// String values "${blackboard:<subtask>:<field>}" are filled from the newest
/// Result entry produced by that subtask.
class ScriptedBackend : public Backend {
 public:
  explicit ScriptedBackend(Json fixture);
  static std::shared_ptr<ScriptedBackend> load_file(const std::filesystem::path& path);

  std::string complete(const PlannerRequest& request) override;

 private:
  Json respond(const PlannerRequest& request) const;
  Json fixture_;
};

struct HttpChatConfig {
  std::string endpoint;  // full URL of a chat-completions endpoint
  std::string model;
  std::string api_key;
  int timeout_seconds = 60;
};

/// Chat-completion client; the first choice's message content is the output.
class HttpChatBackend : public Backend {
 public:
  explicit HttpChatBackend(HttpChatConfig config) : config_(std::move(config)) {}
  std::string complete(const PlannerRequest& request) override;

 private:
  HttpChatConfig config_;
};

// ---------------------------------------------------------------------------
// Planner

struct AppSummary {
  std::string app_id;
  std::string display_name;
  bool running = false;
};

struct HostContext {
  std::string request;
  std::vector<AppSummary> apps;
  Json prior_rounds = Json::array();  // [{"round", "request", "outcome", "verdict"?}]
  std::optional<std::string> clarification;
};

struct AppContext {
  std::string subtask;
  std::string app_id;
  Json handoff = Json::object();
  Observation observation;
  Json action_space = Json::array();
  knowledge::Retrieval knowledge;
  std::vector<BlackboardEntry> blackboard;
  std::vector<Json> history;
  int step = 0;
  int executed_count = 0;
  std::size_t max_k = 5;
};

struct PromptBudget {
  std::size_t docs = knowledge::kDefaultDocBudget;
  std::size_t examples = knowledge::kDefaultExperienceBudget;
};

struct PlannerCall {
  Role role;
  std::string trigger_key;
  int step;
  int attempt;
  std::string context_digest;
  std::string observation_hash;  // app calls only
  std::string response;
  std::optional<std::string> error;
};

class Planner {
 public:
  explicit Planner(std::shared_ptr<Backend> backend, PromptBudget budget = {})
      : backend_(std::move(backend)), budget_(budget) {}

  HostOutput plan_host(const HostContext& ctx);
  /// Truncates to max_k, then drops the first action naming a control absent
  /// from the observation together with everything after it.
  AppAgentOutput plan_app(const AppContext& ctx);

  /// Raw judge call for planner-backed evaluation.
  Json judge(const std::string& request, const std::string& transcript, const Json& criteria);

  void set_observer(std::function<void(const PlannerCall&)> observer) { observer_ = std::move(observer); }
  const PromptBudget& budget() const { return budget_; }

  /// Prompt text for inspection and tests.
  PlannerRequest host_request(const HostContext& ctx) const;
  PlannerRequest app_request(const AppContext& ctx) const;

 private:
  template <typename Parse>
  auto call_with_repair(PlannerRequest req, const std::string& observation_hash, Parse parse)
      -> decltype(parse(Json()));

  std::shared_ptr<Backend> backend_;
  PromptBudget budget_;
  std::function<void(const PlannerCall&)> observer_;
};

}  // namespace agentos::planner
