#pragma once

// Control plane: turns a request into a subtask plan, launches applications
// and hands each subtask to the agent registered for its application.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "agentos/appagent.hpp"
#include "agentos/fsm.hpp"
#include "agentos/planner.hpp"

namespace agentos {

/// Third-party agent wrapped to look like an AppAgent. It receives the
/// subtask and a window-scoped observation and reports AppAgent states.
class ExternalAgentShim {
 public:
  using Emit = std::function<void(AppState state, const Json& detail)>;
  virtual ~ExternalAgentShim() = default;
  virtual void run(const Subtask& subtask, const Json& handoff, const Observation& observation, const Emit& emit) = 0;
};

/// Resolves app ids to runners. Native AppAgents are created on first use and
/// reused for later subtasks on the same app.
class AgentRegistry {
 public:
  explicit AgentRegistry(AgentEnv& env) : env_(env) {}

  void register_external(const std::string& app_id, std::shared_ptr<ExternalAgentShim> shim);

  SubtaskRunner& resolve(const std::string& app_id);
  bool is_external(const std::string& app_id) const { return shims_.count(app_id) > 0; }

  std::size_t active_count() const { return active_.size(); }
  /// How many times a runner was instantiated for `app_id`.
  int instantiations(const std::string& app_id) const;
  void release_all();

 private:
  AgentEnv& env_;
  std::map<std::string, std::shared_ptr<ExternalAgentShim>> shims_;
  std::map<std::string, std::unique_ptr<SubtaskRunner>> active_;
  std::map<std::string, int> created_;
};

struct HostResult {
  HostState state = HostState::Fail;
  std::optional<ErrorCode> error;
  std::string detail;
  std::vector<SubtaskResult> subtasks;
  std::optional<planner::HostOutput> plan;
  int launches = 0;  // apps started by the HostAgent this round
};

void to_json(Json& j, const HostResult& v);

class HostAgent {
 public:
  HostAgent(AgentEnv& env, AgentRegistry& agents) : env_(env), agents_(agents) {}

  /// Throws InvalidRequest for an empty request, before any planner call.
  HostResult run(const std::string& request, const Json& prior_rounds);

  /// Host-only planning step; exposed for tests.
  planner::HostOutput decompose(const std::string& request, const Json& prior_rounds,
                                const std::optional<std::string>& clarification = std::nullopt);

 private:
  void transition(HostFsm& fsm, HostEvent event, const Json& detail = Json::object());
  HostResult fail(HostFsm& fsm, HostResult r, std::optional<ErrorCode> code, std::string detail);
  int ensure_running(const std::string& app_id);

  AgentEnv& env_;
  AgentRegistry& agents_;
};

}  // namespace agentos
