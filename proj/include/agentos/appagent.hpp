#pragma once

// Per-application ReAct loop: observe through the fusion pipeline, ask the
// planner for a batch, screen it, then run it speculatively.

#include <atomic>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "agentos/blackboard.hpp"
#include "agentos/channel.hpp"
#include "agentos/detection.hpp"
#include "agentos/domain.hpp"
#include "agentos/fsm.hpp"
#include "agentos/knowledge.hpp"
#include "agentos/planner.hpp"
#include "agentos/puppeteer.hpp"
#include "agentos/safeguard.hpp"
#include "agentos/simenv.hpp"
#include "agentos/speculative.hpp"
#include "agentos/trace.hpp"

namespace agentos {

inline constexpr int kDefaultStepBudget = 30;
inline constexpr std::size_t kHistoryWindow = 5;

struct RuntimeConfig {
  std::size_t max_k = speculative::kDefaultMaxBatch;  // 1 = single-action mode
  int step_budget = kDefaultStepBudget;               // AppAgent planner steps per round
  detection::FusionOptions fusion;
};

void to_json(Json& j, const RuntimeConfig& v);

/// Everything an agent needs for one round. Owned by the session.
struct AgentEnv {
  simenv::Desktop* desktop = nullptr;
  std::shared_ptr<const puppeteer::ApiRegistry> registry;
  puppeteer::Puppeteer* puppeteer = nullptr;
  planner::Planner* planner = nullptr;
  const knowledge::KnowledgeStore* knowledge = nullptr;
  const safeguard::RiskRuleset* rules = nullptr;
  detection::VisionDetector* detector = nullptr;
  Blackboard* blackboard = nullptr;
  Trace* trace = nullptr;
  UserChannel* channel = nullptr;
  RuntimeConfig config;

  int round = 0;
  int steps_used = 0;  // shared across the round's subtasks
  std::function<bool()> cancelled;

  bool is_cancelled() const { return cancelled && cancelled(); }
};

struct SubtaskResult {
  AppState state = AppState::Fail;
  std::optional<ErrorCode> error;
  std::string detail;
  int steps = 0;
  int executed = 0;
};

void to_json(Json& j, const SubtaskResult& v);

class SubtaskRunner {
 public:
  virtual ~SubtaskRunner() = default;
  virtual SubtaskResult run(std::size_t index, const Subtask& subtask, const Json& handoff) = 0;
};

class AppAgent : public SubtaskRunner {
 public:
  AppAgent(AgentEnv& env, std::string app_id) : env_(env), app_id_(std::move(app_id)) {}

  SubtaskResult run(std::size_t index, const Subtask& subtask, const Json& handoff) override;

  const std::string& app_id() const { return app_id_; }
  /// Every action this agent has executed, across subtasks.
  const std::vector<ExecutedAction>& log() const { return log_; }

  Observation observe() const;

 private:
  void transition(AppFsm& fsm, AppEvent event, std::size_t index);
  SubtaskResult fail(AppFsm& fsm, std::size_t index, SubtaskResult r, std::optional<ErrorCode> code,
                     std::string detail);

  AgentEnv& env_;
  std::string app_id_;
  std::vector<ExecutedAction> log_;
};

}  // namespace agentos
