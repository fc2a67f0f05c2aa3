#pragma once

// A session owns one simulated desktop, one blackboard and one trace, and
// runs rounds one at a time against them.

#include <atomic>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "agentos/appagent.hpp"
#include "agentos/hostagent.hpp"

namespace agentos {

// ---------------------------------------------------------------------------
// Evaluation

enum class Verdict { Success, Partial, Failure };
std::string_view to_string(Verdict v);
Verdict parse_verdict(std::string_view s);

struct Criterion {
  std::string description;
  double score = 0.0;
};

struct EvaluationResult {
  Verdict verdict = Verdict::Failure;
  std::vector<Criterion> criteria;
  std::string rationale;
};

void to_json(Json& j, const EvaluationResult& v);
void from_json(const Json& j, EvaluationResult& v);

/// success iff every score is 1, partial iff any score is positive, else failure.
Verdict aggregate(const std::vector<Criterion>& criteria);

/// Document predicate; `key` is "<app_id>.<document key>".
struct Predicate {
  std::string key;
  Json expected;
};

void to_json(Json& j, const Predicate& v);
void from_json(const Json& j, Predicate& v);

struct EvaluationInput {
  std::string request;
  const simenv::Desktop* desktop = nullptr;
  std::vector<TraceEvent> round_events;
};

class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual EvaluationResult evaluate(const EvaluationInput& input) = 0;
};

/// Scores each predicate against the live document state.
class RuleEvaluator : public Evaluator {
 public:
  /// Throws ScenarioCriteriaMissing for an empty predicate list.
  explicit RuleEvaluator(std::vector<Predicate> predicates);
  EvaluationResult evaluate(const EvaluationInput& input) override;

 private:
  std::vector<Predicate> predicates_;
};

/// Planner-backed judge over the round's markdown log.
class JudgeEvaluator : public Evaluator {
 public:
  explicit JudgeEvaluator(std::shared_ptr<planner::Planner> planner, Json criteria_hints = Json::array())
      : planner_(std::move(planner)), hints_(std::move(criteria_hints)) {}
  EvaluationResult evaluate(const EvaluationInput& input) override;

 private:
  std::shared_ptr<planner::Planner> planner_;
  Json hints_;
};

// ---------------------------------------------------------------------------
// Session

enum class SessionStatus { Open, Finished, Failed };
std::string_view to_string(SessionStatus s);

struct SessionConfig {
  RuntimeConfig runtime;
  std::shared_ptr<planner::Backend> backend;
  planner::PromptBudget prompt_budget;
  std::shared_ptr<const puppeteer::ApiRegistry> registry = std::make_shared<puppeteer::ApiRegistry>();
  safeguard::RiskRuleset rules;
  std::shared_ptr<const knowledge::KnowledgeStore> knowledge;
  std::shared_ptr<detection::VisionDetector> detector = std::make_shared<detection::FixtureVisionDetector>();
  std::vector<std::string> prelaunch;
  std::map<std::string, std::shared_ptr<ExternalAgentShim>> external_agents;
};

struct RoundRecord {
  int index = 0;
  std::string request;
  bool terminal = false;
  std::optional<HostState> outcome;
  std::optional<ErrorCode> error;
  std::string detail;
  int planner_calls = 0;  // AppAgent planner invocations, repairs included
  int host_calls = 0;
  int steps = 0;          // AppAgent steps
  int executor_actions = 0;
  std::string final_hash;
  std::optional<EvaluationResult> evaluation;
};

void to_json(Json& j, const RoundRecord& v);

class Session {
 public:
  Session(std::string id, std::shared_ptr<const simenv::Catalog> catalog, SessionConfig config,
          std::shared_ptr<UserChannel> channel);
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  /// Throws SessionClosed or RoundInProgress. Returns the 1-based round index.
  int start_round(const std::string& request);
  /// Runs the round opened by start_round() to a terminal host state.
  RoundRecord run_active_round();
  RoundRecord run_round(const std::string& request);

  /// Scores a terminal round and records the verdict in the trace.
  EvaluationResult evaluate(int round, Evaluator& evaluator);

  /// Honored between actions; a blocked confirmation is released as cancelled.
  void cancel();
  /// Closes the session (blackboard included); later rounds raise SessionClosed.
  void finish();

  const std::string& id() const { return id_; }
  SessionStatus status() const;
  bool round_active() const;
  std::vector<RoundRecord> rounds() const;

  simenv::Desktop& desktop() { return *desktop_; }
  const simenv::Desktop& desktop() const { return *desktop_; }
  Blackboard& blackboard() { return blackboard_; }
  Trace& trace() { return trace_; }
  const Trace& trace() const { return trace_; }
  UserChannel& channel() { return *channel_; }
  AgentRegistry& agents() { return agents_; }
  planner::Planner& planner() { return *planner_; }
  std::shared_ptr<planner::Planner> planner_ptr() { return planner_; }

 private:
  Json prior_rounds_summary() const;
  RoundRecord tally(RoundRecord r) const;

  std::string id_;
  std::shared_ptr<const simenv::Catalog> catalog_;
  SessionConfig config_;
  std::shared_ptr<UserChannel> channel_;
  std::unique_ptr<simenv::Desktop> desktop_;
  Blackboard blackboard_;
  Trace trace_;
  std::shared_ptr<planner::Planner> planner_;
  std::unique_ptr<puppeteer::Puppeteer> puppeteer_;
  AgentEnv env_;
  AgentRegistry agents_;

  mutable std::mutex mu_;
  std::vector<RoundRecord> rounds_;
  bool active_ = false;
  bool closed_ = false;
  std::atomic<int> current_round_{0};
  std::atomic<bool> cancel_{false};
};

}  // namespace agentos
