#pragma once

// Scenario files pair a request with document predicates that define success,
// plus the planner script and policy files needed to run it headlessly.

#include <deque>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "agentos/session.hpp"

namespace agentos {

struct FollowUp {
  std::string request;
  std::vector<Predicate> success_predicates;
};

struct Scenario {
  std::filesystem::path path;
  std::string name;
  std::string request;
  std::vector<std::string> app_fixtures;
  std::vector<std::string> prelaunch;
  std::vector<Predicate> success_predicates;
  std::vector<FollowUp> follow_ups;
  Json planner_script;  // resolved fixture contents, or null
  std::optional<std::filesystem::path> risk_rules;
  std::optional<std::filesystem::path> api_manifest;
  std::optional<std::filesystem::path> docs;
  std::deque<Decision> confirmations;
  std::deque<std::string> clarifications;
};

/// Relative paths inside the file resolve against its directory.
Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const Json& j, const std::filesystem::path& base_dir);

struct RunOptions {
  RuntimeConfig runtime;
  bool auto_approve = false;
  std::shared_ptr<planner::Backend> backend;  // overrides the scenario's script
  std::shared_ptr<const knowledge::KnowledgeStore> knowledge;
  std::shared_ptr<UserChannel> channel;       // overrides the scripted answers
  std::string session_id = "session-1";
  bool finish_session = true;
};

struct ScenarioRun {
  std::unique_ptr<Session> session;
  std::vector<RoundRecord> rounds;
  Verdict verdict = Verdict::Failure;
  int planner_calls = 0;
  int steps = 0;
  int executor_actions = 0;
};

Json summary(const ScenarioRun& run);

/// Builds the session configuration a scenario asks for.
SessionConfig scenario_session_config(const Scenario& scenario, const simenv::Catalog& catalog,
                                      const RunOptions& options);

/// Runs the request and every follow-up as rounds of one session, scoring
/// each round with its predicates. Throws ScenarioCriteriaMissing.
ScenarioRun run_scenario(const Scenario& scenario, std::shared_ptr<const simenv::Catalog> catalog,
                         const RunOptions& options = {});

}  // namespace agentos
