#include <gtest/gtest.h>

#include "agentos/session.hpp"
#include "support.hpp"

using namespace agentos;

namespace {

std::unique_ptr<Session> make_session(const std::string& script, std::shared_ptr<UserChannel> channel = nullptr,
                                      std::vector<std::string> prelaunch = {},
                                      std::map<std::string, std::shared_ptr<ExternalAgentShim>> external = {}) {
  SessionConfig cfg;
  cfg.backend = std::make_shared<planner::ScriptedBackend>(Json::parse(script));
  cfg.registry = testing_support::registry();
  cfg.rules = safeguard::RiskRuleset::load_file(testing_support::fixtures() / "risk_rules.json");
  cfg.prelaunch = std::move(prelaunch);
  cfg.external_agents = std::move(external);
  return std::make_unique<Session>("t", testing_support::catalog(), std::move(cfg), std::move(channel));
}

std::size_t count(const Session& s, const std::string& kind) {
  std::size_t n = 0;
  for (const auto& e : s.trace().events()) n += e.kind == kind;
  return n;
}

const char* kTwoSheetSubtasks = R"({
  "host": {"go": {"status": "ASSIGN", "shell_commands": ["launch sheetapp"],
    "subtask_plan": {"subtasks": [{"description": "select", "target_app": "sheetapp"},
                                  {"description": "save", "target_app": "sheetapp", "depends_on": [0]}]},
    "assigned_app": {"app_id": "sheetapp"}}},
  "app": {
    "select": {"steps": [{"batch": [{"operation": "ApiCall", "payload": {"api": "select_table_range", "args": {"range": "A1:B2"}}}],
                          "status": "FINISH"}]},
    "save": {"steps": [{"batch": [{"operation": "ApiCall", "payload": {"api": "save_as", "args": {"format": "csv"}}}],
                        "status": "FINISH"}]}}})";

class ScriptedShim : public ExternalAgentShim {
 public:
  explicit ScriptedShim(std::vector<AppState> states) : states_(std::move(states)) {}
  void run(const Subtask& subtask, const Json&, const Observation& obs, const Emit& emit) override {
    seen_subtask = subtask.description;
    seen_app = obs.app_id;
    for (auto s : states_) emit(s, Json{{"note", "x"}});
  }
  std::string seen_subtask, seen_app;

 private:
  std::vector<AppState> states_;
};

const char* kShimScript = R"({"host": {"go": {"status": "ASSIGN",
    "subtask_plan": {"subtasks": [{"description": "do it", "target_app": "docapp"}]},
    "assigned_app": {"app_id": "docapp"}}}})";

}  // namespace

TEST(HostAgent, LaunchesOnceAndReusesAgent) {
  auto s = make_session(kTwoSheetSubtasks);
  const auto r = s->run_round("go");
  EXPECT_EQ(r.outcome, HostState::Finish) << r.detail;
  EXPECT_EQ(s->agents().instantiations("sheetapp"), 1);
  EXPECT_EQ(s->agents().active_count(), 0u);
  EXPECT_EQ(r.planner_calls, 2);
  EXPECT_EQ(r.host_calls, 1);
  const auto doc = s->desktop().document("sheetapp");
  EXPECT_EQ(doc["selection"], "A1:B2");
  EXPECT_EQ(doc["saved_format"], "csv");
  std::size_t launches = 0;
  for (const auto& e : s->trace().events()) {
    launches += e.kind == events::kSim && e.payload.value("kind", "") == "launch";
  }
  EXPECT_EQ(launches, 1u);
}

TEST(HostAgent, HostTransitionsFollowPlan) {
  auto s = make_session(kTwoSheetSubtasks);
  s->run_round("go");
  std::vector<std::string> seen;
  for (const auto& e : s->trace().events()) {
    if (e.kind == events::kHostTransition) seen.push_back(e.payload["event"].get<std::string>());
  }
  EXPECT_EQ(seen, (std::vector<std::string>{"subtask_ready", "subtask_done", "subtask_ready", "subtask_done", "all_done"}));
}

TEST(HostAgent, EmptyRequestMakesNoPlannerCall) {
  auto s = make_session(kTwoSheetSubtasks);
  const auto r = s->run_round("");
  EXPECT_EQ(r.outcome, HostState::Fail);
  EXPECT_EQ(r.error, ErrorCode::InvalidRequest);
  EXPECT_EQ(r.host_calls, 0);
}

TEST(HostAgent, UnknownAppIsRejected) {
  auto s = make_session(R"({"host": {"go": {"status": "ASSIGN", "shell_commands": ["launch paint"],
      "subtask_plan": {"subtasks": [{"description": "d", "target_app": "sheetapp"}]},
      "assigned_app": {"app_id": "sheetapp"}}}})");
  const auto r = s->run_round("go");
  EXPECT_EQ(r.outcome, HostState::Fail);
  EXPECT_EQ(r.error, ErrorCode::UnknownApp);
}

TEST(HostAgent, ClarificationThenAssign) {
  const auto run = testing_support::run("clarify");
  EXPECT_EQ(run.verdict, Verdict::Success);
  const auto& s = *run.session;
  EXPECT_EQ(count(s, events::kClarifyRequest), 1u);
  EXPECT_EQ(count(s, events::kClarify), 1u);
}

TEST(HostAgent, UnansweredClarificationFails) {
  auto s = make_session(R"({"host": {"go": {"status": "PENDING", "user_prompt": "Which format?"}}})",
                        std::make_shared<ScriptedChannel>(std::deque<Decision>{}, std::deque<std::string>{}));
  const auto r = s->run_round("go");
  EXPECT_EQ(r.outcome, HostState::Fail);
  EXPECT_EQ(r.error, ErrorCode::InvalidRequest);
}

TEST(AppAgent, CrashFailsRound) {
  auto s = make_session(R"({"host": {"go": {"status": "ASSIGN",
      "subtask_plan": {"subtasks": [{"description": "run macro", "target_app": "sheetapp"}]},
      "assigned_app": {"app_id": "sheetapp"}}},
    "app": {"run macro": {"steps": [{"batch": [{"operation": "Click", "target": "macro_button"}], "status": "FINISH"}]}}})",
                        nullptr, {"sheetapp"});
  const auto r = s->run_round("go");
  EXPECT_EQ(r.outcome, HostState::Fail);
  EXPECT_EQ(r.error, ErrorCode::AppCrashed);
  EXPECT_FALSE(s->desktop().is_running("sheetapp"));
  EXPECT_EQ(s->blackboard().read({EntryKind::Error, {}, {}}).size(), 1u);
}

TEST(AppAgent, BudgetStopsAtLimit) {
  const auto run = testing_support::run("budget");
  ASSERT_EQ(run.rounds.size(), 1u);
  EXPECT_EQ(run.rounds[0].error, ErrorCode::BudgetExhausted);
  EXPECT_EQ(run.rounds[0].steps, 30);
  EXPECT_EQ(run.planner_calls, 30);
  const auto small = testing_support::run("budget", 5, 4);
  EXPECT_EQ(small.rounds[0].steps, 4);
}

TEST(AppAgent, ApprovedRiskyActionRuns) {
  const auto run = testing_support::run("risky_delete");
  EXPECT_EQ(run.verdict, Verdict::Success);
  EXPECT_EQ(count(*run.session, events::kConfirmRequest), 1u);
  EXPECT_EQ(count(*run.session, events::kAborted), 0u);
}

TEST(AppAgent, DeniedRiskyActionIsNeverExecuted) {
  const auto run = testing_support::run("risky_delete_denied");
  EXPECT_EQ(run.verdict, Verdict::Success);
  const auto& s = *run.session;
  EXPECT_EQ(count(s, events::kAborted), 1u);
  for (const auto& e : s.trace().events()) {
    if (e.kind == events::kAction) EXPECT_NE(e.payload["action"]["payload"].value("api", ""), "delete_file");
  }
  EXPECT_TRUE(s.desktop().document("fileman")["deleted"].is_null());
}

TEST(AppAgent, ResultEntryCarriesValueAcrossApps) {
  const auto run = testing_support::run("cross_app");
  EXPECT_EQ(run.verdict, Verdict::Success);
  const auto results = run.session->blackboard().read({EntryKind::Result, {}, {}});
  ASSERT_FALSE(results.empty());
  EXPECT_EQ(results[0].author, "app:sheetapp");
  EXPECT_EQ(results[0].body["produced_by_subtask"], 0);
  EXPECT_EQ(run.session->desktop().document("fileman")["saved_note"], "1,234.50");
}

TEST(ExternalAgent, ShimDrivesStateMachine) {
  auto shim = std::make_shared<ScriptedShim>(std::vector<AppState>{AppState::Continue, AppState::Pending,
                                                                   AppState::Continue, AppState::Finish});
  auto channel = std::make_shared<ScriptedChannel>(std::deque<Decision>{Decision::Approve}, std::deque<std::string>{});
  auto s = make_session(kShimScript, channel, {}, {{"docapp", shim}});
  const auto r = s->run_round("go");
  EXPECT_EQ(r.outcome, HostState::Finish) << r.detail;
  EXPECT_EQ(shim->seen_subtask, "do it");
  EXPECT_EQ(shim->seen_app, "docapp");
  EXPECT_EQ(channel->confirmations_asked(), 1u);
  EXPECT_EQ(count(*s, events::kAppOutput), 4u);
}

TEST(ExternalAgent, StoppingWithoutTerminalStateFails) {
  auto shim = std::make_shared<ScriptedShim>(std::vector<AppState>{AppState::Continue});
  auto s = make_session(kShimScript, nullptr, {}, {{"docapp", shim}});
  EXPECT_EQ(s->run_round("go").outcome, HostState::Fail);
}

TEST(ExternalAgent, ReportAfterTerminalIsIllegal) {
  auto shim = std::make_shared<ScriptedShim>(std::vector<AppState>{AppState::Finish, AppState::Continue});
  auto s = make_session(kShimScript, nullptr, {}, {{"docapp", shim}});
  const auto r = s->run_round("go");
  EXPECT_EQ(r.outcome, HostState::Fail);
  EXPECT_EQ(r.error, ErrorCode::IllegalTransition);
}
