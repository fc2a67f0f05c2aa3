#include <gtest/gtest.h>

#include "agentos/markdown.hpp"
#include "agentos/replay.hpp"
#include "agentos/scenario.hpp"
#include "support.hpp"

using namespace agentos;

namespace {

std::size_t occurrences(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST(Aggregate, Verdicts) {
  EXPECT_EQ(aggregate({{"a", 1.0}, {"b", 1.0}}), Verdict::Success);
  EXPECT_EQ(aggregate({{"a", 1.0}, {"b", 0.0}}), Verdict::Partial);
  EXPECT_EQ(aggregate({{"a", 0.5}}), Verdict::Partial);
  EXPECT_EQ(aggregate({{"a", 0.0}, {"b", 0.0}}), Verdict::Failure);
}

TEST(RuleEvaluator, NeedsPredicates) {
  try {
    RuleEvaluator e({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ScenarioCriteriaMissing);
  }
}

TEST(RuleEvaluator, ScoresLiveDocument) {
  simenv::Desktop d(testing_support::catalog());
  d.launch_app("sheetapp");
  d.apply_action("sheetapp", PlannedAction::api_call("save_as", Json{{"format", "csv"}}));
  RuleEvaluator ev({{"sheetapp.saved_format", "csv"}, {"sheetapp.file", "nope"}});
  EvaluationInput in;
  in.request = "r";
  in.desktop = &d;
  const auto r = ev.evaluate(in);
  ASSERT_EQ(r.criteria.size(), 2u);
  EXPECT_EQ(r.criteria[0].score, 1.0);
  EXPECT_EQ(r.criteria[1].score, 0.0);
  EXPECT_EQ(r.verdict, Verdict::Partial);
}

TEST(Scenario, MissingPredicatesRejected) {
  auto j = Json::parse(R"({"name":"x","request":"r","app_fixtures":["sheetapp"],"planner_script":{}})");
  try {
    parse_scenario(j, testing_support::fixtures() / "scenarios");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ScenarioCriteriaMissing);
  }
}

TEST(Session, RoundLifecycle) {
  RunOptions o;
  o.finish_session = false;
  auto run = run_scenario(testing_support::scenario("api_save_as"), testing_support::catalog(), o);
  auto& s = *run.session;
  EXPECT_EQ(s.status(), SessionStatus::Open);
  s.start_round("again");
  try {
    s.start_round("and again");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RoundInProgress);
  }
  s.run_active_round();
  s.finish();
  try {
    s.start_round("late");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SessionClosed);
  }
  EXPECT_THROW(s.blackboard().append({}, "x", EntryKind::Insight, 3), Error);
}

TEST(Session, LaterRoundsSeePriorRounds) {
  const auto run = testing_support::run("multi_round");
  ASSERT_EQ(run.rounds.size(), 2u);
  EXPECT_EQ(run.verdict, Verdict::Success);
  for (const auto& e : run.session->trace().events()) {
    if (e.kind == events::kRoundStart && e.round == 2) {
      ASSERT_EQ(e.payload["prior_rounds"].size(), 1u);
      EXPECT_EQ(e.payload["prior_rounds"][0]["request"], "Make the slide background blue");
    }
  }
  EXPECT_EQ(run.session->desktop().document("slideapp")["background"], "blue");
}

TEST(Session, SummaryCounts) {
  const auto gui = testing_support::run("gui_save_as");
  EXPECT_EQ(gui.verdict, Verdict::Success);
  EXPECT_EQ(gui.executor_actions, 5);
  EXPECT_EQ(gui.planner_calls, 4);
  const auto api = testing_support::run("api_save_as");
  EXPECT_EQ(api.executor_actions, 1);
  EXPECT_EQ(api.planner_calls, 1);
  const auto j = summary(api);
  EXPECT_EQ(j["verdict"], "success");
}

TEST(Markdown, StableAndOneSectionPerStep) {
  const auto a = testing_support::run("gui_save_as");
  const auto b = testing_support::run("gui_save_as");
  const auto ma = export_markdown("session-1", a.session->trace().events());
  EXPECT_EQ(ma, export_markdown("session-1", a.session->trace().events()));
  EXPECT_EQ(ma, export_markdown("session-1", b.session->trace().events()));
  EXPECT_EQ(occurrences(ma, "### Step "), static_cast<std::size_t>(a.steps));
  EXPECT_EQ(occurrences(ma, "## Round "), 1u);
  EXPECT_EQ(ma.rfind("# Session session-1\n", 0), 0u);
}

TEST(Replay, ReproducesRecordedState) {
  const auto run = testing_support::run("gui_save_as");
  const auto r = replay(run.session->trace().events(), testing_support::catalog());
  EXPECT_TRUE(r.match);
  EXPECT_FALSE(r.divergence);
  EXPECT_EQ(r.final_hash, run.rounds[0].final_hash);
  EXPECT_EQ(r.applied, 6u);
}

TEST(Replay, EditedPayloadDiverges) {
  const auto run = testing_support::run("gui_save_as");
  auto events = run.session->trace().events();
  for (auto& e : events) {
    if (e.kind == events::kSim && e.payload["action"].is_object() && e.payload["action"]["target"] == "fmt_csv") {
      e.payload["action"]["target"] = "fmt_xlsx";
    }
  }
  const auto r = replay(events, testing_support::catalog());
  EXPECT_FALSE(r.match);
  ASSERT_TRUE(r.divergence);
  EXPECT_EQ(r.divergence->action["target"], "fmt_xlsx");
  EXPECT_EQ(r.divergence->index, 4u);
}

TEST(Replay, CatalogMismatch) {
  const auto run = testing_support::run("api_save_as");
  auto defs = std::vector<simenv::AppDefinition>{};
  for (const auto& [id, def] : testing_support::catalog()->apps()) defs.push_back(def);
  defs[0].display_name += " (edited)";
  auto other = std::make_shared<const simenv::Catalog>(defs);
  try {
    replay(run.session->trace().events(), other);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CatalogMismatch);
  }
}

TEST(Replay, JsonlRoundTripStillMatches) {
  const auto run = testing_support::run("cross_app");
  const auto events = parse_jsonl(run.session->trace().to_jsonl());
  EXPECT_TRUE(replay(events, testing_support::catalog()).match);
}
