#include <gtest/gtest.h>

#include "agentos/detection.hpp"
#include "agentos/safeguard.hpp"
#include "support.hpp"

using namespace agentos;
using namespace agentos::safeguard;

namespace {

const RiskRuleset& rules() {
  static const auto r = RiskRuleset::load_file(testing_support::fixtures() / "risk_rules.json");
  return r;
}

Observation fileman_view() {
  simenv::Desktop d(testing_support::catalog());
  d.launch_app("fileman");
  return detection::perceive(d, "fileman", nullptr).observation;
}

}  // namespace

TEST(Pattern, GlobAndRegex) {
  EXPECT_TRUE(Pattern("delete_*").matches("delete_file"));
  EXPECT_FALSE(Pattern("delete_*").matches("undelete_file"));
  EXPECT_TRUE(Pattern("re:^rm\\s+-rf").matches("rm  -rf /"));
  EXPECT_FALSE(Pattern("re:^rm\\s+-rf").matches("echo rm -rf"));
  EXPECT_THROW(Pattern("re:("), Error);
}

TEST(Screen, DestructiveApiIsRisky) {
  const auto r = screen(PlannedAction::api_call("delete_file", Json{{"path", "a"}}), rules());
  EXPECT_TRUE(r.risky);
  EXPECT_EQ(r.matched_rule, "destructive-api");
}

TEST(Screen, OrdinaryActionsPass) {
  EXPECT_FALSE(screen(PlannedAction::click("bold_button"), rules()).risky);
  EXPECT_FALSE(screen(PlannedAction::api_call("save_as", Json{{"format", "csv"}}), rules()).risky);
}

TEST(Screen, LabelFromContext) {
  const auto view = fileman_view();
  const auto r = screen(PlannedAction::click("delete_button"), rules(), "fileman", &view);
  EXPECT_TRUE(r.risky);
  EXPECT_EQ(r.matched_rule, "delete-button");
  EXPECT_FALSE(screen(PlannedAction::click("delete_button"), rules()).risky);
  EXPECT_FALSE(screen(PlannedAction::click("new_folder"), rules(), "fileman", &view).risky);
}

TEST(Screen, PayloadPattern) {
  EXPECT_TRUE(screen(PlannedAction::type_text("note_edit", "rm -rf /home"), rules()).risky);
  EXPECT_TRUE(screen(PlannedAction::api_call("write_note", Json{{"text", "rm -rf ~"}}), rules()).risky);
  EXPECT_FALSE(screen(PlannedAction::type_text("note_edit", "hello"), rules()).risky);
}

TEST(Screen, RegistryRiskTagAlwaysMatches) {
  const auto a = PlannedAction::api_call("delete_file", Json{{"path", "a"}});
  EXPECT_FALSE(screen(a, RiskRuleset{}, "fileman").risky);
  EXPECT_TRUE(screen(a, RiskRuleset{}, "fileman", nullptr, testing_support::registry().get()).risky);
}

TEST(RiskRuleset, MalformedRules) {
  auto expect_malformed = [](const char* text) {
    try {
      RiskRuleset::parse(Json::parse(text));
      ADD_FAILURE() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::MalformedRule) << text;
    }
  };
  expect_malformed(R"({"id":"x"})");
  expect_malformed(R"([{"match":{"api_pattern":"a"}}])");
  expect_malformed(R"([{"id":"x","match":{}}])");
  expect_malformed(R"([{"id":"x","match":{"operation":"Drag"}}])");
  expect_malformed(R"([{"id":"x","match":{"api_pattern":"re:["}}])");
}
