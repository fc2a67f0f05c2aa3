#include <gtest/gtest.h>

#include "agentos/detection.hpp"
#include "agentos/puppeteer.hpp"
#include "support.hpp"

using namespace agentos;
using namespace agentos::puppeteer;
using testing_support::catalog;
using testing_support::registry;

namespace {

Observation observe(const simenv::Desktop& d, const std::string& app) {
  detection::FixtureVisionDetector det;
  return detection::perceive(d, app, &det).observation;
}

std::vector<PlannedAction> gui_save_csv() {
  std::vector<PlannedAction> out;
  for (const char* id : {"file_menu", "save_as_item", "format_dropdown", "fmt_csv", "save_button"}) {
    out.push_back(PlannedAction::click(id));
  }
  return out;
}

}  // namespace

TEST(ApiRegistry, ManifestLoads) {
  EXPECT_EQ(registry()->size(), 15u);
  const auto* e = registry()->find("sheetapp", "save_as");
  ASSERT_NE(e, nullptr);
  EXPECT_EQ(e->spec.args.size(), 1u);
  EXPECT_EQ(registry()->find("fileman", "save_as"), nullptr);
  EXPECT_TRUE(registry()->find("fileman", "delete_file")->spec.risk_tag);
}

TEST(ApiRegistry, DuplicateRejected) {
  ApiRegistry r;
  ApiSpec s{"go", "tiny", {}, "", false, "effects"};
  r.register_api(s, builtin_handlers().at("effects"));
  try {
    r.register_api(s, builtin_handlers().at("effects"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DuplicateApi);
  }
  s.app_binding = "other";
  EXPECT_NO_THROW(r.register_api(s, builtin_handlers().at("effects")));
}

TEST(ApiRegistry, UnknownHandlerInManifest) {
  const auto m = Json::parse(R"([{"app":"a","name":"x","handler":"nope","args":[]}])");
  EXPECT_THROW(ApiRegistry::load_manifest(m, builtin_handlers()), Error);
}

TEST(ApiRegistry, ActionSpaceListsAppApis) {
  const auto space = registry()->action_space("sheetapp");
  ASSERT_TRUE(space.is_array());
  EXPECT_EQ(space[0]["name"], "save_as");
  for (const auto& s : space) EXPECT_EQ(s["app"], "sheetapp");
  EXPECT_TRUE(registry()->action_space("nowhere").empty());
}

TEST(ValidateArgs, Schema) {
  const auto& spec = registry()->find("sheetapp", "reorder_column")->spec;
  EXPECT_FALSE(validate_args(spec, Json{{"column", "B"}, {"position", 3}}));
  EXPECT_TRUE(validate_args(spec, Json{{"column", "B"}}));
  EXPECT_TRUE(validate_args(spec, Json{{"column", "B"}, {"position", "3"}}));
  EXPECT_TRUE(validate_args(spec, Json{{"column", "B"}, {"position", 3}, {"extra", 1}}));
  EXPECT_TRUE(validate_args(spec, Json::array()));
}

TEST(Puppeteer, ApiCallIsOneExecutorAction) {
  simenv::Desktop d(catalog());
  d.launch_app("sheetapp");
  Puppeteer p(registry(), d);
  const auto out = p.execute("sheetapp", PlannedAction::api_call("save_as", Json{{"format", "csv"}}), observe(d, "sheetapp"));
  EXPECT_TRUE(out.ok());
  EXPECT_FALSE(out.fell_back);
  EXPECT_EQ(out.executor_actions, 1);
  EXPECT_EQ(d.document("sheetapp")["saved_format"], "csv");
}

TEST(Puppeteer, SchemaViolationLeavesStateUntouched) {
  simenv::Desktop d(catalog());
  d.launch_app("sheetapp");
  Puppeteer p(registry(), d);
  const auto before = d.state_hash();
  const auto out = p.execute("sheetapp", PlannedAction::api_call("save_as", Json{{"format", 7}}), observe(d, "sheetapp"));
  EXPECT_EQ(out.error, ErrorCode::SchemaViolation);
  EXPECT_EQ(d.state_hash(), before);
}

TEST(Puppeteer, UnregisteredApiIsMissingBinding) {
  simenv::Desktop d(catalog());
  d.launch_app("sheetapp");
  Puppeteer p(registry(), d);
  EXPECT_EQ(p.execute("sheetapp", PlannedAction::api_call("fly", Json::object()), observe(d, "sheetapp")).error,
            ErrorCode::MissingBinding);
}

TEST(Puppeteer, ReadDocumentReturnsValue) {
  simenv::Desktop d(catalog());
  d.launch_app("sheetapp");
  Puppeteer p(registry(), d);
  const auto out = p.execute("sheetapp", PlannedAction::api_call("read_cell", Json{{"key", "total"}}), observe(d, "sheetapp"));
  ASSERT_TRUE(out.ok());
  EXPECT_EQ(out.result["value"], "1,234.50");
  EXPECT_EQ(out.result["key"], "total");
}

TEST(Puppeteer, FailedApiRunsGuiFallback) {
  simenv::Desktop d(catalog());
  d.launch_app("sheetapp");
  Puppeteer p(registry(), d);
  auto a = PlannedAction::api_call("export_csv", Json{{"path", "r.csv"}});
  a.payload["gui_fallback"] = gui_save_csv();
  const auto out = p.execute("sheetapp", a, observe(d, "sheetapp"));
  EXPECT_TRUE(out.ok());
  EXPECT_TRUE(out.fell_back);
  EXPECT_EQ(out.executor_actions, 6);
  EXPECT_EQ(d.tick(), 5u);
  EXPECT_EQ(d.document("sheetapp")["saved_format"], "csv");
}

TEST(Puppeteer, FailedApiWithoutFallbackReportsHandlerError) {
  simenv::Desktop d(catalog());
  d.launch_app("sheetapp");
  Puppeteer p(registry(), d);
  const auto out = p.execute("sheetapp", PlannedAction::api_call("export_csv", Json::object()), observe(d, "sheetapp"));
  EXPECT_EQ(out.error, ErrorCode::ApiHandlerError);
  EXPECT_FALSE(out.fell_back);
}

TEST(Puppeteer, BrokenFallbackStepFails) {
  simenv::Desktop d(catalog());
  d.launch_app("sheetapp");
  Puppeteer p(registry(), d);
  auto a = PlannedAction::api_call("export_csv", Json::object());
  a.payload["gui_fallback"] = std::vector<PlannedAction>{PlannedAction::click("file_menu"), PlannedAction::click("ghost")};
  const auto out = p.execute("sheetapp", a, observe(d, "sheetapp"));
  EXPECT_FALSE(out.ok());
  EXPECT_TRUE(out.fell_back);
  EXPECT_EQ(out.error, ErrorCode::ControlNotFound);
}

TEST(Puppeteer, VisionControlResolvedByHitTest) {
  simenv::Desktop d(catalog());
  d.launch_app("slideapp");
  Puppeteer p(registry(), d);
  const auto obs = observe(d, "slideapp");
  const auto out = p.execute("slideapp", PlannedAction::click("vis-1"), obs);
  ASSERT_TRUE(out.ok()) << out.message;
  EXPECT_EQ(out.result["resolved_target"], "theme_facet");
  EXPECT_EQ(d.document("slideapp")["theme"], "Facet");
}
