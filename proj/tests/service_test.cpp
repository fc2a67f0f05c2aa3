#include <gtest/gtest.h>
#include <httplib.h>

#include <fstream>
#include <thread>

#include "agentos/service.hpp"
#include "support.hpp"

using namespace agentos;

namespace {

Json load(const std::string& script) {
  std::ifstream in(testing_support::fixtures() / "scripts" / script);
  return Json::parse(in);
}

Json merged_script() {
  Json out{{"host", Json::object()}, {"app", Json::object()}};
  for (const char* f : {"gui_save_as.json", "risky_delete.json", "clarify.json"}) {
    const auto j = load(f);
    for (const char* section : {"host", "app"}) out[section].update(j.value(section, Json::object()));
  }
  return out;
}

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ServiceConfig cfg;
    cfg.catalog = testing_support::catalog();
    const auto script = merged_script();
    cfg.backend_factory = [script] { return std::make_shared<planner::ScriptedBackend>(script); };
    cfg.registry = testing_support::registry();
    cfg.rules = safeguard::RiskRuleset::load_file(testing_support::fixtures() / "risk_rules.json");
    cfg.workers = 2;
    service = std::make_unique<Service>(std::move(cfg));
    port = service->start_background();
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
    client->set_read_timeout(10);
  }
  void TearDown() override { service.reset(); }

  Json post(const std::string& path, const Json& body, int expect) {
    auto res = client->Post(path, body.dump(), "application/json");
    EXPECT_TRUE(res);
    if (!res) return {};
    EXPECT_EQ(res->status, expect) << path << " " << res->body;
    return Json::parse(res->body);
  }
  Json get(const std::string& path, int expect = 200) {
    auto res = client->Get(path);
    EXPECT_TRUE(res);
    if (!res) return {};
    EXPECT_EQ(res->status, expect) << path << " " << res->body;
    return Json::parse(res->body);
  }
  std::string create(const Json& body = Json::object()) { return post("/sessions", body, 201)["session_id"]; }

  // Long-polls until an event of `kind` shows up; returns every event seen.
  std::vector<Json> wait_for(const std::string& id, const std::string& kind, std::uint64_t since = 0) {
    std::vector<Json> seen;
    for (int i = 0; i < 50; ++i) {
      const auto batch = get("/sessions/" + id + "/events?since=" + std::to_string(since) + "&wait_ms=200");
      for (const auto& e : batch) {
        seen.push_back(e);
        since = e["seq"];
        if (e["kind"] == kind) return seen;
      }
    }
    ADD_FAILURE() << "no " << kind << " event";
    return seen;
  }

  std::unique_ptr<Service> service;
  std::unique_ptr<httplib::Client> client;
  int port = 0;
};

}  // namespace

TEST_F(ServiceTest, RoundStreamsEventsToFinish) {
  const auto id = create(Json{{"prelaunch", {"sheetapp"}}});
  const auto r = post("/sessions/" + id + "/rounds",
                      Json{{"request", "Save the workbook as CSV"},
                           {"success_predicates", {{{"key", "sheetapp.saved_format"}, {"expected", "csv"}}}}},
                      202);
  EXPECT_EQ(r["round_index"], 1);
  auto events = wait_for(id, "evaluation");
  std::uint64_t expect = 1;
  std::string outcome;
  for (const auto& e : events) {
    EXPECT_EQ(e["seq"], expect++);
    if (e["kind"] == "round_end") outcome = e["payload"]["outcome"];
  }
  EXPECT_EQ(outcome, "FINISH");
  EXPECT_EQ(events.back()["payload"]["verdict"], "success");

  const auto info = get("/sessions/" + id);
  EXPECT_EQ(info["round_count"], 1);
  EXPECT_EQ(info["active"], false);
  EXPECT_EQ(info["rounds"][0]["executor_actions"], 5);
  EXPECT_EQ(get("/sessions").size(), 1u);

  auto log = client->Get("/sessions/" + id + "/log");
  ASSERT_TRUE(log);
  EXPECT_EQ(log->status, 200);
  EXPECT_NE(log->body.find("# Session " + id), std::string::npos);
}

TEST_F(ServiceTest, EventsSinceSkipsSeen) {
  const auto id = create(Json{{"prelaunch", {"sheetapp"}}});
  post("/sessions/" + id + "/rounds", Json{{"request", "Save the workbook as CSV"}}, 202);
  wait_for(id, "round_end");
  const auto all = get("/sessions/" + id + "/events");
  const auto tail = get("/sessions/" + id + "/events?since=3");
  EXPECT_EQ(tail.size(), all.size() - 3);
  EXPECT_EQ(tail[0]["seq"], 4);
}

TEST_F(ServiceTest, ConfirmWithoutPendingIs409) {
  const auto id = create();
  const auto j = post("/sessions/" + id + "/confirm", Json{{"decision", "approve"}}, 409);
  EXPECT_EQ(j["error"], "NotPending");
  post("/sessions/" + id + "/confirm", Json{{"decision", "maybe"}}, 400);
  post("/sessions/" + id + "/cancel", Json::object(), 409);
}

TEST_F(ServiceTest, ApproveResumesRiskyAction) {
  const auto id = create(Json{{"prelaunch", {"fileman"}}});
  post("/sessions/" + id + "/rounds", Json{{"request", "Archive and delete the old report"}}, 202);
  const auto seen = wait_for(id, "confirm_request");
  EXPECT_EQ(seen.back()["payload"]["matched_rule"], "destructive-api");
  EXPECT_EQ(get("/sessions/" + id)["pending"], "confirm");
  post("/sessions/" + id + "/confirm", Json{{"decision", "approve"}}, 200);
  const auto rest = wait_for(id, "round_end", seen.back()["seq"]);
  EXPECT_EQ(rest.back()["payload"]["outcome"], "FINISH");
  EXPECT_FALSE(service->session(id)->desktop().document("fileman")["deleted"].is_null());
}

TEST_F(ServiceTest, DenySkipsRiskyAction) {
  const auto id = create(Json{{"prelaunch", {"fileman"}}});
  post("/sessions/" + id + "/rounds", Json{{"request", "Archive and delete the old report"}}, 202);
  const auto seen = wait_for(id, "confirm_request");
  post("/sessions/" + id + "/confirm", Json{{"decision", "deny"}}, 200);
  const auto rest = wait_for(id, "round_end", seen.back()["seq"]);
  bool aborted = false;
  for (const auto& e : rest) aborted = aborted || e["kind"] == "aborted";
  EXPECT_TRUE(aborted);
  EXPECT_TRUE(service->session(id)->desktop().document("fileman")["deleted"].is_null());
}

TEST_F(ServiceTest, ClarificationReply) {
  const auto id = create(Json{{"prelaunch", {"sheetapp"}}});
  post("/sessions/" + id + "/rounds", Json{{"request", "Save it"}}, 202);
  const auto seen = wait_for(id, "clarify_request");
  EXPECT_EQ(get("/sessions/" + id)["pending"], "clarify");
  const auto script = load("clarify.json");
  std::string reply;
  for (const auto& [key, v] : script["host"].items()) {
    if (key.rfind("Save it | ", 0) == 0) reply = key.substr(10);
  }
  ASSERT_FALSE(reply.empty());
  post("/sessions/" + id + "/confirm", Json{{"reply", reply}}, 200);
  const auto rest = wait_for(id, "round_end", seen.back()["seq"]);
  EXPECT_EQ(rest.back()["payload"]["outcome"], "FINISH");
}

TEST_F(ServiceTest, CancelReleasesBlockedRound) {
  const auto id = create(Json{{"prelaunch", {"fileman"}}});
  post("/sessions/" + id + "/rounds", Json{{"request", "Archive and delete the old report"}}, 202);
  const auto seen = wait_for(id, "confirm_request");
  post("/sessions/" + id + "/rounds", Json{{"request", "another"}}, 409);
  post("/sessions/" + id + "/cancel", Json::object(), 202);
  const auto rest = wait_for(id, "round_end", seen.back()["seq"]);
  EXPECT_EQ(rest.back()["payload"]["outcome"], "FAIL");
  EXPECT_EQ(rest.back()["payload"]["error"], "Cancelled");
}

TEST_F(ServiceTest, BadRequests) {
  get("/sessions/nope", 404);
  get("/sessions/nope/events", 404);
  post("/sessions/nope/rounds", Json{{"request", "x"}}, 404);
  const auto id = create();
  post("/sessions/" + id + "/rounds", Json::object(), 400);
  post("/sessions/" + id + "/rounds", Json{{"request", ""}}, 400);
  auto res = client->Post("/sessions/" + id + "/rounds", "{not json", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  post("/sessions", Json{{"prelaunch", {"paint"}}}, 400);
  post("/sessions", Json{{"max_k", 0}}, 400);
  get("/sessions/" + id + "/events?since=abc", 400);
}
