#include "agentos/appagent.hpp"

#include <deque>

#include "agentos/hash.hpp"

namespace agentos {

void to_json(Json& j, const RuntimeConfig& v) {
  j = Json{{"max_k", v.max_k},
           {"step_budget", v.step_budget},
           {"dedup_vision", v.fusion.dedup_vision},
           {"min_confidence", v.fusion.min_confidence}};
}

void to_json(Json& j, const SubtaskResult& v) {
  j = Json{{"state", to_string(v.state)},
           {"error", v.error ? Json(to_string(*v.error)) : Json(nullptr)},
           {"detail", v.detail},
           {"steps", v.steps},
           {"executed", v.executed}};
}

namespace {

Json control_summary(const Observation& obs) {
  Json out = Json::array();
  for (const auto& c : obs.controls) {
    out.push_back(Json{{"mark", c.som_mark ? Json(*c.som_mark) : Json(nullptr)},
                       {"id", c.id},
                       {"type", c.control_type},
                       {"label", c.label},
                       {"source", to_string(c.source)},
                       {"enabled", c.enabled}});
  }
  return out;
}

/// Body of a Result entry for an API call that returned something.
std::optional<Json> result_payload(const ExecutedAction& done) {
  if (done.action.operation != Operation::ApiCall || !done.outcome.ok() || done.outcome.fell_back) return std::nullopt;
  const Json& r = done.outcome.result;
  if (r.is_null() || (r.is_object() && r.empty())) return std::nullopt;
  if (r.is_object()) return r;
  return Json{{"value", r}};
}

}  // namespace

Observation AppAgent::observe() const {
  return detection::perceive(*env_.desktop, app_id_, env_.detector, env_.config.fusion).observation;
}

void AppAgent::transition(AppFsm& fsm, AppEvent event, std::size_t index) {
  const auto from = fsm.state();
  const auto to = fsm.fire(event);
  env_.trace->append(events::kAppTransition, env_.round,
                     Json{{"app", app_id_},
                          {"subtask", index},
                          {"from", to_string(from)},
                          {"event", to_string(event)},
                          {"to", to_string(to)}});
}

SubtaskResult AppAgent::fail(AppFsm& fsm, std::size_t index, SubtaskResult r, std::optional<ErrorCode> code,
                             std::string detail) {
  transition(fsm, AppEvent::Failed, index);
  r.state = AppState::Fail;
  r.error = code;
  r.detail = std::move(detail);
  env_.blackboard->append(Json{{"subtask", index}, {"error", code ? Json(to_string(*code)) : Json(nullptr)},
                               {"detail", r.detail}},
                          "app:" + app_id_, EntryKind::Error, env_.round);
  return r;
}

SubtaskResult AppAgent::run(std::size_t index, const Subtask& subtask, const Json& handoff) {
  AppFsm fsm;
  SubtaskResult result;
  std::deque<Json> history;
  speculative::PuppeteerExecutor executor(*env_.puppeteer, *env_.desktop, app_id_, env_.detector,
                                          env_.config.fusion);
  const std::string author = "app:" + app_id_;

  for (int step = 0;; ++step) {
    if (env_.is_cancelled()) return fail(fsm, index, result, ErrorCode::Cancelled, "round cancelled");
    if (env_.steps_used >= env_.config.step_budget) {
      return fail(fsm, index, result, ErrorCode::BudgetExhausted,
                  "step budget of " + std::to_string(env_.config.step_budget) + " exhausted");
    }

    detection::Perception seen;
    try {
      seen = detection::perceive(*env_.desktop, app_id_, env_.detector, env_.config.fusion);
    } catch (const Error& e) {
      return fail(fsm, index, result, e.code(), e.what());
    }
    const Observation& obs = seen.observation;
    const std::string obs_hash = json_digest(Json(obs));
    env_.trace->append(events::kObservation, env_.round,
                       Json{{"app", app_id_},
                            {"subtask", index},
                            {"step", step},
                            {"observation_hash", obs_hash},
                            {"screenshot_ref", obs.screenshot_ref},
                            {"fusion", seen.stats},
                            {"controls", control_summary(obs)}});

    planner::AppContext ctx;
    ctx.subtask = subtask.description;
    ctx.app_id = app_id_;
    ctx.handoff = handoff;
    ctx.observation = obs;
    ctx.action_space = env_.registry->action_space(app_id_);
    if (env_.knowledge) {
      ctx.knowledge = env_.knowledge->retrieve(app_id_, subtask.description, env_.planner->budget().docs,
                                               env_.planner->budget().examples);
    }
    ctx.blackboard = env_.blackboard->read();
    ctx.history.assign(history.begin(), history.end());
    ctx.step = step;
    ctx.executed_count = result.executed;
    ctx.max_k = env_.config.max_k;

    ++env_.steps_used;
    ++result.steps;
    planner::AppAgentOutput out;
    try {
      out = env_.planner->plan_app(ctx);
    } catch (const Error& e) {
      return fail(fsm, index, result, e.code(), e.what());
    }
    Json out_json = out;
    env_.trace->append(events::kAppOutput, env_.round,
                       Json{{"app", app_id_}, {"subtask", index}, {"step", step}, {"output", out_json}});

    for (const auto& update : out.blackboard_updates) {
      Json body = update;
      EntryKind kind = EntryKind::Insight;
      if (body.contains("kind")) {
        kind = parse_entry_kind(body["kind"].get<std::string>());
        body.erase("kind");
      }
      if (kind == EntryKind::Result && !body.contains("produced_by_subtask")) body["produced_by_subtask"] = index;
      env_.blackboard->append(std::move(body), author, kind, env_.round);
    }

    Json record{{"step", step}, {"output", out_json}};
    auto remember = [&](Json r) {
      history.push_back(std::move(r));
      while (history.size() > kHistoryWindow) history.pop_front();
    };

    if (out.local_state == AppState::Fail) {
      remember(record);
      return fail(fsm, index, result, std::nullopt,
                  out.rationale.empty() ? "planner reported failure" : out.rationale);
    }

    auto batch = out.batch;
    if (batch.actions.empty()) {
      remember(record);
      if (out.local_state == AppState::Finish) {
        transition(fsm, AppEvent::Finished, index);
        result.state = AppState::Finish;
        return result;
      }
      transition(fsm, AppEvent::Step, index);
      continue;
    }

    // Screen the whole batch before anything runs.
    std::optional<std::size_t> risky_at;
    std::optional<std::string> risky_rule;
    for (std::size_t i = 0; i < batch.actions.size(); ++i) {
      const auto verdict =
          safeguard::screen(batch.actions[i], *env_.rules, app_id_, &obs, env_.registry.get());
      env_.trace->append(events::kSafeguard, env_.round,
                         Json{{"app", app_id_},
                              {"subtask", index},
                              {"step", step},
                              {"index", i},
                              {"action", batch.actions[i]},
                              {"risky", verdict.risky},
                              {"matched_rule", verdict.matched_rule ? Json(*verdict.matched_rule) : Json(nullptr)}});
      if (verdict.risky && !risky_at) {
        risky_at = i;
        risky_rule = verdict.matched_rule;
      }
    }

    bool finish_claim = out.local_state == AppState::Finish;
    if (risky_at) {
      if (*risky_at + 1 < batch.actions.size()) finish_claim = false;
      batch.actions.resize(*risky_at + 1);
      transition(fsm, AppEvent::RiskDetected, index);
      const Json request{{"app", app_id_},
                         {"subtask", index},
                         {"step", step},
                         {"index", *risky_at},
                         {"action", batch.actions.back()},
                         {"description", batch.actions.back().describe()},
                         {"matched_rule", risky_rule ? Json(*risky_rule) : Json(nullptr)}};
      env_.trace->append(events::kConfirmRequest, env_.round, request);
      Decision decision;
      try {
        decision = env_.channel->confirm(request);
      } catch (const Error& e) {
        return fail(fsm, index, result, e.code(), e.what());
      }
      env_.trace->append(events::kConfirm, env_.round,
                         Json{{"app", app_id_},
                              {"subtask", index},
                              {"step", step},
                              {"decision", to_string(decision)},
                              {"auto", env_.channel->automatic()}});
      if (decision == Decision::Deny) {
        env_.trace->append(events::kAborted, env_.round,
                           Json{{"app", app_id_},
                                {"subtask", index},
                                {"step", step},
                                {"index", *risky_at},
                                {"action", batch.actions.back()},
                                {"description", batch.actions.back().describe()}});
        transition(fsm, AppEvent::Confirmed, index);
        record["denied"] = batch.actions.back().describe();
        batch.actions.pop_back();
        finish_claim = false;
        if (batch.actions.empty()) {
          remember(record);
          continue;
        }
      } else {
        transition(fsm, AppEvent::Confirmed, index);
      }
    }

    speculative::BatchHooks hooks;
    hooks.cancelled = [this] { return env_.is_cancelled(); };
    hooks.on_execute = [&](std::size_t i, const ExecutedAction& done) {
      env_.trace->append(events::kAction, env_.round,
                         Json{{"app", app_id_},
                              {"subtask", index},
                              {"step", step},
                              {"index", i},
                              {"action", done.action},
                              {"description", done.action.describe()},
                              {"outcome", done.outcome}});
    };
    const auto report = speculative::run_batch(batch, obs, *env_.registry, executor, env_.config.max_k, hooks);
    result.executed += static_cast<int>(report.executed.size());
    for (const auto& done : report.executed) log_.push_back(done);
    if (report.failed && report.halt_reason == HaltReason::ExecutionError) log_.push_back(*report.failed);

    env_.trace->append(events::kBatchReport, env_.round,
                       Json{{"app", app_id_},
                            {"subtask", index},
                            {"step", step},
                            {"k", batch.k()},
                            {"executed", report.executed.size()},
                            {"halted_early", report.halted_early},
                            {"halt_reason", to_string(report.halt_reason)},
                            {"halt_detail", report.halt_detail},
                            {"replan", report.replan() || out.replan},
                            {"executor_actions", report.executor_actions()}});

    for (const auto& done : report.executed) {
      if (auto payload = result_payload(done)) {
        env_.blackboard->append(Json{{"produced_by_subtask", index}, {"payload", *payload}}, author,
                                EntryKind::Result, env_.round);
      }
    }

    record["executed"] = report.executed.size();
    record["halt"] = report.halted_early ? Json(report.halt_detail) : Json(nullptr);
    remember(record);

    if (report.halt_detail == "cancelled") return fail(fsm, index, result, ErrorCode::Cancelled, "round cancelled");
    if (report.failed && report.failed->outcome.error == ErrorCode::AppCrashed) {
      return fail(fsm, index, result, ErrorCode::AppCrashed, report.failed->outcome.message);
    }
    if (finish_claim && !report.halted_early) {
      transition(fsm, AppEvent::Finished, index);
      result.state = AppState::Finish;
      return result;
    }
    transition(fsm, AppEvent::Step, index);
  }
}

}  // namespace agentos
