#include "agentos/hostagent.hpp"

namespace agentos {

namespace {

/// Adapts an external agent to the SubtaskRunner contract, enforcing the
/// AppAgent state machine on whatever it reports.
class ShimRunner : public SubtaskRunner {
 public:
  ShimRunner(AgentEnv& env, std::string app_id, std::shared_ptr<ExternalAgentShim> shim)
      : env_(env), app_id_(std::move(app_id)), shim_(std::move(shim)) {}

  SubtaskResult run(std::size_t index, const Subtask& subtask, const Json& handoff) override {
    AppFsm fsm;
    SubtaskResult result;
    auto fire = [&](AppEvent event) {
      const auto from = fsm.state();
      const auto to = fsm.fire(event);
      env_.trace->append(events::kAppTransition, env_.round,
                         Json{{"app", app_id_},
                              {"subtask", index},
                              {"from", to_string(from)},
                              {"event", to_string(event)},
                              {"to", to_string(to)},
                              {"external", true}});
    };

    Observation obs;
    try {
      obs = detection::perceive(*env_.desktop, app_id_, env_.detector, env_.config.fusion).observation;
    } catch (const Error& e) {
      fire(AppEvent::Failed);
      result.error = e.code();
      result.detail = e.what();
      return result;
    }

    ExternalAgentShim::Emit emit = [&](AppState state, const Json& detail) {
      if (is_terminal(fsm.state())) {
        throw Error(ErrorCode::IllegalTransition, "external agent reported after a terminal state");
      }
      env_.trace->append(events::kAppOutput, env_.round,
                         Json{{"app", app_id_},
                              {"subtask", index},
                              {"step", result.steps},
                              {"external", true},
                              {"output", Json{{"status", to_string(state)}, {"detail", detail}}}});
      ++result.steps;
      switch (state) {
        case AppState::Continue:
          fire(fsm.state() == AppState::Pending ? AppEvent::Confirmed : AppEvent::Step);
          break;
        case AppState::Pending: {
          fire(AppEvent::RiskDetected);
          const Json request{{"app", app_id_}, {"subtask", index}, {"detail", detail}};
          env_.trace->append(events::kConfirmRequest, env_.round, request);
          const auto decision = env_.channel->confirm(request);
          env_.trace->append(events::kConfirm, env_.round,
                             Json{{"app", app_id_},
                                  {"subtask", index},
                                  {"decision", to_string(decision)},
                                  {"auto", env_.channel->automatic()}});
          if (decision == Decision::Deny) {
            env_.trace->append(events::kAborted, env_.round, Json{{"app", app_id_}, {"subtask", index}, {"detail", detail}});
          }
          fire(AppEvent::Confirmed);
          break;
        }
        case AppState::Finish: fire(AppEvent::Finished); break;
        case AppState::Fail: fire(AppEvent::Failed); break;
      }
    };

    try {
      shim_->run(subtask, handoff, obs, emit);
    } catch (const Error& e) {
      if (!is_terminal(fsm.state())) fire(AppEvent::Failed);
      result.state = AppState::Fail;
      result.error = e.code();
      result.detail = e.what();
      return result;
    }
    if (!is_terminal(fsm.state())) {
      fire(AppEvent::Failed);
      result.detail = "external agent stopped without a terminal state";
    }
    result.state = fsm.state();
    return result;
  }

 private:
  AgentEnv& env_;
  std::string app_id_;
  std::shared_ptr<ExternalAgentShim> shim_;
};

}  // namespace

void AgentRegistry::register_external(const std::string& app_id, std::shared_ptr<ExternalAgentShim> shim) {
  shims_[app_id] = std::move(shim);
}

SubtaskRunner& AgentRegistry::resolve(const std::string& app_id) {
  auto it = active_.find(app_id);
  if (it != active_.end()) return *it->second;
  std::unique_ptr<SubtaskRunner> runner;
  if (auto shim = shims_.find(app_id); shim != shims_.end()) {
    runner = std::make_unique<ShimRunner>(env_, app_id, shim->second);
  } else {
    runner = std::make_unique<AppAgent>(env_, app_id);
  }
  ++created_[app_id];
  return *active_.emplace(app_id, std::move(runner)).first->second;
}

int AgentRegistry::instantiations(const std::string& app_id) const {
  auto it = created_.find(app_id);
  return it == created_.end() ? 0 : it->second;
}

void AgentRegistry::release_all() { active_.clear(); }

void to_json(Json& j, const HostResult& v) {
  j = Json{{"state", to_string(v.state)},
           {"error", v.error ? Json(to_string(*v.error)) : Json(nullptr)},
           {"detail", v.detail},
           {"subtasks", v.subtasks},
           {"launches", v.launches}};
}

void HostAgent::transition(HostFsm& fsm, HostEvent event, const Json& detail) {
  const auto from = fsm.state();
  const auto to = fsm.fire(event);
  Json payload{{"from", to_string(from)}, {"event", to_string(event)}, {"to", to_string(to)}};
  for (const auto& [k, v] : detail.items()) payload[k] = v;
  env_.trace->append(events::kHostTransition, env_.round, payload);
}

HostResult HostAgent::fail(HostFsm& fsm, HostResult r, std::optional<ErrorCode> code, std::string detail) {
  transition(fsm, HostEvent::Fatal, Json{{"detail", detail}});
  r.state = HostState::Fail;
  r.error = code;
  r.detail = std::move(detail);
  agents_.release_all();
  return r;
}

int HostAgent::ensure_running(const std::string& app_id) {
  if (env_.desktop->is_running(app_id)) return 0;
  env_.desktop->launch_app(app_id);
  return 1;
}

planner::HostOutput HostAgent::decompose(const std::string& request, const Json& prior_rounds,
                                         const std::optional<std::string>& clarification) {
  if (request.empty()) throw Error(ErrorCode::InvalidRequest, "request is empty");
  planner::HostContext ctx;
  ctx.request = request;
  ctx.prior_rounds = prior_rounds;
  ctx.clarification = clarification;
  for (const auto& [id, def] : env_.desktop->catalog().apps()) {
    ctx.apps.push_back({id, def.display_name, env_.desktop->is_running(id)});
  }
  return env_.planner->plan_host(ctx);
}

HostResult HostAgent::run(const std::string& request, const Json& prior_rounds) {
  if (request.empty()) throw Error(ErrorCode::InvalidRequest, "request is empty");

  HostFsm fsm;
  HostResult result;
  std::optional<std::string> clarification;
  planner::HostOutput out;

  for (;;) {
    if (env_.is_cancelled()) return fail(fsm, std::move(result), ErrorCode::Cancelled, "round cancelled");
    try {
      out = decompose(request, prior_rounds, clarification);
    } catch (const Error& e) {
      return fail(fsm, std::move(result), e.code(), e.what());
    }
    env_.trace->append(events::kHostOutput, env_.round, Json(out));
    result.plan = out;

    for (const auto& cmd : out.shell_commands) {
      constexpr std::string_view kLaunch = "launch ";
      if (cmd.rfind(kLaunch, 0) != 0) {
        return fail(fsm, std::move(result), ErrorCode::InvalidArgument, "unsupported shell command '" + cmd + "'");
      }
      try {
        result.launches += ensure_running(cmd.substr(kLaunch.size()));
      } catch (const Error& e) {
        return fail(fsm, std::move(result), e.code(), e.what());
      }
    }

    if (out.host_state == HostState::Fail) {
      return fail(fsm, std::move(result), std::nullopt,
                  out.agent_message.empty() ? "planner gave up" : out.agent_message);
    }
    if (out.host_state != HostState::Pending) break;

    transition(fsm, HostEvent::ClarificationNeeded);
    env_.trace->append(events::kClarifyRequest, env_.round, Json{{"prompt", *out.user_prompt}});
    std::optional<std::string> reply;
    try {
      reply = env_.channel->clarify(*out.user_prompt);
    } catch (const Error& e) {
      return fail(fsm, std::move(result), e.code(), e.what());
    }
    env_.trace->append(events::kClarify, env_.round,
                       Json{{"reply", reply ? Json(*reply) : Json(nullptr)}, {"auto", env_.channel->automatic()}});
    if (!reply) return fail(fsm, std::move(result), ErrorCode::InvalidRequest, "clarification was not answered");
    transition(fsm, HostEvent::UserReply);
    clarification = reply;
  }

  const auto& subtasks = out.subtask_plan.subtasks;
  std::vector<bool> done(subtasks.size(), false);
  for (std::size_t i = 0; i < subtasks.size(); ++i) {
    const auto& subtask = subtasks[i];
    for (auto dep : subtask.depends_on) {
      if (!done[dep]) {
        return fail(fsm, std::move(result), ErrorCode::IllegalTransition,
                    "subtask " + std::to_string(i) + " depends on unfinished subtask " + std::to_string(dep));
      }
    }
    transition(fsm, HostEvent::SubtaskReady, Json{{"subtask", i}, {"app", subtask.target_app}});
    try {
      result.launches += ensure_running(subtask.target_app);
    } catch (const Error& e) {
      return fail(fsm, std::move(result), e.code(), e.what());
    }

    const Json handoff{{"subtask", subtask.description},
                       {"subtask_index", i},
                       {"agent_message", out.agent_message},
                       {"blackboard", Json{{"round", env_.round}, {"seq", env_.blackboard->size()}}},
                       {"prior_rounds", prior_rounds}};
    auto& runner = agents_.resolve(subtask.target_app);
    auto sub = runner.run(i, subtask, handoff);
    result.subtasks.push_back(sub);
    if (sub.state != AppState::Finish) {
      transition(fsm, HostEvent::SubtaskFailed, Json{{"subtask", i}, {"detail", sub.detail}});
      result.state = HostState::Fail;
      result.error = sub.error;
      result.detail = "subtask " + std::to_string(i) + " failed: " + sub.detail;
      agents_.release_all();
      return result;
    }
    done[i] = true;
    transition(fsm, HostEvent::SubtaskDone, Json{{"subtask", i}});
  }

  transition(fsm, HostEvent::AllDone);
  result.state = HostState::Finish;
  agents_.release_all();
  return result;
}

}  // namespace agentos
