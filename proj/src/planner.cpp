#include "agentos/planner.hpp"

#include <fstream>
#include <regex>
#include <sstream>

#include "agentos/hash.hpp"

namespace agentos::planner {

namespace {

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::PlannerOutputMalformed, what); }

constexpr const char* kHostSystemPrompt =
    "You are the HostAgent of a desktop automation runtime. Break the user's request into an ordered list of "
    "subtasks, each carried out inside exactly one application, and pick the application for the first one.\n"
    "Reply with one JSON object and nothing else:\n"
    "{\"subtask_plan\": {\"subtasks\": [{\"description\": str, \"target_app\": str, \"depends_on\": [int]}], "
    "\"origin_request\": str},\n"
    " \"shell_commands\": [\"launch <app_id>\"],\n"
    " \"assigned_app\": {\"app_id\": str, \"instance\": int} | null,\n"
    " \"agent_message\": str,\n"
    " \"user_prompt\": str | null,\n"
    " \"status\": \"ASSIGN\" | \"PENDING\" | \"FAIL\"}\n"
    "depends_on lists indices of earlier subtasks only. Use PENDING with a user_prompt when the request is too "
    "ambiguous to plan; use FAIL when no listed application can serve it.";

constexpr const char* kAppSystemPrompt =
    "You are an AppAgent driving a single application. Each control is listed as [mark] type \"label\" "
    "(id). You may also call the application's registered APIs; prefer an API when one performs the step, and "
    "put the equivalent GUI steps in payload.gui_fallback so they run if the call fails.\n"
    "Reply with one JSON object and nothing else:\n"
    "{\"batch\": [{\"target\": control id | null, \"operation\": \"Click\" | \"TypeText\" | \"Hotkey\" | "
    "\"ApiCall\", \"payload\": {...}, \"rationale\": str}],\n"
    " \"rationale\": str,\n"
    " \"status\": \"CONTINUE\" | \"FINISH\" | \"FAIL\",\n"
    " \"blackboard_updates\": [{\"kind\": \"Result\" | \"Insight\" | \"Error\" | \"Metadata\", ...}]}\n"
    "Payloads: TypeText {\"text\"}, Hotkey {\"keys\"}, ApiCall {\"api\", \"args\", \"gui_fallback\"?}.\n"
    "You may predict several consecutive actions. They run in order and execution stops at the first action "
    "whose control is gone, hidden or disabled by then, after which you are asked again. Set status FINISH "
    "once the subtask is complete.";

constexpr const char* kJudgeSystemPrompt =
    "You evaluate whether a desktop automation session achieved the user's request. Break the request into "
    "checkable criteria, score each in [0,1], and reply with one JSON object: {\"verdict\": \"success\" | "
    "\"partial\" | \"failure\", \"criteria\": [{\"description\": str, \"score\": number}], \"rationale\": str}.";

std::string control_line(const Control& c) {
  std::ostringstream os;
  os << "[" << (c.som_mark ? std::to_string(*c.som_mark) : "-") << "] " << c.control_type << " \"" << c.label
     << "\" (" << c.id << ")";
  if (!c.enabled) os << " disabled";
  if (c.source == ControlSource::Vision) os << " vision";
  return os.str();
}

Json budgeted_knowledge(const knowledge::Retrieval& r, const PromptBudget& budget) {
  knowledge::Retrieval cut = r;
  if (cut.docs.size() > budget.docs) cut.docs.resize(budget.docs);
  if (cut.examples.size() > budget.examples) cut.examples.resize(budget.examples);
  return cut;
}

std::string observation_digest(const Observation& obs) { return json_digest(Json(obs)); }

}  // namespace

std::string_view to_string(Role r) {
  switch (r) {
    case Role::Host: return "host";
    case Role::App: return "app";
    case Role::Judge: return "judge";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Contracts

HostOutput parse_host_output(const Json& j) {
  if (!j.is_object()) malformed("host output must be a JSON object");
  HostOutput out;
  try {
    out.host_state = parse_host_state(j.at("status").get<std::string>());
    if (j.contains("subtask_plan") && !j["subtask_plan"].is_null()) {
      out.subtask_plan = j["subtask_plan"].get<SubtaskPlan>();
    }
    out.shell_commands = j.value("shell_commands", std::vector<std::string>{});
    if (j.contains("assigned_app") && !j["assigned_app"].is_null()) {
      const auto& a = j["assigned_app"];
      out.assigned_app = AssignedApp{a.at("app_id").get<std::string>(), a.value("instance", 0)};
    }
    out.agent_message = j.value("agent_message", "");
    if (j.contains("user_prompt") && !j["user_prompt"].is_null()) out.user_prompt = j["user_prompt"].get<std::string>();
    out.subtask_plan.validate();
  } catch (const Json::exception& e) {
    malformed(std::string("host output: ") + e.what());
  } catch (const Error& e) {
    malformed(std::string("host output: ") + e.what());
  }
  switch (out.host_state) {
    case HostState::Assign:
      if (!out.assigned_app) malformed("host output: ASSIGN requires assigned_app");
      if (out.subtask_plan.subtasks.empty()) malformed("host output: ASSIGN requires at least one subtask");
      break;
    case HostState::Pending:
      if (!out.user_prompt) malformed("host output: PENDING requires user_prompt");
      break;
    case HostState::Fail: break;
    default: malformed("host output: status must be ASSIGN, PENDING or FAIL");
  }
  return out;
}

void to_json(Json& j, const HostOutput& v) {
  j = Json{{"subtask_plan", v.subtask_plan},
           {"shell_commands", v.shell_commands},
           {"assigned_app", v.assigned_app ? Json{{"app_id", v.assigned_app->app_id},
                                                  {"instance", v.assigned_app->instance}}
                                           : Json(nullptr)},
           {"agent_message", v.agent_message},
           {"user_prompt", v.user_prompt ? Json(*v.user_prompt) : Json(nullptr)},
           {"status", to_string(v.host_state)}};
}

AppAgentOutput parse_app_output(const Json& j) {
  if (!j.is_object()) malformed("app output must be a JSON object");
  AppAgentOutput out;
  try {
    out.local_state = parse_app_state(j.at("status").get<std::string>());
    out.batch.actions = j.at("batch").get<std::vector<PlannedAction>>();
    out.rationale = j.value("rationale", "");
    for (const auto& u : j.value("blackboard_updates", Json::array())) {
      if (!u.is_object()) malformed("blackboard update must be an object");
      if (u.contains("kind")) parse_entry_kind(u["kind"].get<std::string>());
      out.blackboard_updates.push_back(u);
    }
  } catch (const Json::exception& e) {
    malformed(std::string("app output: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::PlannerOutputMalformed) throw;
    malformed(std::string("app output: ") + e.what());
  }
  return out;
}

void to_json(Json& j, const AppAgentOutput& v) {
  j = Json{{"batch", v.batch.actions},
           {"rationale", v.rationale},
           {"status", to_string(v.local_state)},
           {"blackboard_updates", v.blackboard_updates}};
  if (v.truncated) {
    j["truncated"] = true;
    j["truncation_reason"] = v.truncation_reason;
    j["replan"] = v.replan;
  }
}

// ---------------------------------------------------------------------------
// Scripted backend

ScriptedBackend::ScriptedBackend(Json fixture) : fixture_(std::move(fixture)) {
  if (!fixture_.is_object()) throw Error(ErrorCode::InvalidArgument, "planner script must be a JSON object");
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open planner script " + path.string());
  try {
    return std::make_shared<ScriptedBackend>(Json::parse(in));
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
  }
}

namespace {

const std::regex kBlackboardRef(R"(\$\{blackboard:(\d+):([A-Za-z0-9_.]+)\})");

Json substitute(const Json& value, const Json& blackboard) {
  if (value.is_object()) {
    Json out = Json::object();
    for (const auto& [k, v] : value.items()) out[k] = substitute(v, blackboard);
    return out;
  }
  if (value.is_array()) {
    Json out = Json::array();
    for (const auto& v : value) out.push_back(substitute(v, blackboard));
    return out;
  }
  if (!value.is_string()) return value;

  const auto text = value.get<std::string>();
  std::string out;
  auto begin = std::sregex_iterator(text.begin(), text.end(), kBlackboardRef);
  std::size_t last = 0;
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    const auto subtask = std::stoull(m[1].str());
    const auto field = m[2].str();
    std::optional<Json> found;
    if (blackboard.is_array()) {
      for (const auto& e : blackboard) {
        if (e.value("kind", "") != "Result") continue;
        const auto& body = e.value("body", Json::object());
        if (body.value("produced_by_subtask", static_cast<std::uint64_t>(-1)) != subtask) continue;
        const auto payload = body.value("payload", Json::object());
        if (payload.contains(field)) found = payload[field];
      }
    }
    out += text.substr(last, static_cast<std::size_t>(m.position()) - last);
    if (found) {
      out += found->is_string() ? found->get<std::string>() : found->dump();
    } else {
      out += m.str();
    }
    last = static_cast<std::size_t>(m.position() + m.length());
  }
  out += text.substr(last);
  return out;
}

/// A scripted entry may be a plain response or {"raw": text, "repair": response}.
Json pick_attempt(const Json& entry, int attempt) {
  if (entry.is_object() && entry.contains("raw")) {
    if (attempt == 0) return entry["raw"];
    return entry.value("repair", Json());
  }
  return entry;
}

Json trajectory_response(const Json& traj, int executed) {
  const auto& batches = traj.at("batches");
  int start = 0;
  for (std::size_t b = 0; b < batches.size(); ++b) {
    const int len = static_cast<int>(batches[b].size());
    if (executed < start + len) {
      Json actions = Json::array();
      for (int i = executed - start; i < len; ++i) actions.push_back(batches[b][static_cast<std::size_t>(i)]);
      const auto guesses = traj.value("guesses", Json::object());
      if (auto g = guesses.find(std::to_string(b)); g != guesses.end()) {
        for (const auto& a : *g) actions.push_back(a);
      }
      // The response reaches the end of the trajectory with nothing speculative after it.
      const bool last = b + 1 == batches.size() && actions.size() == static_cast<std::size_t>(len - (executed - start));
      return Json{{"batch", actions},
                  {"rationale", "scripted trajectory batch " + std::to_string(b)},
                  {"status", last ? "FINISH" : "CONTINUE"}};
    }
    start += len;
  }
  return Json{{"batch", Json::array()}, {"rationale", "all planned actions executed"}, {"status", "FINISH"}};
}

}  // namespace

Json ScriptedBackend::respond(const PlannerRequest& request) const {
  const std::string section(to_string(request.role));
  const auto table = fixture_.value(section, Json::object());
  auto it = table.find(request.trigger_key);
  if (it == table.end()) {
    throw Error(ErrorCode::BackendUnavailable,
                "no scripted " + section + " response for '" + request.trigger_key + "'");
  }
  const Json& entry = *it;
  const Json blackboard = request.context.value("blackboard", Json::array());

  if (request.role == Role::App && entry.is_object() && entry.contains("trajectory")) {
    return substitute(trajectory_response(entry["trajectory"], request.context.value("executed_count", 0)),
                      blackboard);
  }
  if (request.role == Role::App && entry.is_object() && entry.contains("steps")) {
    const auto& steps = entry["steps"];
    if (!steps.is_array() || steps.empty()) throw Error(ErrorCode::InvalidArgument, "scripted steps must be non-empty");
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(std::max(request.step, 0)), steps.size() - 1);
    return substitute(pick_attempt(steps[idx], request.attempt), blackboard);
  }
  return substitute(pick_attempt(entry, request.attempt), blackboard);
}

std::string ScriptedBackend::complete(const PlannerRequest& request) {
  const Json r = respond(request);
  return r.is_string() ? r.get<std::string>() : r.dump();
}

// ---------------------------------------------------------------------------
// Planner

PlannerRequest Planner::host_request(const HostContext& ctx) const {
  PlannerRequest req;
  req.role = Role::Host;
  req.trigger_key = ctx.clarification ? ctx.request + " | " + *ctx.clarification : ctx.request;
  req.system_prompt = kHostSystemPrompt;

  Json apps = Json::array();
  std::ostringstream os;
  os << "## Request\n" << ctx.request << "\n";
  if (ctx.clarification) os << "\n## User clarification\n" << *ctx.clarification << "\n";
  os << "\n## Applications\n";
  for (const auto& a : ctx.apps) {
    os << "- " << a.app_id << " (" << a.display_name << ")" << (a.running ? " running" : "") << "\n";
    apps.push_back(Json{{"app_id", a.app_id}, {"display_name", a.display_name}, {"running", a.running}});
  }
  if (!ctx.prior_rounds.empty()) {
    os << "\n## Earlier rounds in this session\n";
    for (const auto& r : ctx.prior_rounds) {
      os << "- Round " << r.value("round", 0) << ": \"" << r.value("request", "") << "\" -> "
         << r.value("outcome", "") << (r.contains("verdict") ? " (" + r.value("verdict", "") + ")" : "") << "\n";
    }
  }
  req.user_prompt = os.str();
  req.context = Json{{"request", ctx.request},
                     {"apps", apps},
                     {"prior_rounds", ctx.prior_rounds},
                     {"clarification", ctx.clarification ? Json(*ctx.clarification) : Json(nullptr)}};
  return req;
}

PlannerRequest Planner::app_request(const AppContext& ctx) const {
  PlannerRequest req;
  req.role = Role::App;
  req.trigger_key = ctx.subtask;
  req.step = ctx.step;
  req.system_prompt = kAppSystemPrompt;

  const Json knowledge = budgeted_knowledge(ctx.knowledge, budget_);
  std::ostringstream os;
  os << "## Subtask\n" << ctx.subtask << "\n";
  if (!ctx.handoff.value("agent_message", "").empty()) os << "\n## Note from HostAgent\n" << ctx.handoff["agent_message"].get<std::string>() << "\n";
  os << "\n## Controls in " << ctx.app_id << "\n";
  for (const auto& c : ctx.observation.controls) os << control_line(c) << "\n";
  os << "\n## APIs\n";
  if (ctx.action_space.empty()) os << "(none)\n";
  for (const auto& api : ctx.action_space) os << "- " << api.value("name", "") << ": " << api.value("description", "") << " args=" << api.value("args", Json::array()).dump() << "\n";
  if (!knowledge["docs"].empty() || !knowledge["examples"].empty()) {
    os << "\n## Reference\n";
    for (const auto& d : knowledge["docs"]) os << "Help: " << d["doc"].value("request", "") << "\n" << d["doc"].value("guidance", "") << "\n";
    for (const auto& e : knowledge["examples"]) {
      os << "Example: " << e["record"].value("task_signature", "") << "\n";
      for (const auto& step : e["record"].value("plan", Json::array())) os << "  - " << step.get<std::string>() << "\n";
    }
  }
  if (!ctx.blackboard.empty()) {
    os << "\n## Blackboard\n";
    for (const auto& e : ctx.blackboard) os << "#" << e.seq << " " << to_string(e.kind) << " by " << e.author << ": " << e.body.dump() << "\n";
  }
  if (!ctx.history.empty()) {
    os << "\n## Your recent steps\n";
    for (const auto& h : ctx.history) os << "- " << h.dump() << "\n";
  }
  os << "\nPredict at most " << ctx.max_k << " action(s).\n";
  req.user_prompt = os.str();

  Json blackboard = Json::array();
  for (const auto& e : ctx.blackboard) blackboard.push_back(e);
  req.context = Json{{"subtask", ctx.subtask},
                     {"app_id", ctx.app_id},
                     {"handoff", ctx.handoff},
                     {"observation", ctx.observation},
                     {"action_space", ctx.action_space},
                     {"knowledge", knowledge},
                     {"blackboard", blackboard},
                     {"history", ctx.history},
                     {"step", ctx.step},
                     {"executed_count", ctx.executed_count},
                     {"max_k", ctx.max_k}};
  return req;
}

template <typename Parse>
auto Planner::call_with_repair(PlannerRequest req, const std::string& observation_hash, Parse parse)
    -> decltype(parse(Json())) {
  const std::string digest = json_digest(req.context);
  const std::string base_prompt = req.user_prompt;
  std::string last_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    req.attempt = attempt;
    if (attempt > 0) {
      req.user_prompt = base_prompt + "\n\nYour previous reply could not be used: " + last_error +
                        "\nReply again with only the JSON object.";
    }
    PlannerCall call{req.role, req.trigger_key, req.step, attempt, digest, observation_hash, {}, std::nullopt};
    try {
      call.response = backend_->complete(req);
    } catch (const Error& e) {
      call.error = e.what();
      if (observer_) observer_(call);
      throw;
    }
    try {
      auto result = parse(Json::parse(call.response));
      if (observer_) observer_(call);
      return result;
    } catch (const Json::exception& e) {
      last_error = std::string("invalid JSON: ") + e.what();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::PlannerOutputMalformed) throw;
      last_error = e.what();
    }
    call.error = last_error;
    if (observer_) observer_(call);
  }
  throw Error(ErrorCode::PlannerOutputMalformed, last_error);
}

HostOutput Planner::plan_host(const HostContext& ctx) {
  if (ctx.request.empty()) throw Error(ErrorCode::InvalidRequest, "request is empty");
  return call_with_repair(host_request(ctx), {}, [&](const Json& j) {
    auto out = parse_host_output(j);
    if (!ctx.apps.empty()) {
      auto known = [&](const std::string& id) {
        for (const auto& a : ctx.apps) {
          if (a.app_id == id) return true;
        }
        return false;
      };
      for (const auto& s : out.subtask_plan.subtasks) {
        if (!known(s.target_app)) malformed("host output: unknown application '" + s.target_app + "'");
      }
      if (out.assigned_app && !known(out.assigned_app->app_id)) {
        malformed("host output: unknown application '" + out.assigned_app->app_id + "'");
      }
    }
    if (out.subtask_plan.origin_request.empty()) out.subtask_plan.origin_request = ctx.request;
    return out;
  });
}

AppAgentOutput Planner::plan_app(const AppContext& ctx) {
  auto out = call_with_repair(app_request(ctx), observation_digest(ctx.observation),
                              [](const Json& j) { return parse_app_output(j); });
  auto& actions = out.batch.actions;
  if (actions.size() > ctx.max_k) {
    actions.resize(ctx.max_k);
    out.truncated = true;
    out.truncation_reason = "batch truncated to max_k=" + std::to_string(ctx.max_k);
  }
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (!is_gui(actions[i].operation) || !actions[i].target) continue;
    if (!ctx.observation.find(*actions[i].target)) {
      out.truncation_reason = "unknown control '" + *actions[i].target + "' at position " + std::to_string(i + 1);
      actions.resize(i);
      out.truncated = true;
      out.replan = true;
      break;
    }
  }
  // A completion claim covered the dropped actions too.
  if (out.truncated && out.local_state == AppState::Finish) out.local_state = AppState::Continue;
  return out;
}

Json Planner::judge(const std::string& request, const std::string& transcript, const Json& criteria) {
  PlannerRequest req;
  req.role = Role::Judge;
  req.trigger_key = request;
  req.system_prompt = kJudgeSystemPrompt;
  req.user_prompt = "## Request\n" + request + "\n\n## Criteria hints\n" + criteria.dump() + "\n\n## Session log\n" +
                    transcript;
  req.context = Json{{"request", request}, {"criteria", criteria}, {"transcript_digest", sha256_hex(transcript)}};
  return call_with_repair(req, {}, [](const Json& j) {
    if (!j.is_object() || !j.contains("verdict")) malformed("judge output needs a verdict");
    return j;
  });
}

}  // namespace agentos::planner
