#include "agentos/puppeteer.hpp"

#include <fstream>
#include <set>

namespace agentos::puppeteer {

namespace {

bool type_matches(const std::string& type, const Json& v) {
  if (type == "any") return true;
  if (type == "string") return v.is_string();
  if (type == "integer") return v.is_number_integer();
  if (type == "number") return v.is_number();
  if (type == "boolean") return v.is_boolean();
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  return false;
}

const std::set<std::string> kArgTypes{"string", "integer", "number", "boolean", "object", "array", "any"};

}  // namespace

void to_json(Json& j, const ApiSpec& v) {
  Json args = Json::array();
  for (const auto& a : v.args) args.push_back(Json{{"name", a.name}, {"type", a.type}, {"required", a.required}});
  j = Json{{"name", v.name},   {"app", v.app_binding}, {"description", v.description},
           {"args", args},     {"risk", v.risk_tag},   {"handler", v.handler}};
}

ApiSpec parse_api_spec(const Json& j) {
  ApiSpec s;
  try {
    s.name = j.at("name").get<std::string>();
    s.app_binding = j.at("app").get<std::string>();
    s.description = j.value("description", "");
    s.risk_tag = j.value("risk", false);
    s.handler = j.value("handler", "effects");
    for (const auto& a : j.value("args", Json::array())) {
      ArgSpec arg{a.at("name").get<std::string>(), a.value("type", "string"), a.value("required", true)};
      if (!kArgTypes.count(arg.type)) {
        throw Error(ErrorCode::InvalidArgument, s.name + ": unknown argument type '" + arg.type + "'");
      }
      s.args.push_back(std::move(arg));
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("API manifest entry: ") + e.what());
  }
  return s;
}

ActionOutcome ApiInvocation::apply_effects() {
  return desktop_.apply_action(spec_.app_binding, PlannedAction::api_call(spec_.name, args_));
}

std::map<std::string, ApiHandler> builtin_handlers() {
  std::map<std::string, ApiHandler> h;
  h["effects"] = [](ApiInvocation& inv) -> Json {
    const auto outcome = inv.apply_effects();
    if (!outcome.ok()) return Json{{"results", nullptr}, {"error", outcome.message}};
    return Json{{"results", {{"status", to_string(outcome.status)}}}, {"error", nullptr}};
  };
  h["read_document"] = [](ApiInvocation& inv) -> Json {
    const auto key = inv.args().value("key", "");
    const auto doc = inv.document();
    if (!doc.contains(key)) return Json{{"results", nullptr}, {"error", "no document key '" + key + "'"}};
    return Json{{"results", {{"key", key}, {"value", doc[key]}}}, {"error", nullptr}};
  };
  h["unavailable"] = [](ApiInvocation& inv) -> Json {
    return Json{{"results", nullptr}, {"error", "permission denied for " + inv.spec().name}};
  };
  return h;
}

void ApiRegistry::register_api(ApiSpec spec, ApiHandler handler) {
  if (find(spec.app_binding, spec.name)) {
    throw Error(ErrorCode::DuplicateApi, "API '" + spec.name + "' already registered for " + spec.app_binding);
  }
  std::set<std::string> names;
  for (const auto& a : spec.args) {
    if (!names.insert(a.name).second) {
      throw Error(ErrorCode::InvalidArgument, spec.name + ": duplicate argument '" + a.name + "'");
    }
  }
  if (!handler) throw Error(ErrorCode::InvalidArgument, spec.name + ": missing handler");
  entries_.push_back(Entry{std::move(spec), std::move(handler)});
}

ApiRegistry ApiRegistry::load_manifest(const Json& manifest, const std::map<std::string, ApiHandler>& handlers) {
  if (!manifest.is_array()) throw Error(ErrorCode::InvalidArgument, "API manifest must be a JSON array");
  ApiRegistry reg;
  for (const auto& j : manifest) {
    auto spec = parse_api_spec(j);
    auto it = handlers.find(spec.handler);
    if (it == handlers.end()) {
      throw Error(ErrorCode::MissingBinding, spec.name + ": no handler named '" + spec.handler + "'");
    }
    reg.register_api(std::move(spec), it->second);
  }
  return reg;
}

ApiRegistry ApiRegistry::load_manifest_file(const std::filesystem::path& path,
                                            const std::map<std::string, ApiHandler>& handlers) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open API manifest " + path.string());
  try {
    return load_manifest(Json::parse(in), handlers);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
  }
}

const ApiRegistry::Entry* ApiRegistry::find(const std::string& app_id, const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.spec.app_binding == app_id && e.spec.name == name) return &e;
  }
  return nullptr;
}

std::vector<const ApiSpec*> ApiRegistry::for_app(const std::string& app_id) const {
  std::vector<const ApiSpec*> out;
  for (const auto& e : entries_) {
    if (e.spec.app_binding == app_id) out.push_back(&e.spec);
  }
  return out;
}

Json ApiRegistry::action_space(const std::string& app_id) const {
  Json out = Json::array();
  for (const auto* s : for_app(app_id)) out.push_back(*s);
  return out;
}

std::optional<std::string> validate_args(const ApiSpec& spec, const Json& args) {
  if (!args.is_object()) return "arguments must be an object";
  for (const auto& a : spec.args) {
    if (!args.contains(a.name)) {
      if (a.required) return "missing required argument '" + a.name + "'";
      continue;
    }
    if (!type_matches(a.type, args[a.name])) return "argument '" + a.name + "' is not of type " + a.type;
  }
  for (const auto& [k, v] : args.items()) {
    bool known = false;
    for (const auto& a : spec.args) known = known || a.name == k;
    if (!known) return "unexpected argument '" + k + "'";
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

ActionOutcome Puppeteer::execute(const std::string& app_id, const PlannedAction& action, const Observation& context) {
  return action.operation == Operation::ApiCall ? execute_api(app_id, action, context)
                                                : execute_gui(app_id, action, context);
}

ActionOutcome Puppeteer::execute_gui(const std::string& app_id, const PlannedAction& action,
                                     const Observation& context) {
  if (!action.target) return ActionOutcome::failure(ErrorCode::ControlNotFound, "GUI action without target");
  PlannedAction resolved = action;
  if (const Control* c = context.find(*action.target); c && c->source == ControlSource::Vision) {
    // Pseudo-controls have no accessibility handle; act at the box center.
    auto hit = desktop_.hit_test(app_id, c->box.center_x(), c->box.center_y());
    if (!hit) {
      return ActionOutcome::failure(ErrorCode::ControlNotFound, "nothing under vision control " + c->id);
    }
    resolved.target = *hit;
  }
  auto outcome = desktop_.apply_action(app_id, resolved);
  if (resolved.target != action.target) outcome.result["resolved_target"] = *resolved.target;
  return outcome;
}

ActionOutcome Puppeteer::execute_api(const std::string& app_id, const PlannedAction& action,
                                     const Observation& context) {
  const std::string name = action.api_name();
  const Json args = action.api_args();

  ActionOutcome api_outcome;
  if (const auto* entry = registry_->find(app_id, name); !entry) {
    api_outcome = ActionOutcome::failure(ErrorCode::MissingBinding, "no API '" + name + "' registered for " + app_id);
  } else if (auto violation = validate_args(entry->spec, args)) {
    api_outcome = ActionOutcome::failure(ErrorCode::SchemaViolation, name + ": " + *violation);
  } else {
    ApiInvocation inv(entry->spec, args, desktop_);
    Json reply;
    try {
      reply = entry->handler(inv);
    } catch (const std::exception& e) {
      reply = Json{{"results", nullptr}, {"error", e.what()}};
    }
    const bool failed = reply.is_object() && reply.contains("error") && !reply["error"].is_null();
    if (failed) {
      const Json& err = reply["error"];
      api_outcome = ActionOutcome::failure(ErrorCode::ApiHandlerError, err.is_string() ? err.get<std::string>() : err.dump());
    } else {
      api_outcome.status = OutcomeStatus::Success;
      api_outcome.result = reply.is_object() && reply.contains("results") && !reply["results"].is_null()
                               ? reply["results"]
                               : Json::object();
    }
    api_outcome.executor_actions = 1;
  }
  if (api_outcome.ok()) return api_outcome;

  const auto fallback = action.gui_fallback();
  if (fallback.empty()) return api_outcome;

  ActionOutcome out;
  out.fell_back = true;
  out.executor_actions = api_outcome.executor_actions;
  out.result = Json{{"api_error", api_outcome.message}, {"fallback_steps", fallback.size()}};
  for (std::size_t i = 0; i < fallback.size(); ++i) {
    const auto step = execute_gui(app_id, fallback[i], context);
    out.executor_actions += step.executor_actions;
    if (!step.ok()) {
      out.status = OutcomeStatus::Error;
      out.error = step.error;
      out.message = "fallback step " + std::to_string(i + 1) + " failed: " + step.message;
      return out;
    }
  }
  out.status = OutcomeStatus::Success;
  return out;
}

}  // namespace agentos::puppeteer
