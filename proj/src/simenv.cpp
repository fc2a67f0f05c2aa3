#include "agentos/simenv.hpp"

#include <algorithm>
#include <fstream>

#include "agentos/hash.hpp"

namespace agentos::simenv {

namespace {

MutationKind parse_mutation_kind(const std::string& s) {
  static const std::map<std::string, MutationKind> kinds{
      {"show", MutationKind::Show},           {"hide", MutationKind::Hide},
      {"enable", MutationKind::Enable},       {"disable", MutationKind::Disable},
      {"set_label", MutationKind::SetLabel},  {"open_window", MutationKind::OpenWindow},
      {"close_window", MutationKind::CloseWindow}, {"set_doc", MutationKind::SetDoc},
      {"emit_error", MutationKind::EmitError},
  };
  auto it = kinds.find(s);
  if (it == kinds.end()) throw Error(ErrorCode::MalformedCatalog, "unknown effect '" + s + "'");
  return it->second;
}

std::string mutation_kind_name(MutationKind k) {
  switch (k) {
    case MutationKind::Show: return "show";
    case MutationKind::Hide: return "hide";
    case MutationKind::Enable: return "enable";
    case MutationKind::Disable: return "disable";
    case MutationKind::SetLabel: return "set_label";
    case MutationKind::OpenWindow: return "open_window";
    case MutationKind::CloseWindow: return "close_window";
    case MutationKind::SetDoc: return "set_doc";
    case MutationKind::EmitError: return "emit_error";
  }
  return "?";
}

bool targets_control(MutationKind k) {
  return k == MutationKind::Show || k == MutationKind::Hide || k == MutationKind::Enable ||
         k == MutationKind::Disable || k == MutationKind::SetLabel;
}

Mutation parse_mutation(const Json& j) {
  Mutation m;
  m.kind = parse_mutation_kind(j.at("effect").get<std::string>());
  m.target = j.value("target", "");
  m.value = j.contains("value") ? j["value"] : Json();
  m.fatal = j.value("fatal", false);
  if (m.kind != MutationKind::EmitError && m.target.empty()) {
    throw Error(ErrorCode::MalformedCatalog, "effect '" + mutation_kind_name(m.kind) + "' needs a target");
  }
  return m;
}

Json mutation_json(const Mutation& m) {
  Json j{{"effect", mutation_kind_name(m.kind)}};
  if (!m.target.empty()) j["target"] = m.target;
  if (!m.value.is_null()) j["value"] = m.value;
  if (m.fatal) j["fatal"] = true;
  return j;
}

/// Payload fields a trigger predicate and "$payload." templates see.
Json effective_payload(const PlannedAction& a) {
  return a.operation == Operation::ApiCall ? a.api_args() : a.payload;
}

bool subset_matches(const Json& predicate, const Json& subject) {
  if (predicate.is_null()) return true;
  if (!subject.is_object()) return predicate.empty();
  for (const auto& [k, v] : predicate.items()) {
    if (!subject.contains(k) || subject[k] != v) return false;
  }
  return true;
}

Json resolve_value(const Json& value, const Json& payload, const Json& document) {
  if (!value.is_string()) return value;
  const auto s = value.get<std::string>();
  auto from = [&](std::string_view prefix, const Json& src) -> std::optional<Json> {
    if (s.rfind(prefix, 0) != 0) return std::nullopt;
    const auto key = s.substr(prefix.size());
    if (src.is_object() && src.contains(key)) return src[key];
    return Json(nullptr);
  };
  if (auto v = from("$payload.", payload)) return *v;
  if (auto v = from("$doc.", document)) return *v;
  return value;
}

ControlState* find_mut(AppInstance& app, const std::string& id) {
  for (auto& c : app.controls) {
    if (c.control.id == id) return &c;
  }
  return nullptr;
}

AppInstance instantiate(const AppDefinition& def, int handle) {
  AppInstance inst;
  inst.app_id = def.app_id;
  inst.handle = handle;
  for (const auto& t : def.controls) {
    inst.controls.push_back(ControlState{t.control, t.window, t.custom_rendered});
  }
  inst.closed_windows.insert(def.closed_windows.begin(), def.closed_windows.end());
  inst.document = def.document;
  return inst;
}

Json control_state_json(const ControlState& c) {
  Json j = c.control;
  j["window"] = c.window;
  if (c.custom_rendered) j["custom_rendered"] = true;
  return j;
}

}  // namespace

// ---------------------------------------------------------------------------

const ControlTemplate* AppDefinition::find_control(const std::string& id) const {
  for (const auto& c : controls) {
    if (c.control.id == id) return &c;
  }
  return nullptr;
}

bool AppDefinition::exposes(const std::string& api) const {
  return std::find(exposed_apis.begin(), exposed_apis.end(), api) != exposed_apis.end();
}

AppDefinition parse_app_definition(const Json& j) {
  AppDefinition def;
  try {
    def.app_id = j.at("app_id").get<std::string>();
    def.display_name = j.value("display_name", def.app_id);
    for (const auto& c : j.value("controls", Json::array())) {
      ControlTemplate t;
      t.control.id = c.at("id").get<std::string>();
      t.control.control_type = c.value("control_type", "");
      t.control.label = c.value("label", "");
      t.control.box = c.at("box").get<BoundingBox>();
      t.control.visible = c.value("visible", true);
      t.control.enabled = c.value("enabled", true);
      t.window = c.value("window", "main");
      t.custom_rendered = c.value("custom_rendered", false);
      if (def.find_control(t.control.id)) {
        throw Error(ErrorCode::MalformedCatalog, "duplicate control id '" + t.control.id + "'");
      }
      def.controls.push_back(std::move(t));
    }
    def.exposed_apis = j.value("exposed_apis", std::vector<std::string>{});
    def.closed_windows = j.value("closed_windows", std::vector<std::string>{});
    def.document = j.value("document", Json::object());
    for (const auto& r : j.value("effect_rules", Json::array())) {
      EffectRule rule;
      const auto& t = r.at("trigger");
      rule.trigger.operation = parse_operation(t.value("operation", "Click"));
      rule.trigger.target = rule.trigger.operation == Operation::ApiCall ? t.at("api").get<std::string>()
                                                                         : t.at("control").get<std::string>();
      rule.trigger.payload_predicate = t.contains("payload") ? t["payload"] : Json();
      rule.precondition = r.contains("precondition") ? r["precondition"] : Json();
      for (const auto& m : r.value("effects", Json::array())) rule.effects.push_back(parse_mutation(m));
      def.effect_rules.push_back(std::move(rule));
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::MalformedCatalog, "app definition: " + std::string(e.what()));
  }

  std::set<std::string> windows{"main"};
  for (const auto& c : def.controls) windows.insert(c.window);
  for (const auto& rule : def.effect_rules) {
    const auto& trig = rule.trigger;
    if (trig.operation == Operation::ApiCall) {
      if (!def.exposes(trig.target)) {
        throw Error(ErrorCode::MalformedCatalog, def.app_id + ": rule triggers on unexposed API '" + trig.target + "'");
      }
    } else if (!def.find_control(trig.target)) {
      throw Error(ErrorCode::MalformedCatalog, def.app_id + ": rule triggers on unknown control '" + trig.target + "'");
    }
    for (const auto& m : rule.effects) {
      if (targets_control(m.kind) && !def.find_control(m.target)) {
        throw Error(ErrorCode::MalformedCatalog, def.app_id + ": effect targets unknown control '" + m.target + "'");
      }
      if ((m.kind == MutationKind::OpenWindow || m.kind == MutationKind::CloseWindow) && !windows.count(m.target)) {
        throw Error(ErrorCode::MalformedCatalog, def.app_id + ": effect targets unknown window '" + m.target + "'");
      }
    }
  }
  return def;
}

Json to_json(const AppDefinition& def) {
  Json controls = Json::array();
  for (const auto& t : def.controls) {
    controls.push_back(Json{{"id", t.control.id},
                            {"control_type", t.control.control_type},
                            {"label", t.control.label},
                            {"box", t.control.box},
                            {"visible", t.control.visible},
                            {"enabled", t.control.enabled},
                            {"window", t.window},
                            {"custom_rendered", t.custom_rendered}});
  }
  Json rules = Json::array();
  for (const auto& r : def.effect_rules) {
    Json trig{{"operation", to_string(r.trigger.operation)}};
    trig[r.trigger.operation == Operation::ApiCall ? "api" : "control"] = r.trigger.target;
    if (!r.trigger.payload_predicate.is_null()) trig["payload"] = r.trigger.payload_predicate;
    Json effects = Json::array();
    for (const auto& m : r.effects) effects.push_back(mutation_json(m));
    Json rule{{"trigger", trig}, {"effects", effects}};
    if (!r.precondition.is_null()) rule["precondition"] = r.precondition;
    rules.push_back(std::move(rule));
  }
  return Json{{"app_id", def.app_id},
              {"display_name", def.display_name},
              {"controls", controls},
              {"effect_rules", rules},
              {"exposed_apis", def.exposed_apis},
              {"closed_windows", def.closed_windows},
              {"document", def.document}};
}

// ---------------------------------------------------------------------------

Catalog::Catalog(std::vector<AppDefinition> apps) {
  Json all = Json::array();
  for (auto& a : apps) {
    if (apps_.count(a.app_id)) throw Error(ErrorCode::MalformedCatalog, "duplicate app '" + a.app_id + "'");
    std::string id = a.app_id;
    apps_.emplace(std::move(id), std::move(a));
  }
  for (const auto& [id, def] : apps_) all.push_back(to_json(def));
  version_ = json_digest(all).substr(0, 16);
}

Catalog Catalog::load_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::IoError, "catalog directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<AppDefinition> apps;
  for (const auto& f : files) {
    std::ifstream in(f);
    Json j;
    try {
      j = Json::parse(in);
    } catch (const Json::parse_error& e) {
      throw Error(ErrorCode::MalformedCatalog, f.string() + ": " + e.what());
    }
    apps.push_back(parse_app_definition(j));
  }
  return Catalog(std::move(apps));
}

const AppDefinition& Catalog::app(const std::string& app_id) const {
  auto it = apps_.find(app_id);
  if (it == apps_.end()) throw Error(ErrorCode::UnknownApp, "unknown app '" + app_id + "'");
  return it->second;
}

// ---------------------------------------------------------------------------

const ControlState* AppInstance::find(const std::string& id) const {
  for (const auto& c : controls) {
    if (c.control.id == id) return &c;
  }
  return nullptr;
}

bool AppInstance::effectively_visible(const ControlState& c) const {
  return c.control.visible && !closed_windows.count(c.window);
}

Json to_json(const DesktopState& s) {
  Json apps = Json::object();
  for (const auto& [id, app] : s.running_apps) {
    Json controls = Json::array();
    for (const auto& c : app.controls) controls.push_back(control_state_json(c));
    apps[id] = Json{{"handle", app.handle},
                    {"controls", controls},
                    {"closed_windows", app.closed_windows},
                    {"document", app.document},
                    {"crashed", app.crashed}};
  }
  return Json{{"running_apps", apps}, {"focused_app", s.focused_app}, {"tick", s.tick}};
}

std::string state_hash(const DesktopState& s) { return json_digest(to_json(s)); }

// ---------------------------------------------------------------------------

Desktop::Desktop(std::shared_ptr<const Catalog> catalog) : catalog_(std::move(catalog)) {}

void Desktop::set_observer(std::function<void(const SimEvent&)> observer) {
  std::unique_lock lock(mu_);
  observer_ = std::move(observer);
}

void Desktop::notify(SimEvent ev) {
  if (observer_) observer_(ev);
}

int Desktop::launch_app(const std::string& app_id) {
  const auto& def = catalog_->app(app_id);
  SimEvent ev;
  int handle = 0;
  {
    std::unique_lock lock(mu_);
    auto it = state_.running_apps.find(app_id);
    if (it != state_.running_apps.end() && !it->second.crashed) return it->second.handle;
    handle = state_.next_handle++;
    state_.running_apps[app_id] = instantiate(def, handle);
    state_.focused_app = app_id;
    ev.kind = SimEvent::Kind::Launch;
    ev.app_id = app_id;
    ev.outcome.executor_actions = 0;
    ev.state_hash = simenv::state_hash(state_);
    ev.tick = state_.tick;
  }
  notify(std::move(ev));
  return handle;
}

bool Desktop::is_running(const std::string& app_id) const {
  std::shared_lock lock(mu_);
  auto it = state_.running_apps.find(app_id);
  return it != state_.running_apps.end() && !it->second.crashed;
}

const AppInstance& Desktop::running(const std::string& app_id) const {
  auto it = state_.running_apps.find(app_id);
  if (it == state_.running_apps.end() || it->second.crashed) {
    throw Error(ErrorCode::AppNotRunning, "app '" + app_id + "' is not running");
  }
  return it->second;
}

ActionOutcome Desktop::apply_action(const std::string& app_id, const PlannedAction& action) {
  ActionOutcome outcome;
  SimEvent ev;
  {
    std::unique_lock lock(mu_);
    auto it = state_.running_apps.find(app_id);
    if (it == state_.running_apps.end() || it->second.crashed) {
      return ActionOutcome::failure(ErrorCode::AppNotRunning, "app '" + app_id + "' is not running");
    }
    AppInstance& app = it->second;
    const auto& def = catalog_->app(app_id);

    std::string trigger_target;
    if (action.operation == Operation::ApiCall) {
      trigger_target = action.api_name();
      if (!def.exposes(trigger_target)) {
        return ActionOutcome::failure(ErrorCode::MissingBinding,
                                      app_id + " does not expose API '" + trigger_target + "'");
      }
    } else {
      if (!action.target) return ActionOutcome::failure(ErrorCode::ControlNotFound, "GUI action without target");
      trigger_target = *action.target;
      const ControlState* c = app.find(trigger_target);
      if (!c || !app.effectively_visible(*c)) {
        return ActionOutcome::failure(ErrorCode::ControlNotFound, "control '" + trigger_target + "' not on screen");
      }
      if (!c->control.enabled) {
        return ActionOutcome::failure(ErrorCode::ControlDisabled, "control '" + trigger_target + "' is disabled");
      }
    }

    const Json payload = effective_payload(action);
    const EffectRule* rule = nullptr;
    for (const auto& r : def.effect_rules) {
      if (r.trigger.operation == action.operation && r.trigger.target == trigger_target &&
          subset_matches(r.trigger.payload_predicate, payload) && subset_matches(r.precondition, app.document)) {
        rule = &r;
        break;
      }
    }

    ++state_.tick;
    state_.focused_app = app_id;
    outcome.executor_actions = 1;
    if (!rule) {
      outcome.status = OutcomeStatus::NoOp;
      outcome.error = ErrorCode::NoMatchingRule;
      outcome.message = "no effect rule matched";
    } else {
      for (const auto& m : rule->effects) {
        ControlState* target = targets_control(m.kind) ? find_mut(app, m.target) : nullptr;
        switch (m.kind) {
          case MutationKind::Show: target->control.visible = true; break;
          case MutationKind::Hide: target->control.visible = false; break;
          case MutationKind::Enable: target->control.enabled = true; break;
          case MutationKind::Disable: target->control.enabled = false; break;
          case MutationKind::SetLabel: {
            const Json v = resolve_value(m.value, payload, app.document);
            target->control.label = v.is_string() ? v.get<std::string>() : v.dump();
            break;
          }
          case MutationKind::OpenWindow: app.closed_windows.erase(m.target); break;
          case MutationKind::CloseWindow: app.closed_windows.insert(m.target); break;
          case MutationKind::SetDoc: app.document[m.target] = resolve_value(m.value, payload, app.document); break;
          case MutationKind::EmitError: {
            const std::string text = m.value.is_string() ? m.value.get<std::string>() : "application error";
            outcome.status = OutcomeStatus::Error;
            outcome.error = m.fatal ? ErrorCode::AppCrashed : ErrorCode::ApiHandlerError;
            outcome.message = text;
            if (m.fatal) app.crashed = true;
            break;
          }
        }
        if (app.crashed) break;
      }
    }
    ev.kind = SimEvent::Kind::Apply;
    ev.app_id = app_id;
    ev.action = action;
    ev.outcome = outcome;
    ev.state_hash = simenv::state_hash(state_);
    ev.tick = state_.tick;
  }
  notify(std::move(ev));
  return outcome;
}

Snapshot Desktop::snapshot(const std::string& app_id) const {
  Snapshot snap;
  Json layout = Json::array();
  {
    std::shared_lock lock(mu_);
    const AppInstance& app = running(app_id);
    snap.app_id = app_id;
    snap.tick = state_.tick;
    for (const auto& c : app.controls) {
      Control ctl = c.control;
      ctl.visible = app.effectively_visible(c);
      if (c.custom_rendered) {
        if (ctl.visible) snap.vision_only.push_back(ctl);
      } else {
        snap.accessibility.push_back(ctl);
      }
      if (ctl.visible) layout.push_back(Json{{"id", ctl.id}, {"box", ctl.box}, {"label", ctl.label}});
    }
    snap.screenshot_ref = "artifact://" + app_id + "/" + std::to_string(state_.tick);
  }
  std::lock_guard alock(artifacts_mu_);
  artifacts_.emplace(snap.screenshot_ref, std::move(layout));
  return snap;
}

std::optional<std::string> Desktop::hit_test(const std::string& app_id, int x, int y) const {
  std::shared_lock lock(mu_);
  const AppInstance& app = running(app_id);
  // Later controls are drawn on top.
  for (auto it = app.controls.rbegin(); it != app.controls.rend(); ++it) {
    if (app.effectively_visible(*it) && it->control.box.contains(x, y)) return it->control.id;
  }
  return std::nullopt;
}

Json Desktop::resolve_artifact(const std::string& ref) const {
  std::lock_guard lock(artifacts_mu_);
  auto it = artifacts_.find(ref);
  return it == artifacts_.end() ? Json() : it->second;
}

DesktopState Desktop::state() const {
  std::shared_lock lock(mu_);
  return state_;
}

std::uint64_t Desktop::tick() const {
  std::shared_lock lock(mu_);
  return state_.tick;
}

std::string Desktop::state_hash() const {
  std::shared_lock lock(mu_);
  return simenv::state_hash(state_);
}

Json Desktop::document(const std::string& app_id) const {
  std::shared_lock lock(mu_);
  return running(app_id).document;
}

std::vector<std::string> Desktop::running_app_ids() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> ids;
  for (const auto& [id, app] : state_.running_apps) {
    if (!app.crashed) ids.push_back(id);
  }
  return ids;
}

}  // namespace agentos::simenv
