#pragma once

// Deterministic simulated desktop. Applications are declared in JSON (one
// document per app); every state change happens through an effect rule
// triggered by apply_action, so the state hash is a pure function of the
// catalog plus the ordered action history.

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "agentos/domain.hpp"

namespace agentos::simenv {

enum class MutationKind { Show, Hide, Enable, Disable, SetLabel, OpenWindow, CloseWindow, SetDoc, EmitError };

struct Mutation {
  MutationKind kind = MutationKind::Show;
  std::string target;  // control id, window id or document key
  Json value;          // label / document value (may be a "$payload.x" or "$doc.x" template) / error text
  bool fatal = false;  // EmitError only: crash the app
};

struct EffectTrigger {
  std::string target;  // control id for GUI operations, API name for ApiCall
  Operation operation = Operation::Click;
  Json payload_predicate;  // null, or object whose entries must equal the payload (ApiCall: the args)
};

struct EffectRule {
  EffectTrigger trigger;
  Json precondition;  // null, or object of document key -> required value
  std::vector<Mutation> effects;
};

struct ControlTemplate {
  Control control;
  std::string window = "main";
  bool custom_rendered = false;
};

struct AppDefinition {
  std::string app_id;
  std::string display_name;
  std::vector<ControlTemplate> controls;
  std::vector<EffectRule> effect_rules;
  std::vector<std::string> exposed_apis;
  std::vector<std::string> closed_windows;  // windows other than these start open
  Json document = Json::object();           // initial document state

  const ControlTemplate* find_control(const std::string& id) const;
  bool exposes(const std::string& api) const;
};

AppDefinition parse_app_definition(const Json& j);
Json to_json(const AppDefinition& def);

class Catalog {
 public:
  Catalog() = default;
  explicit Catalog(std::vector<AppDefinition> apps);

  /// Loads every *.json file in `dir` as one app definition.
  static Catalog load_dir(const std::filesystem::path& dir);

  bool contains(const std::string& app_id) const { return apps_.count(app_id) > 0; }
  const AppDefinition& app(const std::string& app_id) const;
  const std::map<std::string, AppDefinition>& apps() const { return apps_; }
  /// Digest identifying this exact catalog content.
  const std::string& version() const { return version_; }

 private:
  std::map<std::string, AppDefinition> apps_;
  std::string version_;
};

struct ControlState {
  Control control;
  std::string window;
  bool custom_rendered = false;
};

struct AppInstance {
  std::string app_id;
  int handle = 0;
  std::vector<ControlState> controls;
  std::set<std::string> closed_windows;
  Json document = Json::object();
  bool crashed = false;

  const ControlState* find(const std::string& id) const;
  bool effectively_visible(const ControlState& c) const;
};

struct DesktopState {
  std::map<std::string, AppInstance> running_apps;
  std::string focused_app;
  std::uint64_t tick = 0;
  int next_handle = 1;
};

Json to_json(const DesktopState& s);
std::string state_hash(const DesktopState& s);

struct Snapshot {
  std::string app_id;
  std::vector<Control> accessibility;  // raw dump, including invisible controls
  std::vector<Control> vision_only;    // visible custom-rendered widgets
  std::string screenshot_ref;
  std::uint64_t tick = 0;
};

/// Notification for every desktop-level call; used for trace recording and replay.
struct SimEvent {
  enum class Kind { Launch, Apply } kind = Kind::Launch;
  std::string app_id;
  std::optional<PlannedAction> action;
  ActionOutcome outcome;
  std::string state_hash;
  std::uint64_t tick = 0;
};

class Desktop {
 public:
  explicit Desktop(std::shared_ptr<const Catalog> catalog);

  Desktop(const Desktop&) = delete;
  Desktop& operator=(const Desktop&) = delete;

  /// Returns the instance handle. Idempotent for running apps; throws UnknownApp.
  int launch_app(const std::string& app_id);
  bool is_running(const std::string& app_id) const;

  ActionOutcome apply_action(const std::string& app_id, const PlannedAction& action);

  /// Throws AppNotRunning.
  Snapshot snapshot(const std::string& app_id) const;
  /// Id of the topmost effectively-visible control containing (x, y).
  std::optional<std::string> hit_test(const std::string& app_id, int x, int y) const;
  /// Serialized control layout recorded by snapshot(); null for unknown refs.
  Json resolve_artifact(const std::string& ref) const;

  DesktopState state() const;
  std::uint64_t tick() const;
  std::string state_hash() const;
  Json document(const std::string& app_id) const;
  std::vector<std::string> running_app_ids() const;
  const Catalog& catalog() const { return *catalog_; }

  void set_observer(std::function<void(const SimEvent&)> observer);

 private:
  const AppInstance& running(const std::string& app_id) const;
  void notify(SimEvent ev);

  std::shared_ptr<const Catalog> catalog_;
  mutable std::shared_mutex mu_;
  DesktopState state_;
  std::function<void(const SimEvent&)> observer_;
  mutable std::mutex artifacts_mu_;
  mutable std::map<std::string, Json> artifacts_;
};

}  // namespace agentos::simenv
