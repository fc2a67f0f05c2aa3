#pragma once

// Unified GUI/API executor. Applications register named APIs with an argument
// schema; ApiCall actions go through the registry, GUI actions go straight to
// the desktop, and a failed API call runs the planner-provided GUI fallback.

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "agentos/domain.hpp"
#include "agentos/simenv.hpp"

namespace agentos::puppeteer {

struct ArgSpec {
  std::string name;
  std::string type = "string";  // string | integer | number | boolean | object | array | any
  bool required = true;
};

struct ApiSpec {
  std::string name;
  std::string app_binding;
  std::vector<ArgSpec> args;
  std::string description;
  bool risk_tag = false;
  std::string handler = "effects";  // handler name used by manifests
};

void to_json(Json& j, const ApiSpec& v);
ApiSpec parse_api_spec(const Json& j);

/// What a handler sees: the bound app's state, the validated arguments, and a
/// way to route the call through the app's effect rules.
class ApiInvocation {
 public:
  ApiInvocation(const ApiSpec& spec, const Json& args, simenv::Desktop& desktop)
      : spec_(spec), args_(args), desktop_(desktop) {}

  const ApiSpec& spec() const { return spec_; }
  const Json& args() const { return args_; }
  const std::string& app_id() const { return spec_.app_binding; }
  Json document() const { return desktop_.document(spec_.app_binding); }
  ActionOutcome apply_effects();

 private:
  const ApiSpec& spec_;
  const Json& args_;
  simenv::Desktop& desktop_;
};

/// Returns {"results": ..., "error": null | message}.
using ApiHandler = std::function<Json(ApiInvocation&)>;

/// Handlers bindable by name from a manifest: "effects", "read_document", "unavailable".
std::map<std::string, ApiHandler> builtin_handlers();

class ApiRegistry {
 public:
  struct Entry {
    ApiSpec spec;
    ApiHandler handler;
  };

  /// Throws DuplicateApi on a repeated (app_binding, name).
  void register_api(ApiSpec spec, ApiHandler handler);

  /// Manifest: [{"app", "name", "description", "risk", "handler", "args": [{"name","type","required"}]}]
  static ApiRegistry load_manifest(const Json& manifest, const std::map<std::string, ApiHandler>& handlers);
  static ApiRegistry load_manifest_file(const std::filesystem::path& path,
                                        const std::map<std::string, ApiHandler>& handlers);

  const Entry* find(const std::string& app_id, const std::string& name) const;
  std::vector<const ApiSpec*> for_app(const std::string& app_id) const;
  /// APIs offered to the planner for this app, in registration order.
  Json action_space(const std::string& app_id) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<Entry> entries_;
};

/// Empty when the arguments satisfy the schema; otherwise the reason.
std::optional<std::string> validate_args(const ApiSpec& spec, const Json& args);

class Puppeteer {
 public:
  Puppeteer(std::shared_ptr<const ApiRegistry> registry, simenv::Desktop& desktop)
      : registry_(std::move(registry)), desktop_(desktop) {}

  /// `context` resolves vision pseudo-controls to screen positions.
  ActionOutcome execute(const std::string& app_id, const PlannedAction& action, const Observation& context);

  const ApiRegistry& registry() const { return *registry_; }

 private:
  ActionOutcome execute_gui(const std::string& app_id, const PlannedAction& action, const Observation& context);
  ActionOutcome execute_api(const std::string& app_id, const PlannedAction& action, const Observation& context);

  std::shared_ptr<const ApiRegistry> registry_;
  simenv::Desktop& desktop_;
};

}  // namespace agentos::puppeteer
