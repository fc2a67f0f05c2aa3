#include "agentos/safeguard.hpp"

#include <fnmatch.h>

#include <fstream>

#include "agentos/puppeteer.hpp"

namespace agentos::safeguard {

Pattern::Pattern(std::string source) : source_(std::move(source)) {
  if (source_.rfind("re:", 0) == 0) {
    try {
      regex_.emplace(source_.substr(3), std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
      throw Error(ErrorCode::MalformedRule, "bad regex '" + source_ + "': " + e.what());
    }
  }
}

bool Pattern::matches(const std::string& text) const {
  if (regex_) return std::regex_search(text, *regex_);
  return fnmatch(source_.c_str(), text.c_str(), 0) == 0;
}

RiskRuleset RiskRuleset::parse(const Json& j) {
  if (!j.is_array()) throw Error(ErrorCode::MalformedRule, "ruleset must be a JSON array");
  std::vector<RiskRule> rules;
  for (const auto& r : j) {
    try {
      RiskRule rule;
      rule.id = r.at("id").get<std::string>();
      const auto& m = r.at("match");
      if (!m.is_object() || m.empty()) throw Error(ErrorCode::MalformedRule, rule.id + ": empty match");
      for (const auto& [key, value] : m.items()) {
        const auto text = value.get<std::string>();
        if (key == "operation") {
          rule.operation = parse_operation(text);
        } else if (key == "api_pattern") {
          rule.api_pattern.emplace(text);
        } else if (key == "label_pattern") {
          rule.label_pattern.emplace(text);
        } else if (key == "payload_pattern") {
          rule.payload_pattern.emplace(text);
        } else {
          throw Error(ErrorCode::MalformedRule, rule.id + ": unknown match key '" + key + "'");
        }
      }
      rules.push_back(std::move(rule));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::MalformedRule) throw;
      throw Error(ErrorCode::MalformedRule, e.what());
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::MalformedRule, e.what());
    }
  }
  return RiskRuleset(std::move(rules));
}

RiskRuleset RiskRuleset::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open ruleset " + path.string());
  try {
    return parse(Json::parse(in));
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::MalformedRule, path.string() + ": " + e.what());
  }
}

namespace {

std::string text_of(const Json& payload, const char* key) {
  const auto it = payload.find(key);
  if (it == payload.end()) return "";
  return it->is_string() ? it->get<std::string>() : it->dump();
}

/// Strings a payload pattern is tested against.
std::vector<std::string> payload_strings(const PlannedAction& a) {
  std::vector<std::string> out;
  switch (a.operation) {
    case Operation::TypeText: out.push_back(text_of(a.payload, "text")); break;
    case Operation::Hotkey: out.push_back(text_of(a.payload, "keys")); break;
    case Operation::ApiCall: {
      const Json args = a.api_args();
      for (const auto& [k, v] : args.items()) out.push_back(v.is_string() ? v.get<std::string>() : v.dump());
      break;
    }
    case Operation::Click: break;
  }
  return out;
}

bool rule_matches(const RiskRule& rule, const PlannedAction& action, const Observation* context) {
  if (rule.operation && *rule.operation != action.operation) return false;
  if (rule.api_pattern) {
    if (action.operation != Operation::ApiCall || !rule.api_pattern->matches(action.api_name())) return false;
  }
  if (rule.label_pattern) {
    const Control* c = context && action.target ? context->find(*action.target) : nullptr;
    if (!c || !rule.label_pattern->matches(c->label)) return false;
  }
  if (rule.payload_pattern) {
    bool any = false;
    for (const auto& s : payload_strings(action)) any = any || rule.payload_pattern->matches(s);
    if (!any) return false;
  }
  return true;
}

}  // namespace

ScreenResult screen(const PlannedAction& action, const RiskRuleset& rules, const std::string& app_id,
                    const Observation* context, const puppeteer::ApiRegistry* registry) {
  for (const auto& rule : rules.rules()) {
    if (rule_matches(rule, action, context)) return ScreenResult{true, rule.id};
  }
  if (registry && action.operation == Operation::ApiCall) {
    if (const auto* e = registry->find(app_id, action.api_name()); e && e->spec.risk_tag) {
      return ScreenResult{true, "risk_tag:" + e->spec.name};
    }
  }
  // Fallback steps run without a second screening, so they are screened here.
  if (action.operation == Operation::ApiCall) {
    for (const auto& step : action.gui_fallback()) {
      for (const auto& rule : rules.rules()) {
        if (rule_matches(rule, step, context)) return ScreenResult{true, rule.id};
      }
    }
  }
  return {};
}

}  // namespace agentos::safeguard
