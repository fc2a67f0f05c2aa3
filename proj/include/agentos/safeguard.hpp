#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "agentos/domain.hpp"

namespace agentos::puppeteer {
class ApiRegistry;
}

namespace agentos::safeguard {

/// Glob pattern ("delete_*"), or a regular expression when prefixed "re:".
class Pattern {
 public:
  explicit Pattern(std::string source);
  bool matches(const std::string& text) const;
  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::optional<std::regex> regex_;
};

/// All present fields must match for the rule to fire.
struct RiskRule {
  std::string id;
  std::optional<Operation> operation;
  std::optional<Pattern> api_pattern;
  std::optional<Pattern> label_pattern;
  std::optional<Pattern> payload_pattern;
};

class RiskRuleset {
 public:
  RiskRuleset() = default;
  explicit RiskRuleset(std::vector<RiskRule> rules) : rules_(std::move(rules)) {}

  /// [{"id", "match": {"operation"?, "api_pattern"?, "label_pattern"?, "payload_pattern"?}}]
  /// Throws MalformedRule.
  static RiskRuleset parse(const Json& j);
  static RiskRuleset load_file(const std::filesystem::path& path);

  const std::vector<RiskRule>& rules() const { return rules_; }

 private:
  std::vector<RiskRule> rules_;
};

struct ScreenResult {
  bool risky = false;
  std::optional<std::string> matched_rule;
};

/// `context` supplies the target control's label; `registry` contributes
/// risk-tagged APIs, which always match. Both are optional.
ScreenResult screen(const PlannedAction& action, const RiskRuleset& rules, const std::string& app_id = {},
                    const Observation* context = nullptr, const puppeteer::ApiRegistry* registry = nullptr);

}  // namespace agentos::safeguard
