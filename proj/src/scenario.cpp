#include "agentos/scenario.hpp"

#include <fstream>

namespace agentos {

namespace {

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
  }
}

std::optional<std::filesystem::path> path_field(const Json& j, const char* key, const std::filesystem::path& base) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return base / j[key].get<std::string>();
}

}  // namespace

Scenario parse_scenario(const Json& j, const std::filesystem::path& base_dir) {
  Scenario s;
  try {
    s.request = j.at("request").get<std::string>();
    s.name = j.value("name", s.request);
    s.app_fixtures = j.value("app_fixtures", std::vector<std::string>{});
    s.prelaunch = j.value("prelaunch", std::vector<std::string>{});
    s.success_predicates = j.value("success_predicates", std::vector<Predicate>{});
    if (s.success_predicates.empty()) {
      throw Error(ErrorCode::ScenarioCriteriaMissing, "scenario '" + s.name + "' has no success_predicates");
    }
    for (const auto& f : j.value("follow_ups", Json::array())) {
      s.follow_ups.push_back({f.at("request").get<std::string>(),
                              f.value("success_predicates", std::vector<Predicate>{})});
    }
    if (j.contains("planner_script")) {
      const auto& ps = j["planner_script"];
      s.planner_script = ps.is_string() ? read_json(base_dir / ps.get<std::string>()) : ps;
    }
    s.risk_rules = path_field(j, "risk_rules", base_dir);
    s.api_manifest = path_field(j, "api_manifest", base_dir);
    s.docs = path_field(j, "docs", base_dir);
    for (const auto& d : j.value("confirmations", std::vector<std::string>{})) s.confirmations.push_back(parse_decision(d));
    for (const auto& r : j.value("clarifications", std::vector<std::string>{})) s.clarifications.push_back(r);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("scenario: ") + e.what());
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  auto s = parse_scenario(read_json(path), path.parent_path());
  s.path = path;
  return s;
}

SessionConfig scenario_session_config(const Scenario& scenario, const simenv::Catalog& catalog,
                                      const RunOptions& options) {
  for (const auto& app : scenario.app_fixtures) catalog.app(app);

  SessionConfig config;
  config.runtime = options.runtime;
  config.prelaunch = scenario.prelaunch;
  if (options.backend) {
    config.backend = options.backend;
  } else if (!scenario.planner_script.is_null()) {
    config.backend = std::make_shared<planner::ScriptedBackend>(scenario.planner_script);
  } else {
    throw Error(ErrorCode::InvalidArgument, "scenario has no planner script and no backend was given");
  }
  if (scenario.api_manifest) {
    config.registry = std::make_shared<puppeteer::ApiRegistry>(
        puppeteer::ApiRegistry::load_manifest_file(*scenario.api_manifest, puppeteer::builtin_handlers()));
  }
  if (scenario.risk_rules) config.rules = safeguard::RiskRuleset::load_file(*scenario.risk_rules);
  if (options.knowledge) {
    config.knowledge = options.knowledge;
  } else if (scenario.docs) {
    auto store = std::make_shared<knowledge::KnowledgeStore>();
    store->ingest_docs(knowledge::KnowledgeStore::read_docs_dir(*scenario.docs));
    config.knowledge = store;
  }
  return config;
}

Json summary(const ScenarioRun& run) {
  return Json{{"verdict", to_string(run.verdict)},
              {"planner_calls", run.planner_calls},
              {"steps", run.steps},
              {"executor_actions", run.executor_actions},
              {"rounds", run.rounds}};
}

ScenarioRun run_scenario(const Scenario& scenario, std::shared_ptr<const simenv::Catalog> catalog,
                         const RunOptions& options) {
  std::vector<std::pair<std::string, std::vector<Predicate>>> rounds{{scenario.request, scenario.success_predicates}};
  for (const auto& f : scenario.follow_ups) rounds.emplace_back(f.request, f.success_predicates);
  // Fail fast, before anything runs.
  std::vector<RuleEvaluator> evaluators;
  for (const auto& [request, predicates] : rounds) evaluators.emplace_back(predicates);

  auto config = scenario_session_config(scenario, *catalog, options);
  auto channel = options.channel;
  if (!channel) {
    channel = std::make_shared<ScriptedChannel>(scenario.confirmations, scenario.clarifications,
                                                options.auto_approve ? Decision::Approve : Decision::Deny);
  }

  ScenarioRun run;
  run.session = std::make_unique<Session>(options.session_id, catalog, std::move(config), channel);
  bool all_success = true;
  bool any_credit = false;
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    auto record = run.session->run_round(rounds[i].first);
    const auto eval = run.session->evaluate(record.index, evaluators[i]);
    record.evaluation = eval;
    all_success = all_success && eval.verdict == Verdict::Success;
    any_credit = any_credit || eval.verdict != Verdict::Failure;
    run.planner_calls += record.planner_calls;
    run.steps += record.steps;
    run.executor_actions += record.executor_actions;
    run.rounds.push_back(record);
  }
  run.verdict = all_success ? Verdict::Success : any_credit ? Verdict::Partial : Verdict::Failure;
  if (options.finish_session) run.session->finish();
  return run;
}

}  // namespace agentos
