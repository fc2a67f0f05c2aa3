#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "agentos/scenario.hpp"
#include "agentos/simenv.hpp"

namespace testing_support {

inline std::filesystem::path fixtures() { return AGENTOS_FIXTURE_DIR; }

inline std::shared_ptr<const agentos::simenv::Catalog> catalog() {
  static auto c = std::make_shared<const agentos::simenv::Catalog>(
      agentos::simenv::Catalog::load_dir(fixtures() / "catalog"));
  return c;
}

inline std::shared_ptr<const agentos::puppeteer::ApiRegistry> registry() {
  static auto r = std::make_shared<const agentos::puppeteer::ApiRegistry>(
      agentos::puppeteer::ApiRegistry::load_manifest_file(fixtures() / "apis.json",
                                                          agentos::puppeteer::builtin_handlers()));
  return r;
}

inline agentos::Scenario scenario(const std::string& name) {
  return agentos::load_scenario(fixtures() / "scenarios" / (name + ".json"));
}

inline agentos::ScenarioRun run(const std::string& name, std::size_t max_k = 5, int budget = 30) {
  agentos::RunOptions options;
  options.runtime.max_k = max_k;
  options.runtime.step_budget = budget;
  return agentos::run_scenario(scenario(name), catalog(), options);
}

}  // namespace testing_support
