// Operator command line for the runtime.

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>

#include "agentos/knowledge.hpp"
#include "agentos/markdown.hpp"
#include "agentos/replay.hpp"
#include "agentos/scenario.hpp"
#include "agentos/service.hpp"

using namespace agentos;

namespace {

struct PlannerFlags {
  std::string kind = "scripted";
  std::string endpoint;
  std::string model;
  std::string api_key;
  int timeout = 60;
};

void add_planner_flags(CLI::App* cmd, PlannerFlags& f) {
  cmd->add_option("--planner", f.kind, "Planner backend")->check(CLI::IsMember({"scripted", "http"}));
  cmd->add_option("--endpoint", f.endpoint, "Chat-completion URL")->envname("AGENTOS_PLANNER_ENDPOINT");
  cmd->add_option("--model", f.model, "Model id")->envname("AGENTOS_PLANNER_MODEL");
  cmd->add_option("--api-key", f.api_key, "Bearer token")->envname("AGENTOS_PLANNER_KEY");
  cmd->add_option("--timeout", f.timeout, "Planner request timeout in seconds");
}

std::shared_ptr<planner::Backend> http_backend(const PlannerFlags& f) {
  if (f.endpoint.empty()) throw Error(ErrorCode::InvalidArgument, "--planner http needs --endpoint");
  return std::make_shared<planner::HttpChatBackend>(planner::HttpChatConfig{f.endpoint, f.model, f.api_key, f.timeout});
}

std::shared_ptr<const simenv::Catalog> load_catalog(const std::string& dir) {
  if (dir.empty()) throw Error(ErrorCode::InvalidArgument, "a catalog directory is required (--catalog)");
  return std::make_shared<simenv::Catalog>(simenv::Catalog::load_dir(dir));
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << text;
}

void fail_json(std::string_view code, const std::string& message) {
  std::cerr << Json{{"error", code}, {"message", message}}.dump() << "\n";
}

Service* g_service = nullptr;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desktop agent runtime"};
  app.set_config("--config", "", "TOML or INI file mirroring the command-line flags");
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run a scenario in a fresh session");
  std::string catalog_dir, scenario_file, mode = "speculative", trace_out, markdown_out, store_dir;
  int max_steps = kDefaultStepBudget;
  std::size_t max_batch = speculative::kDefaultMaxBatch;
  bool auto_approve = false, as_json = false;
  PlannerFlags run_planner;
  run->add_option("--catalog", catalog_dir, "App catalog directory")->envname("AGENTOS_CATALOG");
  run->add_option("--scenario", scenario_file, "Scenario JSON file")->required();
  run->add_option("--mode", mode, "single = one action per planner call")
      ->check(CLI::IsMember({"single", "speculative"}));
  run->add_option("--max-steps", max_steps, "AppAgent planner steps per round")->check(CLI::PositiveNumber);
  run->add_option("--max-batch", max_batch, "Largest speculative batch")->check(CLI::PositiveNumber);
  run->add_flag("--auto-approve", auto_approve, "Approve every safeguard confirmation");
  run->add_option("--trace-out", trace_out, "Write the JSON-lines trace here");
  run->add_option("--markdown-out", markdown_out, "Write the markdown log here");
  run->add_option("--knowledge-store", store_dir, "Knowledge index directory to retrieve from");
  run->add_flag("--json", as_json, "Print the summary as JSON");
  add_planner_flags(run, run_planner);

  // replay
  auto* rep = app.add_subcommand("replay", "Re-apply a recorded trace to a fresh desktop");
  std::string replay_trace, replay_catalog;
  rep->add_option("--trace", replay_trace, "Trace file")->required();
  rep->add_option("--catalog", replay_catalog, "App catalog directory")->envname("AGENTOS_CATALOG");

  // knowledge
  auto* kn = app.add_subcommand("knowledge", "Manage the knowledge store");
  kn->require_subcommand(1);
  auto* ingest = kn->add_subcommand("ingest", "Index help documents");
  auto* distill = kn->add_subcommand("distill", "Turn successful rounds of a trace into experience records");
  std::string docs_dir, kn_store = "knowledge", distill_trace;
  ingest->add_option("--docs", docs_dir, "Directory of help-document JSON files")->required();
  ingest->add_option("--store", kn_store, "Index directory");
  distill->add_option("--trace", distill_trace, "Evaluated trace file")->required();
  distill->add_option("--store", kn_store, "Index directory");

  // serve
  auto* serve = app.add_subcommand("serve", "Start the HTTP service");
  int port = 8080;
  std::string host = "127.0.0.1", serve_catalog, serve_script, serve_manifest, serve_rules, serve_store;
  std::size_t workers = 4;
  PlannerFlags serve_planner;
  RuntimeConfig serve_runtime;
  serve->add_option("--port", port, "Listen port");
  serve->add_option("--host", host, "Listen address");
  serve->add_option("--catalog", serve_catalog, "App catalog directory")->envname("AGENTOS_CATALOG");
  serve->add_option("--planner-script", serve_script, "Scripted planner fixture");
  serve->add_option("--api-manifest", serve_manifest, "API registry manifest");
  serve->add_option("--risk-rules", serve_rules, "Safeguard ruleset");
  serve->add_option("--knowledge-store", serve_store, "Knowledge index directory");
  serve->add_option("--workers", workers, "Round worker threads")->check(CLI::PositiveNumber);
  serve->add_option("--max-steps", serve_runtime.step_budget, "AppAgent planner steps per round");
  serve->add_option("--max-batch", serve_runtime.max_k, "Largest speculative batch");
  add_planner_flags(serve, serve_planner);

  // report
  auto* report = app.add_subcommand("report", "Export a trace as markdown");
  std::string report_trace, report_out;
  report->add_option("--trace", report_trace, "Trace file")->required();
  report->add_option("--out", report_out, "Markdown file (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail_json("UsageError", e.what());
    return 2;
  }

  try {
    if (*run) {
      auto catalog = load_catalog(catalog_dir);
      const auto scenario = load_scenario(scenario_file);
      RunOptions options;
      options.runtime.step_budget = max_steps;
      options.runtime.max_k = mode == "single" ? 1 : max_batch;
      options.auto_approve = auto_approve;
      if (run_planner.kind == "http") options.backend = http_backend(run_planner);
      if (!store_dir.empty()) options.knowledge = knowledge::KnowledgeStore::load(store_dir);
      const auto result = run_scenario(scenario, catalog, options);
      const auto events = result.session->trace().events();
      if (!trace_out.empty()) write_file(trace_out, to_jsonl(events));
      if (!markdown_out.empty()) write_file(markdown_out, export_markdown(result.session->id(), events));

      if (as_json) {
        std::cout << summary(result).dump(2) << "\n";
      } else {
        std::string verdict(to_string(result.verdict));
        for (const auto& r : result.rounds) {
          if (r.error) {
            verdict += " (" + std::string(to_string(*r.error)) + ")";
            break;
          }
        }
        std::cout << "verdict: " << verdict << "\n"
                  << "rounds: " << result.rounds.size() << "\n"
                  << "steps: " << result.steps << "\n"
                  << "planner_calls: " << result.planner_calls << "\n"
                  << "executor_actions: " << result.executor_actions << "\n"
                  << "final_state: " << result.session->desktop().state_hash() << "\n";
      }
      return result.verdict == Verdict::Success ? 0 : 1;
    }

    if (*rep) {
      const auto result = replay(read_jsonl(replay_trace), load_catalog(replay_catalog));
      std::cout << "state_hash: " << result.final_hash << "\n"
                << "recorded: " << result.recorded_hash << "\n"
                << "applied: " << result.applied << "\n";
      if (result.divergence) {
        std::cout << "divergence: event " << result.divergence->index << " (seq " << result.divergence->seq << ") "
                  << result.divergence->action.dump() << "\n";
      }
      std::cout << (result.match ? "MATCH" : "MISMATCH") << "\n";
      return result.match ? 0 : 1;
    }

    if (*ingest) {
      auto store = knowledge::KnowledgeStore::load(kn_store);
      const auto stats = store->ingest_docs(knowledge::KnowledgeStore::read_docs_dir(docs_dir));
      store->save(kn_store);
      std::cout << "added: " << stats.added << "\n" << "docs: " << store->doc_count() << "\n";
      return 0;
    }

    if (*distill) {
      auto store = knowledge::KnowledgeStore::load(kn_store);
      const auto records = knowledge::distill(read_jsonl(distill_trace));
      const auto stats = store->add_experience(records);
      store->save(kn_store);
      std::cout << "added: " << stats.added << "\n" << "experiences: " << store->experience_count() << "\n";
      return 0;
    }

    if (*serve) {
      ServiceConfig config;
      config.catalog = load_catalog(serve_catalog);
      config.runtime = serve_runtime;
      config.workers = workers;
      if (serve_planner.kind == "http") {
        auto backend = http_backend(serve_planner);
        config.backend_factory = [backend] { return backend; };
      } else {
        if (serve_script.empty()) throw Error(ErrorCode::InvalidArgument, "scripted planner needs --planner-script");
        auto backend = planner::ScriptedBackend::load_file(serve_script);
        config.backend_factory = [backend] { return backend; };
      }
      if (!serve_manifest.empty()) {
        config.registry = std::make_shared<puppeteer::ApiRegistry>(
            puppeteer::ApiRegistry::load_manifest_file(serve_manifest, puppeteer::builtin_handlers()));
      }
      if (!serve_rules.empty()) config.rules = safeguard::RiskRuleset::load_file(serve_rules);
      if (!serve_store.empty()) config.knowledge = knowledge::KnowledgeStore::load(serve_store);

      Service service(std::move(config));
      g_service = &service;
      std::signal(SIGINT, [](int) {
        if (g_service) g_service->stop();
      });
      std::signal(SIGTERM, [](int) {
        if (g_service) g_service->stop();
      });
      std::cerr << "listening on " << host << ":" << port << "\n";
      if (!service.listen(host, port)) throw Error(ErrorCode::IoError, "cannot listen on port " + std::to_string(port));
      g_service = nullptr;
      return 0;
    }

    if (*report) {
      const auto events = read_jsonl(report_trace);
      const std::string session = events.empty() ? "" : events.front().session;
      const auto md = export_markdown(session, events);
      if (report_out.empty()) {
        std::cout << md;
      } else {
        write_file(report_out, md);
      }
      return 0;
    }
  } catch (const Error& e) {
    fail_json(to_string(e.code()), e.what());
    return 2;
  } catch (const std::exception& e) {
    fail_json("Internal", e.what());
    return 2;
  }
  return 0;
}
