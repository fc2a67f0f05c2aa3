#include "agentos/markdown.hpp"

#include <map>
#include <sstream>

namespace agentos {

namespace {

std::string str(const Json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return "";
  return it->is_string() ? it->get<std::string>() : it->dump();
}

std::string short_hash(const std::string& h) { return h.substr(0, 12); }

std::string describe_action(const Json& action) {
  try {
    return action.get<PlannedAction>().describe();
  } catch (const std::exception&) {
    return action.dump();
  }
}

struct StepBlock {
  std::string title;
  std::vector<std::string> lines;
};

struct RoundBlock {
  int index = 0;
  std::string request;
  std::vector<std::string> host;
  std::vector<StepBlock> steps;
  std::vector<std::string> result;
};

std::string controls_line(const Json& controls) {
  std::string out;
  std::size_t n = 0;
  for (const auto& c : controls) {
    if (n++) out += ", ";
    out += "[" + str(c, "mark") + "] " + str(c, "type") + " \"" + str(c, "label") + "\"";
    if (str(c, "source") == "vision") out += " (vision)";
    if (!c.value("enabled", true)) out += " (disabled)";
  }
  return out.empty() ? "(none)" : out;
}

}  // namespace

std::string export_markdown(const std::string& session_id, const std::vector<TraceEvent>& events) {
  std::ostringstream os;
  os << "# Session " << session_id << "\n";

  std::string catalog;
  std::vector<RoundBlock> rounds;
  std::map<int, std::size_t> by_index;

  auto round_of = [&](int index) -> RoundBlock* {
    auto it = by_index.find(index);
    return it == by_index.end() ? nullptr : &rounds[it->second];
  };
  auto step_lines = [&](RoundBlock& r) -> std::vector<std::string>& {
    return r.steps.empty() ? r.host : r.steps.back().lines;
  };

  for (const auto& e : events) {
    const auto& p = e.payload;
    if (e.kind == events::kSessionStart) {
      catalog = str(p, "catalog_version");
      continue;
    }
    if (e.kind == events::kRoundStart) {
      by_index[e.round] = rounds.size();
      rounds.push_back(RoundBlock{e.round, str(p, "request"), {}, {}, {}});
      const auto prior = p.value("prior_rounds", Json::array());
      if (!prior.empty()) rounds.back().host.push_back("- Context: " + std::to_string(prior.size()) + " earlier round(s)");
      continue;
    }
    RoundBlock* r = round_of(e.round);
    if (!r) continue;

    if (e.kind == events::kHostOutput) {
      r->host.push_back("- Plan (" + str(p, "status") + "): " + str(p, "agent_message"));
      std::size_t i = 0;
      for (const auto& s : p["subtask_plan"].value("subtasks", Json::array())) {
        r->host.push_back("  " + std::to_string(++i) + ". [" + str(s, "target_app") + "] " + str(s, "description"));
      }
    } else if (e.kind == events::kHostTransition) {
      r->host.push_back("- Host: " + str(p, "from") + " -> " + str(p, "to") + " (" + str(p, "event") + ")");
    } else if (e.kind == events::kClarifyRequest) {
      r->host.push_back("- Question: " + str(p, "prompt"));
    } else if (e.kind == events::kClarify) {
      r->host.push_back("- Answer: " + (p["reply"].is_null() ? std::string("(none)") : str(p, "reply")));
    } else if (e.kind == events::kObservation) {
      StepBlock step;
      step.title = "Step " + std::to_string(r->steps.size() + 1) + " (" + str(p, "app") + ", subtask " +
                   str(p, "subtask") + ")";
      const auto& f = p.value("fusion", Json::object());
      step.lines.push_back("- Observation `" + short_hash(str(p, "observation_hash")) + "` at tick " +
                           std::to_string(e.ts) + ": " + std::to_string(p["controls"].size()) + " controls (" +
                           str(f, "acc_count") + " accessibility, " + str(f, "vis_count") + " vision, " +
                           str(f, "discarded_count") + " discarded)");
      step.lines.push_back("- Controls: " + controls_line(p["controls"]));
      r->steps.push_back(std::move(step));
    } else if (e.kind == events::kPlannerCall) {
      if (e.payload.value("attempt", 0) > 0 || !p["error"].is_null()) {
        step_lines(*r).push_back("- Planner " + str(p, "role") + " call, attempt " + str(p, "attempt") +
                                 (p["error"].is_null() ? std::string() : ": " + str(p, "error")));
      }
    } else if (e.kind == events::kAppOutput) {
      auto& lines = step_lines(*r);
      const auto& out = p["output"];
      if (p.value("external", false)) {
        lines.push_back("- External agent: " + str(out, "status"));
        continue;
      }
      lines.push_back("- Rationale: " + str(out, "rationale"));
      lines.push_back("- Planned (" + str(out, "status") + "):");
      std::size_t i = 0;
      for (const auto& a : out.value("batch", Json::array())) {
        lines.push_back("  " + std::to_string(++i) + ". " + describe_action(a));
      }
      if (i == 0) lines.push_back("  (no actions)");
      if (out.value("truncated", false)) lines.push_back("- Truncated: " + str(out, "truncation_reason"));
    } else if (e.kind == events::kSafeguard) {
      if (p.value("risky", false)) {
        step_lines(*r).push_back("- Safeguard: " + describe_action(p["action"]) + " matches " + str(p, "matched_rule"));
      }
    } else if (e.kind == events::kConfirm) {
      step_lines(*r).push_back("- Confirmation: " + str(p, "decision") + (p.value("auto", false) ? " (automatic)" : ""));
    } else if (e.kind == events::kAborted) {
      step_lines(*r).push_back("- Aborted: " + str(p, "description"));
    } else if (e.kind == events::kAction) {
      const auto& o = p["outcome"];
      std::string line = "- Executed " + str(p, "description") + ": " + str(o, "status");
      if (!o["error"].is_null()) line += " (" + str(o, "error") + ")";
      if (o.value("fell_back", false)) line += ", fell back to GUI";
      step_lines(*r).push_back(line);
    } else if (e.kind == events::kBatchReport) {
      std::string line = "- Outcome: executed " + str(p, "executed") + " of " + str(p, "k");
      if (p.value("halted_early", false)) line += ", halted (" + str(p, "halt_detail") + ")";
      if (p.value("replan", false)) line += ", replan";
      step_lines(*r).push_back(line);
    } else if (e.kind == events::kAppTransition) {
      step_lines(*r).push_back("- State: " + str(p, "from") + " -> " + str(p, "to") + " (" + str(p, "event") + ")");
    } else if (e.kind == events::kBlackboard) {
      step_lines(*r).push_back("- Blackboard #" + str(p, "seq") + " " + str(p, "kind") + ": " + p.value("body", Json()).dump());
    } else if (e.kind == events::kRoundEnd) {
      r->result.push_back("- Outcome: " + str(p, "outcome") +
                          (p["error"].is_null() ? std::string() : " (" + str(p, "error") + ")"));
      if (!str(p, "detail").empty()) r->result.push_back("- Detail: " + str(p, "detail"));
      r->result.push_back("- Planner calls: " + str(p, "planner_calls") + ", steps: " + str(p, "steps") +
                          ", executor actions: " + str(p, "executor_actions"));
      r->result.push_back("- Final state: `" + short_hash(str(p, "final_hash")) + "`");
    } else if (e.kind == events::kEvaluation) {
      r->result.push_back("- Evaluation: " + str(p, "verdict") + " (" + str(p, "rationale") + ")");
    }
  }

  if (!catalog.empty()) os << "\nCatalog `" << catalog << "`\n";
  for (const auto& r : rounds) {
    os << "\n## Round " << r.index << ": " << r.request << "\n";
    if (!r.host.empty()) {
      os << "\n### Host\n\n";
      for (const auto& l : r.host) os << l << "\n";
    }
    for (const auto& s : r.steps) {
      os << "\n### " << s.title << "\n\n";
      for (const auto& l : s.lines) os << l << "\n";
    }
    if (!r.result.empty()) {
      os << "\n### Result\n\n";
      for (const auto& l : r.result) os << l << "\n";
    }
  }
  return os.str();
}

}  // namespace agentos
