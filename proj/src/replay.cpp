#include "agentos/replay.hpp"

namespace agentos {

void to_json(Json& j, const ReplayDivergence& v) {
  j = Json{{"index", v.index},
           {"seq", v.seq},
           {"recorded_hash", v.recorded_hash},
           {"replayed_hash", v.replayed_hash},
           {"action", v.action}};
}

void to_json(Json& j, const ReplayResult& v) {
  j = Json{{"final_hash", v.final_hash},
           {"recorded_hash", v.recorded_hash},
           {"match", v.match},
           {"applied", v.applied},
           {"divergence", v.divergence ? Json(*v.divergence) : Json(nullptr)}};
}

ReplayResult replay(const std::vector<TraceEvent>& trace, std::shared_ptr<const simenv::Catalog> catalog) {
  std::optional<std::string> version;
  for (const auto& e : trace) {
    if (e.kind == events::kSessionStart) {
      version = e.payload.value("catalog_version", "");
      break;
    }
  }
  if (!version) throw Error(ErrorCode::InvalidArgument, "trace has no session_start event");
  if (*version != catalog->version()) {
    throw Error(ErrorCode::CatalogMismatch,
                "trace recorded against catalog " + *version + ", local catalog is " + catalog->version());
  }

  simenv::Desktop desktop(catalog);
  ReplayResult result;
  std::string last_recorded;
  for (const auto& e : trace) {
    if (e.kind == events::kRoundEnd) {
      result.recorded_hash = e.payload.value("final_hash", "");
      continue;
    }
    if (e.kind != events::kSim) continue;
    const auto& p = e.payload;
    const auto kind = p.value("kind", "");
    const auto app = p.value("app", "");
    if (kind == "launch") {
      desktop.launch_app(app);
    } else if (kind == "apply") {
      desktop.apply_action(app, p.at("action").get<PlannedAction>());
    } else {
      throw Error(ErrorCode::MalformedRecord, "unknown desktop event kind '" + kind + "'");
    }
    last_recorded = p.value("state_hash", "");
    const auto now = desktop.state_hash();
    if (!result.divergence && now != last_recorded) {
      result.divergence = ReplayDivergence{result.applied, e.seq, last_recorded, now, p.value("action", Json())};
    }
    ++result.applied;
  }
  if (result.recorded_hash.empty()) result.recorded_hash = last_recorded;
  result.final_hash = desktop.state_hash();
  result.match = result.final_hash == result.recorded_hash;
  return result;
}

}  // namespace agentos
