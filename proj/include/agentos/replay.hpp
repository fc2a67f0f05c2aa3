#pragma once

// Planner-free re-execution of a recorded trace against a fresh desktop.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "agentos/simenv.hpp"
#include "agentos/trace.hpp"

namespace agentos {

struct ReplayDivergence {
  std::size_t index = 0;  // position among the trace's desktop events
  std::uint64_t seq = 0;  // trace seq of that event
  std::string recorded_hash;
  std::string replayed_hash;
  Json action;
};

struct ReplayResult {
  std::string final_hash;
  std::string recorded_hash;
  bool match = false;
  std::size_t applied = 0;
  std::optional<ReplayDivergence> divergence;
};

void to_json(Json& j, const ReplayDivergence& v);
void to_json(Json& j, const ReplayResult& v);

/// Throws CatalogMismatch when the trace was recorded against other content.
ReplayResult replay(const std::vector<TraceEvent>& trace, std::shared_ptr<const simenv::Catalog> catalog);

}  // namespace agentos
