#pragma once

#include <string>
#include <vector>

#include "agentos/trace.hpp"

namespace agentos {

/// Human-readable execution log: a header, then one section per round with
/// one subsection per AppAgent step. Output is a pure function of the events.
std::string export_markdown(const std::string& session_id, const std::vector<TraceEvent>& events);

}  // namespace agentos
