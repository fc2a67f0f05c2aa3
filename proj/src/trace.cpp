#include "agentos/trace.hpp"

#include <fstream>
#include <sstream>

namespace agentos {

void to_json(Json& j, const TraceEvent& v) {
  j = Json{{"seq", v.seq}, {"ts", v.ts}, {"kind", v.kind}, {"session", v.session}, {"round", v.round},
           {"payload", v.payload}};
}

void from_json(const Json& j, TraceEvent& v) {
  v.seq = j.at("seq").get<std::uint64_t>();
  v.ts = j.value("ts", std::uint64_t{0});
  v.kind = j.at("kind").get<std::string>();
  v.session = j.value("session", "");
  v.round = j.value("round", 0);
  v.payload = j.value("payload", Json::object());
}

void Trace::set_clock(std::function<std::uint64_t()> clock) {
  std::lock_guard lock(mu_);
  clock_ = std::move(clock);
}

TraceEvent Trace::append(std::string kind, int round, Json payload) {
  TraceEvent ev;
  {
    std::lock_guard lock(mu_);
    ev.seq = events_.size() + 1;
    ev.ts = clock_ ? clock_() : 0;
    ev.kind = std::move(kind);
    ev.session = session_;
    ev.round = round;
    ev.payload = std::move(payload);
    events_.push_back(ev);
  }
  cv_.notify_all();
  return ev;
}

std::vector<TraceEvent> Trace::events() const {
  std::lock_guard lock(mu_);
  return events_;
}

std::vector<TraceEvent> Trace::since(std::uint64_t seq) const {
  std::lock_guard lock(mu_);
  if (seq >= events_.size()) return {};
  return {events_.begin() + static_cast<std::ptrdiff_t>(seq), events_.end()};
}

std::vector<TraceEvent> Trace::wait_since(std::uint64_t seq, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] { return events_.size() > seq; });
  if (seq >= events_.size()) return {};
  return {events_.begin() + static_cast<std::ptrdiff_t>(seq), events_.end()};
}

std::uint64_t Trace::last_seq() const {
  std::lock_guard lock(mu_);
  return events_.size();
}

std::string Trace::to_jsonl() const { return agentos::to_jsonl(events()); }

void Trace::write_jsonl(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write trace " + path.string());
  out << to_jsonl();
}

std::string to_jsonl(const std::vector<TraceEvent>& events) {
  std::string out;
  for (const auto& e : events) {
    out += Json(e).dump();
    out += '\n';
  }
  return out;
}

std::vector<TraceEvent> parse_jsonl(const std::string& text) {
  std::vector<TraceEvent> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(Json::parse(line).get<TraceEvent>());
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::InvalidArgument, "trace line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<TraceEvent> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open trace " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_jsonl(ss.str());
}

}  // namespace agentos
