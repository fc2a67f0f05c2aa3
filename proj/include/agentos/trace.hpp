#pragma once

// Session trace: a totally ordered, gap-free list of event records. The same
// records are the service's event stream and, one per line, the trace file.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "agentos/domain.hpp"

namespace agentos {

namespace events {
inline constexpr const char* kSessionStart = "session_start";
inline constexpr const char* kSessionEnd = "session_end";
inline constexpr const char* kRoundStart = "round_start";
inline constexpr const char* kRoundEnd = "round_end";
inline constexpr const char* kHostOutput = "host_output";
inline constexpr const char* kHostTransition = "host_transition";
inline constexpr const char* kAppTransition = "app_transition";
inline constexpr const char* kObservation = "observation";
inline constexpr const char* kPlannerCall = "planner_call";
inline constexpr const char* kAppOutput = "app_output";
inline constexpr const char* kSafeguard = "safeguard";
inline constexpr const char* kConfirmRequest = "confirm_request";
inline constexpr const char* kConfirm = "confirm";
inline constexpr const char* kClarifyRequest = "clarify_request";
inline constexpr const char* kClarify = "clarify";
inline constexpr const char* kAborted = "aborted";
inline constexpr const char* kAction = "action";
inline constexpr const char* kBatchReport = "batch_report";
inline constexpr const char* kBlackboard = "blackboard";
inline constexpr const char* kSim = "sim";
inline constexpr const char* kEvaluation = "evaluation";
}  // namespace events

struct TraceEvent {
  std::uint64_t seq = 0;
  std::uint64_t ts = 0;  // desktop tick when recorded
  std::string kind;
  std::string session;
  int round = 0;
  Json payload = Json::object();

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

void to_json(Json& j, const TraceEvent& v);
void from_json(const Json& j, TraceEvent& v);

class Trace {
 public:
  explicit Trace(std::string session_id) : session_(std::move(session_id)) {}

  void set_clock(std::function<std::uint64_t()> clock);

  TraceEvent append(std::string kind, int round, Json payload);

  std::vector<TraceEvent> events() const;
  /// Events with seq > `seq`, in order.
  std::vector<TraceEvent> since(std::uint64_t seq) const;
  /// Like since(), but waits up to `timeout` for at least one new event.
  std::vector<TraceEvent> wait_since(std::uint64_t seq, std::chrono::milliseconds timeout) const;
  std::uint64_t last_seq() const;
  const std::string& session_id() const { return session_; }

  std::string to_jsonl() const;
  void write_jsonl(const std::filesystem::path& path) const;

 private:
  std::string session_;
  std::function<std::uint64_t()> clock_;
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::vector<TraceEvent> events_;
};

std::string to_jsonl(const std::vector<TraceEvent>& events);
std::vector<TraceEvent> parse_jsonl(const std::string& text);
std::vector<TraceEvent> read_jsonl(const std::filesystem::path& path);

}  // namespace agentos
