#pragma once

// Control-state machines for the HostAgent and the AppAgent. The tables are
// the whole contract: anything not listed raises IllegalTransition.

#include <optional>
#include <string_view>
#include <vector>

#include "agentos/domain.hpp"

namespace agentos {

enum class HostEvent { SubtaskReady, SubtaskDone, SubtaskFailed, ClarificationNeeded, UserReply, AllDone, Fatal };
enum class AppEvent { Step, RiskDetected, Confirmed, Finished, Failed };

std::string_view to_string(HostEvent e);
std::string_view to_string(AppEvent e);

inline constexpr HostEvent kAllHostEvents[] = {HostEvent::SubtaskReady,        HostEvent::SubtaskDone,
                                               HostEvent::SubtaskFailed,       HostEvent::ClarificationNeeded,
                                               HostEvent::UserReply,           HostEvent::AllDone,
                                               HostEvent::Fatal};
inline constexpr AppEvent kAllAppEvents[] = {AppEvent::Step, AppEvent::RiskDetected, AppEvent::Confirmed,
                                             AppEvent::Finished, AppEvent::Failed};

/// Next state, or nullopt when the event is not legal in `from`.
std::optional<HostState> host_transition(HostState from, HostEvent event);
std::optional<AppState> app_transition(AppState from, AppEvent event);

inline bool is_terminal(HostState s) { return s == HostState::Finish || s == HostState::Fail; }
inline bool is_terminal(AppState s) { return s == AppState::Finish || s == AppState::Fail; }

template <typename State, typename Event>
struct Transition {
  State from;
  Event event;
  State to;
};

class HostFsm {
 public:
  explicit HostFsm(HostState initial = HostState::Continue) : state_(initial) {}
  HostState state() const { return state_; }
  /// Throws IllegalTransition.
  HostState fire(HostEvent event);
  const std::vector<Transition<HostState, HostEvent>>& history() const { return history_; }

 private:
  HostState state_;
  std::vector<Transition<HostState, HostEvent>> history_;
};

class AppFsm {
 public:
  explicit AppFsm(AppState initial = AppState::Continue) : state_(initial) {}
  AppState state() const { return state_; }
  AppState fire(AppEvent event);
  const std::vector<Transition<AppState, AppEvent>>& history() const { return history_; }

 private:
  AppState state_;
  std::vector<Transition<AppState, AppEvent>> history_;
};

}  // namespace agentos
