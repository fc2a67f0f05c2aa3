#include "agentos/fsm.hpp"

#include <string>

namespace agentos {

std::string_view to_string(HostEvent e) {
  switch (e) {
    case HostEvent::SubtaskReady: return "subtask_ready";
    case HostEvent::SubtaskDone: return "subtask_done";
    case HostEvent::SubtaskFailed: return "subtask_failed";
    case HostEvent::ClarificationNeeded: return "clarification_needed";
    case HostEvent::UserReply: return "user_reply";
    case HostEvent::AllDone: return "all_done";
    case HostEvent::Fatal: return "fatal";
  }
  return "?";
}

std::string_view to_string(AppEvent e) {
  switch (e) {
    case AppEvent::Step: return "step";
    case AppEvent::RiskDetected: return "risk_detected";
    case AppEvent::Confirmed: return "confirmed";
    case AppEvent::Finished: return "finished";
    case AppEvent::Failed: return "failed";
  }
  return "?";
}

std::optional<HostState> host_transition(HostState from, HostEvent event) {
  if (is_terminal(from)) return std::nullopt;
  if (event == HostEvent::Fatal) return HostState::Fail;
  switch (from) {
    case HostState::Continue:
      if (event == HostEvent::SubtaskReady) return HostState::Assign;
      if (event == HostEvent::ClarificationNeeded) return HostState::Pending;
      if (event == HostEvent::AllDone) return HostState::Finish;
      break;
    case HostState::Assign:
      if (event == HostEvent::SubtaskDone) return HostState::Continue;
      if (event == HostEvent::SubtaskFailed) return HostState::Fail;
      break;
    case HostState::Pending:
      if (event == HostEvent::UserReply) return HostState::Continue;
      break;
    default: break;
  }
  return std::nullopt;
}

std::optional<AppState> app_transition(AppState from, AppEvent event) {
  switch (from) {
    case AppState::Continue:
      if (event == AppEvent::Step) return AppState::Continue;
      if (event == AppEvent::RiskDetected) return AppState::Pending;
      if (event == AppEvent::Finished) return AppState::Finish;
      if (event == AppEvent::Failed) return AppState::Fail;
      break;
    case AppState::Pending:
      if (event == AppEvent::Confirmed) return AppState::Continue;
      if (event == AppEvent::Failed) return AppState::Fail;
      break;
    default: break;
  }
  return std::nullopt;
}

HostState HostFsm::fire(HostEvent event) {
  auto next = host_transition(state_, event);
  if (!next) {
    throw Error(ErrorCode::IllegalTransition,
                "host: " + std::string(to_string(event)) + " in " + std::string(to_string(state_)));
  }
  history_.push_back({state_, event, *next});
  state_ = *next;
  return state_;
}

AppState AppFsm::fire(AppEvent event) {
  auto next = app_transition(state_, event);
  if (!next) {
    throw Error(ErrorCode::IllegalTransition,
                "app: " + std::string(to_string(event)) + " in " + std::string(to_string(state_)));
  }
  history_.push_back({state_, event, *next});
  state_ = *next;
  return state_;
}

}  // namespace agentos
