#include "agentos/channel.hpp"

namespace agentos {

std::string_view to_string(Decision d) { return d == Decision::Approve ? "approve" : "deny"; }

Decision parse_decision(std::string_view s) {
  if (s == "approve") return Decision::Approve;
  if (s == "deny") return Decision::Deny;
  throw Error(ErrorCode::InvalidArgument, "decision must be approve or deny, got '" + std::string(s) + "'");
}

Decision ScriptedChannel::confirm(const Json&) {
  std::lock_guard lock(mu_);
  ++asked_;
  if (decisions_.empty()) return fallback_;
  auto d = decisions_.front();
  decisions_.pop_front();
  return d;
}

std::optional<std::string> ScriptedChannel::clarify(const std::string&) {
  std::lock_guard lock(mu_);
  if (replies_.empty()) return std::nullopt;
  auto r = replies_.front();
  replies_.pop_front();
  return r;
}

std::size_t ScriptedChannel::confirmations_asked() const {
  std::lock_guard lock(mu_);
  return asked_;
}

Decision InteractiveChannel::confirm(const Json&) {
  std::unique_lock lock(mu_);
  if (interrupted_) throw Error(ErrorCode::Cancelled, "round cancelled");
  pending_ = Kind::Confirm;
  answered_ = false;
  cv_.wait(lock, [&] { return answered_ || interrupted_; });
  pending_ = Kind::None;
  if (!answered_) throw Error(ErrorCode::Cancelled, "round cancelled while awaiting confirmation");
  answered_ = false;
  return decision_;
}

std::optional<std::string> InteractiveChannel::clarify(const std::string&) {
  std::unique_lock lock(mu_);
  if (interrupted_) throw Error(ErrorCode::Cancelled, "round cancelled");
  pending_ = Kind::Clarify;
  answered_ = false;
  cv_.wait(lock, [&] { return answered_ || interrupted_; });
  pending_ = Kind::None;
  if (!answered_) throw Error(ErrorCode::Cancelled, "round cancelled while awaiting clarification");
  answered_ = false;
  return reply_;
}

void InteractiveChannel::interrupt() {
  {
    std::lock_guard lock(mu_);
    interrupted_ = true;
  }
  cv_.notify_all();
}

void InteractiveChannel::resolve_confirm(Decision d) {
  {
    std::lock_guard lock(mu_);
    if (pending_ != Kind::Confirm || answered_) throw Error(ErrorCode::NotPending, "no confirmation is pending");
    decision_ = d;
    answered_ = true;
  }
  cv_.notify_all();
}

void InteractiveChannel::resolve_clarify(std::optional<std::string> reply) {
  {
    std::lock_guard lock(mu_);
    if (pending_ != Kind::Clarify || answered_) throw Error(ErrorCode::NotPending, "no question is pending");
    reply_ = std::move(reply);
    answered_ = true;
  }
  cv_.notify_all();
}

std::string InteractiveChannel::pending_kind() const {
  std::lock_guard lock(mu_);
  if (answered_) return "";
  switch (pending_) {
    case Kind::Confirm: return "confirm";
    case Kind::Clarify: return "clarify";
    case Kind::None: return "";
  }
  return "";
}

void InteractiveChannel::reset() {
  std::lock_guard lock(mu_);
  interrupted_ = false;
  answered_ = false;
  pending_ = Kind::None;
}

}  // namespace agentos
