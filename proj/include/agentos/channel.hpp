#pragma once

// How agents reach the user: safeguard confirmations and HostAgent
// clarification questions. Calls block until answered.

#include <condition_variable>
#include <deque>
#include <mutex>
#include <optional>
#include <string>

#include "agentos/domain.hpp"

namespace agentos {

enum class Decision { Approve, Deny };

std::string_view to_string(Decision d);
Decision parse_decision(std::string_view s);

class UserChannel {
 public:
  virtual ~UserChannel() = default;
  /// Throws Cancelled if the round is cancelled while waiting.
  virtual Decision confirm(const Json& request) = 0;
  /// nullopt means the user declined to answer.
  virtual std::optional<std::string> clarify(const std::string& prompt) = 0;
  /// True when answers are produced without a human (recorded in the trace).
  virtual bool automatic() const { return false; }
  /// Wakes any blocked call so it can observe cancellation.
  virtual void interrupt() {}
  /// Called when a new round starts.
  virtual void reset() {}
};

/// Headless operation: approves every confirmation, never answers questions.
class AutoApproveChannel : public UserChannel {
 public:
  Decision confirm(const Json&) override { return Decision::Approve; }
  std::optional<std::string> clarify(const std::string&) override { return std::nullopt; }
  bool automatic() const override { return true; }
};

/// Pre-recorded answers consumed in order; `fallback` once exhausted.
class ScriptedChannel : public UserChannel {
 public:
  ScriptedChannel(std::deque<Decision> decisions, std::deque<std::string> replies, Decision fallback = Decision::Deny)
      : decisions_(std::move(decisions)), replies_(std::move(replies)), fallback_(fallback) {}

  Decision confirm(const Json& request) override;
  std::optional<std::string> clarify(const std::string& prompt) override;
  bool automatic() const override { return true; }

  std::size_t confirmations_asked() const;

 private:
  mutable std::mutex mu_;
  std::deque<Decision> decisions_;
  std::deque<std::string> replies_;
  Decision fallback_;
  std::size_t asked_ = 0;
};

/// Parks the agent thread until another thread resolves the request, as the
/// service does from POST /confirm.
class InteractiveChannel : public UserChannel {
 public:
  Decision confirm(const Json& request) override;
  std::optional<std::string> clarify(const std::string& prompt) override;
  void interrupt() override;

  /// Throw NotPending when no matching request is waiting.
  void resolve_confirm(Decision d);
  void resolve_clarify(std::optional<std::string> reply);

  /// "confirm", "clarify" or empty.
  std::string pending_kind() const;
  void reset() override;

 private:
  enum class Kind { None, Confirm, Clarify };

  mutable std::mutex mu_;
  std::condition_variable cv_;
  Kind pending_ = Kind::None;
  bool answered_ = false;
  bool interrupted_ = false;
  Decision decision_ = Decision::Deny;
  std::optional<std::string> reply_;
};

}  // namespace agentos
