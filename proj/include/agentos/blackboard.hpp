#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "agentos/domain.hpp"

namespace agentos {

struct BlackboardFilter {
  std::optional<EntryKind> kind;
  std::optional<std::string> author;
  std::optional<int> round;
};

/// Append-only shared memory. Appends are linearizable and assign dense
/// sequence numbers starting at 1; entries never change once appended.
class Blackboard {
 public:
  using Listener = std::function<void(const BlackboardEntry&)>;

  /// Throws SessionClosed after close().
  BlackboardEntry append(Json body, std::string author, EntryKind kind, int round);
  std::vector<BlackboardEntry> read(const BlackboardFilter& filter = {}) const;
  std::size_t size() const;

  void close();
  bool closed() const;

  /// Invoked for each append, in seq order, while the append lock is held.
  void set_listener(Listener listener);

 private:
  mutable std::shared_mutex mu_;
  std::deque<BlackboardEntry> entries_;
  bool closed_ = false;
  Listener listener_;
};

}  // namespace agentos
