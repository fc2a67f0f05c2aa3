#include "agentos/blackboard.hpp"

#include <mutex>

namespace agentos {

BlackboardEntry Blackboard::append(Json body, std::string author, EntryKind kind, int round) {
  std::unique_lock lock(mu_);
  if (closed_) throw Error(ErrorCode::SessionClosed, "blackboard is closed");
  BlackboardEntry entry;
  entry.seq = entries_.size() + 1;
  entry.author = std::move(author);
  entry.kind = kind;
  entry.body = std::move(body);
  entry.round = round;
  entries_.push_back(entry);
  // Notified under the write lock so listeners observe seq order.
  if (listener_) listener_(entry);
  return entry;
}

std::vector<BlackboardEntry> Blackboard::read(const BlackboardFilter& filter) const {
  std::shared_lock lock(mu_);
  std::vector<BlackboardEntry> out;
  for (const auto& e : entries_) {
    if (filter.kind && e.kind != *filter.kind) continue;
    if (filter.author && e.author != *filter.author) continue;
    if (filter.round && e.round != *filter.round) continue;
    out.push_back(e);
  }
  return out;
}

std::size_t Blackboard::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

void Blackboard::close() {
  std::unique_lock lock(mu_);
  closed_ = true;
}

bool Blackboard::closed() const {
  std::shared_lock lock(mu_);
  return closed_;
}

void Blackboard::set_listener(Listener listener) {
  std::unique_lock lock(mu_);
  listener_ = std::move(listener);
}

}  // namespace agentos
