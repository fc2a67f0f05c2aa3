#pragma once

// HTTP control plane. Sessions live in memory; rounds run on a worker pool
// and clients follow them through the long-poll event stream.
//
//   POST /sessions                        -> {"session_id"}
//   GET  /sessions                        -> [{"session_id","status","round_count","active","pending","last_seq"}]
//   GET  /sessions/{id}                   -> same shape plus "rounds" records
//   POST /sessions/{id}/rounds  {request} -> {"round_index"}
//   GET  /sessions/{id}/events?since=n&wait_ms=m -> [event...] with seq > n
//   POST /sessions/{id}/confirm {"decision": "approve"|"deny"} | {"reply": text|null}
//   POST /sessions/{id}/cancel
//   GET  /sessions/{id}/log               -> markdown

#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <queue>
#include <string>
#include <thread>
#include <vector>

#include "agentos/session.hpp"

namespace httplib {
class Server;
}

namespace agentos {

class WorkerPool {
 public:
  explicit WorkerPool(std::size_t threads);
  ~WorkerPool();
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  void submit(std::function<void()> job);
  /// Blocks until every submitted job has finished.
  void drain();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable idle_cv_;
  std::queue<std::function<void()>> jobs_;
  std::size_t running_ = 0;
  bool stopping_ = false;
  std::vector<std::thread> threads_;
};

struct ServiceConfig {
  std::shared_ptr<const simenv::Catalog> catalog;
  std::function<std::shared_ptr<planner::Backend>()> backend_factory;
  std::shared_ptr<const puppeteer::ApiRegistry> registry = std::make_shared<puppeteer::ApiRegistry>();
  safeguard::RiskRuleset rules;
  std::shared_ptr<const knowledge::KnowledgeStore> knowledge;
  RuntimeConfig runtime;
  std::size_t workers = 4;
  int max_wait_ms = 30000;
};

class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and serves on the calling thread until stop().
  bool listen(const std::string& host, int port);
  /// Binds to a free port and serves on a background thread; returns the port.
  int start_background(const std::string& host = "127.0.0.1");
  void stop();

  std::shared_ptr<Session> session(const std::string& id) const;

 private:
  struct Entry {
    std::shared_ptr<Session> session;
    std::shared_ptr<InteractiveChannel> channel;
    std::shared_ptr<Evaluator> evaluator;  // for the round in flight
  };

  void routes();
  std::shared_ptr<Entry> find(const std::string& id) const;
  Json describe(const std::string& id, const Entry& e, bool with_rounds) const;

  ServiceConfig config_;
  std::unique_ptr<httplib::Server> server_;
  WorkerPool pool_;
  std::thread listener_;

  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::uint64_t next_id_ = 1;
};

}  // namespace agentos
