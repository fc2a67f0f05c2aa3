#include "agentos/service.hpp"

#include <httplib.h>

#include <chrono>

#include "agentos/markdown.hpp"

namespace agentos {

// ---------------------------------------------------------------------------
// Worker pool

WorkerPool::WorkerPool(std::size_t threads) {
  if (threads == 0) threads = 1;
  for (std::size_t i = 0; i < threads; ++i) {
    threads_.emplace_back([this] {
      for (;;) {
        std::function<void()> job;
        {
          std::unique_lock lock(mu_);
          cv_.wait(lock, [&] { return stopping_ || !jobs_.empty(); });
          if (jobs_.empty()) return;
          job = std::move(jobs_.front());
          jobs_.pop();
          ++running_;
        }
        job();
        {
          std::lock_guard lock(mu_);
          --running_;
        }
        idle_cv_.notify_all();
      }
    });
  }
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  for (auto& t : threads_) t.join();
}

void WorkerPool::submit(std::function<void()> job) {
  {
    std::lock_guard lock(mu_);
    jobs_.push(std::move(job));
  }
  cv_.notify_one();
}

void WorkerPool::drain() {
  std::unique_lock lock(mu_);
  idle_cv_.wait(lock, [&] { return jobs_.empty() && running_ == 0; });
}

// ---------------------------------------------------------------------------
// Service

namespace {

void reply_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  reply_json(res, status, Json{{"error", code}, {"message", message}});
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::SessionClosed:
    case ErrorCode::RoundInProgress:
    case ErrorCode::NotPending: return 409;
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidRequest:
    case ErrorCode::ScenarioCriteriaMissing: return 400;
    case ErrorCode::UnknownApp: return 400;
    default: return 500;
  }
}

std::optional<Json> parse_body(const httplib::Request& req, httplib::Response& res, bool allow_empty) {
  if (req.body.empty() && allow_empty) return Json::object();
  try {
    auto j = Json::parse(req.body);
    if (!j.is_object()) {
      reply_error(res, 400, "InvalidArgument", "body must be a JSON object");
      return std::nullopt;
    }
    return j;
  } catch (const Json::parse_error& e) {
    reply_error(res, 400, "InvalidArgument", std::string("malformed JSON: ") + e.what());
    return std::nullopt;
  }
}

}  // namespace

Service::Service(ServiceConfig config)
    : config_(std::move(config)), server_(std::make_unique<httplib::Server>()), pool_(config_.workers) {
  if (!config_.catalog) throw Error(ErrorCode::InvalidArgument, "service needs a catalog");
  if (!config_.backend_factory) throw Error(ErrorCode::InvalidArgument, "service needs a planner backend");
  routes();
}

Service::~Service() {
  {
    std::lock_guard lock(mu_);
    for (auto& [id, e] : sessions_) e->session->cancel();
  }
  stop();
  pool_.drain();
}

bool Service::listen(const std::string& host, int port) { return server_->listen(host, port); }

int Service::start_background(const std::string& host) {
  const int port = server_->bind_to_any_port(host);
  if (port < 0) throw Error(ErrorCode::IoError, "cannot bind " + host);
  listener_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port;
}

void Service::stop() {
  server_->stop();
  if (listener_.joinable()) listener_.join();
}

std::shared_ptr<Service::Entry> Service::find(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::shared_ptr<Session> Service::session(const std::string& id) const {
  auto e = find(id);
  return e ? e->session : nullptr;
}

Json Service::describe(const std::string& id, const Entry& e, bool with_rounds) const {
  const auto rounds = e.session->rounds();
  Json j{{"session_id", id},
         {"status", to_string(e.session->status())},
         {"round_count", rounds.size()},
         {"active", e.session->round_active()},
         {"pending", e.channel->pending_kind().empty() ? Json(nullptr) : Json(e.channel->pending_kind())},
         {"last_seq", e.session->trace().last_seq()}};
  if (with_rounds) j["rounds"] = rounds;
  return j;
}

void Service::routes() {
  auto& s = *server_;
  s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                         {"Access-Control-Allow-Headers", "Content-Type"},
                         {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  s.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const Error& e) {
      reply_error(res, http_status(e.code()), to_string(e.code()), e.what());
    } catch (const std::exception& e) {
      reply_error(res, 500, "Internal", e.what());
    }
  });

  s.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req, res, true);
    if (!body) return;
    SessionConfig sc;
    sc.runtime = config_.runtime;
    try {
      if (body->contains("max_k")) sc.runtime.max_k = body->at("max_k").get<std::size_t>();
      if (body->contains("step_budget")) sc.runtime.step_budget = body->at("step_budget").get<int>();
      sc.prelaunch = body->value("prelaunch", std::vector<std::string>{});
    } catch (const Json::exception& e) {
      return reply_error(res, 400, "InvalidArgument", e.what());
    }
    if (sc.runtime.max_k == 0 || sc.runtime.step_budget <= 0) {
      return reply_error(res, 400, "InvalidArgument", "max_k and step_budget must be positive");
    }
    for (const auto& app : sc.prelaunch) {
      if (!config_.catalog->contains(app)) return reply_error(res, 400, "UnknownApp", "unknown app '" + app + "'");
    }
    sc.backend = config_.backend_factory();
    sc.registry = config_.registry;
    sc.rules = config_.rules;
    sc.knowledge = config_.knowledge;

    auto entry = std::make_shared<Entry>();
    entry->channel = std::make_shared<InteractiveChannel>();
    std::string id;
    {
      std::lock_guard lock(mu_);
      id = "s" + std::to_string(next_id_++);
    }
    entry->session = std::make_shared<Session>(id, config_.catalog, std::move(sc), entry->channel);
    {
      std::lock_guard lock(mu_);
      sessions_[id] = entry;
    }
    reply_json(res, 201, Json{{"session_id", id}});
  });

  s.Get("/sessions", [this](const httplib::Request&, httplib::Response& res) {
    Json out = Json::array();
    std::map<std::string, std::shared_ptr<Entry>> copy;
    {
      std::lock_guard lock(mu_);
      copy = sessions_;
    }
    for (const auto& [id, e] : copy) out.push_back(describe(id, *e, false));
    reply_json(res, 200, out);
  });

  s.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    auto e = find(id);
    if (!e) return reply_error(res, 404, "UnknownSession", "no session " + id);
    reply_json(res, 200, describe(id, *e, true));
  });

  s.Post(R"(/sessions/([^/]+)/rounds)", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    auto e = find(id);
    if (!e) return reply_error(res, 404, "UnknownSession", "no session " + id);
    auto body = parse_body(req, res, false);
    if (!body) return;
    if (!body->contains("request") || !(*body)["request"].is_string() ||
        (*body)["request"].get<std::string>().empty()) {
      return reply_error(res, 400, "InvalidRequest", "body needs a non-empty \"request\" string");
    }
    std::shared_ptr<Evaluator> evaluator;
    if (body->contains("success_predicates")) {
      try {
        evaluator = std::make_shared<RuleEvaluator>((*body)["success_predicates"].get<std::vector<Predicate>>());
      } catch (const Json::exception& ex) {
        return reply_error(res, 400, "InvalidArgument", ex.what());
      }
    }
    const int index = e->session->start_round((*body)["request"].get<std::string>());
    pool_.submit([e, evaluator] {
      const auto record = e->session->run_active_round();
      if (evaluator) {
        try {
          e->session->evaluate(record.index, *evaluator);
        } catch (const Error&) {
          // The round_end event already carries the outcome.
        }
      }
    });
    reply_json(res, 202, Json{{"round_index", index}});
  });

  s.Get(R"(/sessions/([^/]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    auto e = find(id);
    if (!e) return reply_error(res, 404, "UnknownSession", "no session " + id);
    std::uint64_t since = 0;
    int wait_ms = 0;
    try {
      if (req.has_param("since")) since = std::stoull(req.get_param_value("since"));
      if (req.has_param("wait_ms")) wait_ms = std::stoi(req.get_param_value("wait_ms"));
    } catch (const std::exception&) {
      return reply_error(res, 400, "InvalidArgument", "since and wait_ms must be integers");
    }
    wait_ms = std::clamp(wait_ms, 0, config_.max_wait_ms);
    const auto events = wait_ms > 0 ? e->session->trace().wait_since(since, std::chrono::milliseconds(wait_ms))
                                    : e->session->trace().since(since);
    Json out = Json::array();
    for (const auto& ev : events) out.push_back(ev);
    reply_json(res, 200, out);
  });

  s.Post(R"(/sessions/([^/]+)/confirm)", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    auto e = find(id);
    if (!e) return reply_error(res, 404, "UnknownSession", "no session " + id);
    auto body = parse_body(req, res, false);
    if (!body) return;
    if (body->contains("decision")) {
      const auto& d = (*body)["decision"];
      if (!d.is_string() || (d != "approve" && d != "deny")) {
        return reply_error(res, 400, "InvalidArgument", "decision must be \"approve\" or \"deny\"");
      }
      e->channel->resolve_confirm(parse_decision(d.get<std::string>()));
      return reply_json(res, 200, Json{{"resumed", "confirm"}, {"decision", d}});
    }
    if (body->contains("reply")) {
      const auto& r = (*body)["reply"];
      if (!r.is_string() && !r.is_null()) return reply_error(res, 400, "InvalidArgument", "reply must be a string");
      e->channel->resolve_clarify(r.is_null() ? std::nullopt : std::optional<std::string>(r.get<std::string>()));
      return reply_json(res, 200, Json{{"resumed", "clarify"}});
    }
    reply_error(res, 400, "InvalidArgument", "body needs \"decision\" or \"reply\"");
  });

  s.Post(R"(/sessions/([^/]+)/cancel)", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    auto e = find(id);
    if (!e) return reply_error(res, 404, "UnknownSession", "no session " + id);
    if (!e->session->round_active()) return reply_error(res, 409, "NotPending", "no round is running");
    e->session->cancel();
    reply_json(res, 202, Json{{"cancelling", true}});
  });

  s.Get(R"(/sessions/([^/]+)/log)", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    auto e = find(id);
    if (!e) return reply_error(res, 404, "UnknownSession", "no session " + id);
    res.set_content(export_markdown(id, e->session->trace().events()), "text/markdown; charset=utf-8");
  });
}

}  // namespace agentos
