#include "agentos/session.hpp"

#include <algorithm>

#include "agentos/markdown.hpp"

namespace agentos {

// ---------------------------------------------------------------------------
// Evaluation

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Success: return "success";
    case Verdict::Partial: return "partial";
    case Verdict::Failure: return "failure";
  }
  return "?";
}

Verdict parse_verdict(std::string_view s) {
  if (s == "success") return Verdict::Success;
  if (s == "partial") return Verdict::Partial;
  if (s == "failure") return Verdict::Failure;
  throw Error(ErrorCode::InvalidArgument, "unknown verdict '" + std::string(s) + "'");
}

void to_json(Json& j, const EvaluationResult& v) {
  Json criteria = Json::array();
  for (const auto& c : v.criteria) criteria.push_back(Json{{"description", c.description}, {"score", c.score}});
  j = Json{{"verdict", to_string(v.verdict)}, {"criteria", criteria}, {"rationale", v.rationale}};
}

void from_json(const Json& j, EvaluationResult& v) {
  v.verdict = parse_verdict(j.at("verdict").get<std::string>());
  v.criteria.clear();
  for (const auto& c : j.value("criteria", Json::array())) {
    const double score = c.at("score").get<double>();
    if (!(score >= 0.0 && score <= 1.0)) throw Error(ErrorCode::InvalidArgument, "criterion score outside [0,1]");
    v.criteria.push_back({c.value("description", ""), score});
  }
  v.rationale = j.value("rationale", "");
}

Verdict aggregate(const std::vector<Criterion>& criteria) {
  if (criteria.empty()) return Verdict::Failure;
  const bool all = std::all_of(criteria.begin(), criteria.end(), [](const Criterion& c) { return c.score >= 1.0; });
  if (all) return Verdict::Success;
  const bool any = std::any_of(criteria.begin(), criteria.end(), [](const Criterion& c) { return c.score > 0.0; });
  return any ? Verdict::Partial : Verdict::Failure;
}

void to_json(Json& j, const Predicate& v) { j = Json{{"key", v.key}, {"expected", v.expected}}; }

void from_json(const Json& j, Predicate& v) {
  v.key = j.at("key").get<std::string>();
  v.expected = j.at("expected");
  if (v.key.find('.') == std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, "predicate key must be <app>.<field>, got '" + v.key + "'");
  }
}

RuleEvaluator::RuleEvaluator(std::vector<Predicate> predicates) : predicates_(std::move(predicates)) {
  if (predicates_.empty()) throw Error(ErrorCode::ScenarioCriteriaMissing, "scenario declares no success predicates");
}

EvaluationResult RuleEvaluator::evaluate(const EvaluationInput& input) {
  EvaluationResult out;
  std::size_t met = 0;
  for (const auto& p : predicates_) {
    const auto dot = p.key.find('.');
    const auto app = p.key.substr(0, dot);
    const auto field = p.key.substr(dot + 1);
    double score = 0.0;
    if (input.desktop && input.desktop->is_running(app)) {
      const auto doc = input.desktop->document(app);
      if (doc.contains(field) && doc[field] == p.expected) score = 1.0;
    }
    if (score > 0) ++met;
    out.criteria.push_back({p.key + " == " + p.expected.dump(), score});
  }
  out.verdict = aggregate(out.criteria);
  out.rationale = std::to_string(met) + " of " + std::to_string(predicates_.size()) + " predicates hold";
  return out;
}

EvaluationResult JudgeEvaluator::evaluate(const EvaluationInput& input) {
  const auto transcript = export_markdown("judge", input.round_events);
  auto result = planner_->judge(input.request, transcript, hints_).get<EvaluationResult>();
  if (!result.criteria.empty()) result.verdict = aggregate(result.criteria);
  return result;
}

// ---------------------------------------------------------------------------
// Session

std::string_view to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::Open: return "open";
    case SessionStatus::Finished: return "finished";
    case SessionStatus::Failed: return "failed";
  }
  return "?";
}

void to_json(Json& j, const RoundRecord& v) {
  j = Json{{"index", v.index},
           {"request", v.request},
           {"terminal", v.terminal},
           {"outcome", v.outcome ? Json(to_string(*v.outcome)) : Json(nullptr)},
           {"error", v.error ? Json(to_string(*v.error)) : Json(nullptr)},
           {"detail", v.detail},
           {"planner_calls", v.planner_calls},
           {"host_calls", v.host_calls},
           {"steps", v.steps},
           {"executor_actions", v.executor_actions},
           {"final_hash", v.final_hash},
           {"evaluation", v.evaluation ? Json(*v.evaluation) : Json(nullptr)}};
}

namespace {

Json sim_payload(const simenv::SimEvent& ev) {
  return Json{{"kind", ev.kind == simenv::SimEvent::Kind::Launch ? "launch" : "apply"},
              {"app", ev.app_id},
              {"action", ev.action ? Json(*ev.action) : Json(nullptr)},
              {"outcome", ev.outcome},
              {"state_hash", ev.state_hash},
              {"tick", ev.tick}};
}

}  // namespace

Session::Session(std::string id, std::shared_ptr<const simenv::Catalog> catalog, SessionConfig config,
                 std::shared_ptr<UserChannel> channel)
    : id_(std::move(id)),
      catalog_(std::move(catalog)),
      config_(std::move(config)),
      channel_(std::move(channel)),
      desktop_(std::make_unique<simenv::Desktop>(catalog_)),
      trace_(id_),
      agents_(env_) {
  if (!config_.backend) throw Error(ErrorCode::InvalidArgument, "session needs a planner backend");
  if (!channel_) channel_ = std::make_shared<AutoApproveChannel>();
  if (!config_.registry) config_.registry = std::make_shared<puppeteer::ApiRegistry>();

  planner_ = std::make_shared<planner::Planner>(config_.backend, config_.prompt_budget);
  puppeteer_ = std::make_unique<puppeteer::Puppeteer>(config_.registry, *desktop_);

  trace_.set_clock([d = desktop_.get()] { return d->tick(); });
  desktop_->set_observer([this](const simenv::SimEvent& ev) {
    trace_.append(events::kSim, current_round_.load(), sim_payload(ev));
  });
  blackboard_.set_listener([this](const BlackboardEntry& e) {
    trace_.append(events::kBlackboard, current_round_.load(), Json(e));
  });
  planner_->set_observer([this](const planner::PlannerCall& c) {
    trace_.append(events::kPlannerCall, current_round_.load(),
                  Json{{"role", planner::to_string(c.role)},
                       {"trigger", c.trigger_key},
                       {"step", c.step},
                       {"attempt", c.attempt},
                       {"context_digest", c.context_digest},
                       {"observation_hash", c.observation_hash},
                       {"response", c.response},
                       {"error", c.error ? Json(*c.error) : Json(nullptr)}});
  });

  env_.desktop = desktop_.get();
  env_.registry = config_.registry;
  env_.puppeteer = puppeteer_.get();
  env_.planner = planner_.get();
  env_.knowledge = config_.knowledge.get();
  env_.rules = &config_.rules;
  env_.detector = config_.detector.get();
  env_.blackboard = &blackboard_;
  env_.trace = &trace_;
  env_.channel = channel_.get();
  env_.config = config_.runtime;
  env_.cancelled = [this] { return cancel_.load(); };
  for (const auto& [app, shim] : config_.external_agents) agents_.register_external(app, shim);

  trace_.append(events::kSessionStart, 0,
                Json{{"catalog_version", catalog_->version()},
                     {"config", config_.runtime},
                     {"prelaunch", config_.prelaunch}});
  for (const auto& app : config_.prelaunch) desktop_->launch_app(app);
}

Session::~Session() = default;

SessionStatus Session::status() const {
  std::lock_guard lock(mu_);
  if (!closed_) return SessionStatus::Open;
  if (!rounds_.empty() && rounds_.back().outcome == HostState::Finish) return SessionStatus::Finished;
  return rounds_.empty() ? SessionStatus::Finished : SessionStatus::Failed;
}

bool Session::round_active() const {
  std::lock_guard lock(mu_);
  return active_;
}

std::vector<RoundRecord> Session::rounds() const {
  std::lock_guard lock(mu_);
  return rounds_;
}

Json Session::prior_rounds_summary() const {
  Json out = Json::array();
  for (const auto& r : rounds_) {
    if (!r.terminal) continue;
    Json s{{"round", r.index}, {"request", r.request}, {"outcome", r.outcome ? to_string(*r.outcome) : "?"}};
    if (r.evaluation) s["verdict"] = to_string(r.evaluation->verdict);
    if (!r.detail.empty()) s["detail"] = r.detail;
    out.push_back(s);
  }
  return out;
}

int Session::start_round(const std::string& request) {
  std::lock_guard lock(mu_);
  if (closed_) throw Error(ErrorCode::SessionClosed, "session " + id_ + " is closed");
  if (active_) throw Error(ErrorCode::RoundInProgress, "round " + std::to_string(rounds_.size()) + " is still running");
  const int index = static_cast<int>(rounds_.size()) + 1;
  const Json prior = prior_rounds_summary();
  RoundRecord record;
  record.index = index;
  record.request = request;
  rounds_.push_back(std::move(record));
  active_ = true;
  cancel_ = false;
  channel_->reset();
  current_round_ = index;
  trace_.append(events::kRoundStart, index, Json{{"index", index}, {"request", request}, {"prior_rounds", prior}});
  return index;
}

RoundRecord Session::tally(RoundRecord r) const {
  r.planner_calls = r.host_calls = r.steps = r.executor_actions = 0;
  for (const auto& e : trace_.events()) {
    if (e.round != r.index) continue;
    if (e.kind == events::kPlannerCall) {
      const auto role = e.payload.value("role", "");
      if (role == "app") ++r.planner_calls;
      if (role == "host") ++r.host_calls;
    } else if (e.kind == events::kAppOutput) {
      ++r.steps;
    } else if (e.kind == events::kAction) {
      r.executor_actions += e.payload.at("outcome").value("executor_actions", 0);
    }
  }
  return r;
}

RoundRecord Session::run_active_round() {
  RoundRecord record;
  Json prior;
  {
    std::lock_guard lock(mu_);
    if (!active_) throw Error(ErrorCode::InvalidArgument, "no round has been started");
    record = rounds_.back();
    rounds_.pop_back();
    prior = prior_rounds_summary();
    rounds_.push_back(record);
  }

  env_.round = record.index;
  env_.steps_used = 0;
  HostAgent host(env_, agents_);
  HostResult result;
  try {
    result = host.run(record.request, prior);
  } catch (const Error& e) {
    result.state = HostState::Fail;
    result.error = e.code();
    result.detail = e.what();
  }

  record.terminal = true;
  record.outcome = result.state;
  record.error = result.error;
  record.detail = result.detail;
  record.final_hash = desktop_->state_hash();
  record = tally(record);
  trace_.append(events::kRoundEnd, record.index,
                Json{{"index", record.index},
                     {"outcome", to_string(result.state)},
                     {"error", result.error ? Json(to_string(*result.error)) : Json(nullptr)},
                     {"detail", result.detail},
                     {"planner_calls", record.planner_calls},
                     {"host_calls", record.host_calls},
                     {"steps", record.steps},
                     {"executor_actions", record.executor_actions},
                     {"final_hash", record.final_hash}});
  {
    std::lock_guard lock(mu_);
    rounds_.back() = record;
    active_ = false;
  }
  return record;
}

RoundRecord Session::run_round(const std::string& request) {
  start_round(request);
  return run_active_round();
}

EvaluationResult Session::evaluate(int round, Evaluator& evaluator) {
  EvaluationInput input;
  {
    std::lock_guard lock(mu_);
    if (round < 1 || round > static_cast<int>(rounds_.size())) {
      throw Error(ErrorCode::InvalidArgument, "no round " + std::to_string(round));
    }
    const auto& r = rounds_[static_cast<std::size_t>(round - 1)];
    if (!r.terminal) throw Error(ErrorCode::RoundInProgress, "round " + std::to_string(round) + " is not terminal");
    input.request = r.request;
  }
  input.desktop = desktop_.get();
  for (auto& e : trace_.events()) {
    if (e.round == round) input.round_events.push_back(std::move(e));
  }
  auto result = evaluator.evaluate(input);
  Json payload = result;
  payload["index"] = round;
  trace_.append(events::kEvaluation, round, payload);
  std::lock_guard lock(mu_);
  rounds_[static_cast<std::size_t>(round - 1)].evaluation = result;
  return result;
}

void Session::cancel() {
  cancel_ = true;
  channel_->interrupt();
}

void Session::finish() {
  std::lock_guard lock(mu_);
  if (active_) throw Error(ErrorCode::RoundInProgress, "cannot finish while a round is running");
  if (closed_) return;
  closed_ = true;
  blackboard_.close();
  agents_.release_all();
  trace_.append(events::kSessionEnd, static_cast<int>(rounds_.size()), Json{{"rounds", rounds_.size()}});
}

}  // namespace agentos
