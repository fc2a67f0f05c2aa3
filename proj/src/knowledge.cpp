#include "agentos/knowledge.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>

#include "agentos/trace.hpp"

namespace agentos::knowledge {

void to_json(Json& j, const HelpDoc& v) {
  j = Json{{"app_id", v.app_id}, {"request", v.request}, {"guidance", v.guidance}, {"version", v.version}};
}

void from_json(const Json& j, HelpDoc& v) {
  v.app_id = j.at("app_id").get<std::string>();
  v.request = j.at("request").get<std::string>();
  v.guidance = j.value("guidance", "");
  v.version = j.value("version", "1");
}

void to_json(Json& j, const ExperienceRecord& v) {
  j = Json{{"app_id", v.app_id},
           {"task_signature", v.task_signature},
           {"plan", v.plan},
           {"outcome", v.outcome},
           {"source_session", v.source_session}};
}

void from_json(const Json& j, ExperienceRecord& v) {
  v.app_id = j.at("app_id").get<std::string>();
  v.task_signature = j.at("task_signature").get<std::string>();
  v.plan = j.value("plan", std::vector<std::string>{});
  v.outcome = j.value("outcome", true);
  v.source_session = j.value("source_session", "");
}

void to_json(Json& j, const Retrieval& v) {
  Json docs = Json::array();
  for (const auto& d : v.docs) docs.push_back(Json{{"doc", d.doc}, {"score", d.score}});
  Json examples = Json::array();
  for (const auto& e : v.examples) examples.push_back(Json{{"record", e.record}, {"score", e.score}});
  j = Json{{"docs", docs}, {"examples", examples}};
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

void normalize(std::vector<double>& v) {
  const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
  if (norm > 0.0) {
    for (auto& x : v) x /= norm;
  }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  const auto n = std::min(a.size(), b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

/// Indices of the top-k scores; ties keep the lower ingestion order.
template <typename Entry>
std::vector<std::size_t> top_k(const std::vector<Entry>& entries, const std::vector<double>& scores, std::size_t k) {
  std::vector<std::size_t> idx(entries.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return entries[a].order < entries[b].order;
  };
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), better);
  idx.resize(k);
  return idx;
}

}  // namespace

std::vector<double> HashingEmbedder::embed(std::string_view text) const {
  std::vector<double> v(dim_, 0.0);
  for (const auto& tok : tokenize(text)) v[fnv1a(tok) % dim_] += 1.0;
  normalize(v);
  return v;
}

HttpEmbedder::HttpEmbedder(std::string base_url, std::string path, int timeout_seconds)
    : base_url_(std::move(base_url)), path_(std::move(path)), timeout_seconds_(timeout_seconds) {}

std::vector<double> HttpEmbedder::embed(std::string_view text) const {
  httplib::Client client(base_url_);
  client.set_connection_timeout(timeout_seconds_);
  client.set_read_timeout(timeout_seconds_);
  auto res = client.Post(path_, Json{{"input", std::string(text)}}.dump(), "application/json");
  if (!res || res->status != 200) {
    throw Error(ErrorCode::BackendUnavailable, "embedding service unavailable");
  }
  try {
    auto v = Json::parse(res->body).at("embedding").get<std::vector<double>>();
    normalize(v);
    return v;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("embedding response: ") + e.what());
  }
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

// ---------------------------------------------------------------------------

KnowledgeStore::KnowledgeStore(std::shared_ptr<const Embedder> embedder) : embedder_(std::move(embedder)) {}

IngestStats KnowledgeStore::ingest_docs(const std::vector<HelpDoc>& records) {
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].request.empty()) {
      throw Error(ErrorCode::MalformedRecord, "help doc " + std::to_string(i) + " has an empty request");
    }
    if (records[i].app_id.empty()) {
      throw Error(ErrorCode::MalformedRecord, "help doc " + std::to_string(i) + " has no app_id");
    }
  }
  std::vector<std::vector<double>> vecs;
  vecs.reserve(records.size());
  for (const auto& r : records) vecs.push_back(embedder_->embed(r.request));

  std::unique_lock lock(mu_);
  for (std::size_t i = 0; i < records.size(); ++i) {
    apps_[records[i].app_id].docs.push_back(DocEntry{records[i], std::move(vecs[i]), next_order_++});
  }
  IngestStats stats{records.size(), 0};
  for (const auto& [id, idx] : apps_) stats.total += idx.docs.size();
  return stats;
}

IngestStats KnowledgeStore::add_experience(const std::vector<ExperienceRecord>& records) {
  for (const auto& r : records) {
    if (!r.outcome) throw Error(ErrorCode::MalformedRecord, "only successful trajectories are admitted");
    if (r.task_signature.empty() || r.app_id.empty()) {
      throw Error(ErrorCode::MalformedRecord, "experience record needs app_id and task_signature");
    }
  }
  std::vector<std::vector<double>> vecs;
  for (const auto& r : records) vecs.push_back(embedder_->embed(r.task_signature));

  std::unique_lock lock(mu_);
  for (std::size_t i = 0; i < records.size(); ++i) {
    apps_[records[i].app_id].experiences.push_back(ExperienceEntry{records[i], std::move(vecs[i]), next_order_++});
  }
  IngestStats stats{records.size(), 0};
  for (const auto& [id, idx] : apps_) stats.total += idx.experiences.size();
  return stats;
}

Retrieval KnowledgeStore::retrieve(const std::string& app_id, std::string_view query, std::size_t k_docs,
                                   std::size_t k_exp) const {
  Retrieval out;
  const auto q = embedder_->embed(query);

  std::shared_lock lock(mu_);
  auto it = apps_.find(app_id);
  if (it == apps_.end()) return out;
  const auto& index = it->second;

  // Latest ingestion wins per request; superseded versions score -inf.
  std::map<std::string, std::uint64_t> latest;
  for (const auto& d : index.docs) latest[d.doc.request] = std::max(latest[d.doc.request], d.order);

  std::vector<double> doc_scores;
  std::size_t live = 0;
  for (const auto& d : index.docs) {
    const bool current = latest[d.doc.request] == d.order;
    live += current ? 1 : 0;
    doc_scores.push_back(current ? cosine(q, d.vec) : -INFINITY);
  }
  for (auto i : top_k(index.docs, doc_scores, std::min(k_docs, live))) {
    out.docs.push_back(ScoredDoc{index.docs[i].doc, doc_scores[i]});
  }

  std::vector<double> exp_scores;
  for (const auto& e : index.experiences) exp_scores.push_back(cosine(q, e.vec));
  for (auto i : top_k(index.experiences, exp_scores, k_exp)) {
    out.examples.push_back(ScoredExperience{index.experiences[i].record, exp_scores[i]});
  }
  return out;
}

std::size_t KnowledgeStore::doc_count() const {
  std::shared_lock lock(mu_);
  std::size_t n = 0;
  for (const auto& [id, idx] : apps_) n += idx.docs.size();
  return n;
}

std::size_t KnowledgeStore::experience_count() const {
  std::shared_lock lock(mu_);
  std::size_t n = 0;
  for (const auto& [id, idx] : apps_) n += idx.experiences.size();
  return n;
}

void KnowledgeStore::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::shared_lock lock(mu_);
  for (const auto& [app_id, idx] : apps_) {
    Json docs = Json::array();
    for (const auto& d : idx.docs) docs.push_back(Json{{"record", d.doc}, {"vector", d.vec}, {"order", d.order}});
    Json exps = Json::array();
    for (const auto& e : idx.experiences) {
      exps.push_back(Json{{"record", e.record}, {"vector", e.vec}, {"order", e.order}});
    }
    std::ofstream out(dir / (app_id + ".index.json"));
    if (!out) throw Error(ErrorCode::IoError, "cannot write index for " + app_id);
    out << Json{{"app_id", app_id}, {"docs", docs}, {"experiences", exps}}.dump(1);
  }
}

std::shared_ptr<KnowledgeStore> KnowledgeStore::load(const std::filesystem::path& dir,
                                                     std::shared_ptr<const Embedder> embedder) {
  auto loaded = std::make_shared<KnowledgeStore>(std::move(embedder));
  auto& store = *loaded;
  if (!std::filesystem::is_directory(dir)) return loaded;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.size() > 11 && name.ends_with(".index.json")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::ifstream in(f);
    const auto j = Json::parse(in);
    auto& idx = store.apps_[j.at("app_id").get<std::string>()];
    for (const auto& d : j.value("docs", Json::array())) {
      idx.docs.push_back(DocEntry{d.at("record").get<HelpDoc>(), d.at("vector").get<std::vector<double>>(),
                                  d.at("order").get<std::uint64_t>()});
    }
    for (const auto& e : j.value("experiences", Json::array())) {
      idx.experiences.push_back(ExperienceEntry{e.at("record").get<ExperienceRecord>(),
                                                e.at("vector").get<std::vector<double>>(),
                                                e.at("order").get<std::uint64_t>()});
    }
  }
  for (const auto& [id, idx] : store.apps_) {
    for (const auto& d : idx.docs) store.next_order_ = std::max(store.next_order_, d.order + 1);
    for (const auto& e : idx.experiences) store.next_order_ = std::max(store.next_order_, e.order + 1);
  }
  return loaded;
}

std::vector<HelpDoc> KnowledgeStore::read_docs_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::IoError, "docs directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<HelpDoc> docs;
  for (const auto& f : files) {
    std::ifstream in(f);
    try {
      const auto j = Json::parse(in);
      if (j.is_array()) {
        for (const auto& d : j) docs.push_back(d.get<HelpDoc>());
      } else {
        docs.push_back(j.get<HelpDoc>());
      }
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::MalformedRecord, f.string() + ": " + e.what());
    }
  }
  return docs;
}

// ---------------------------------------------------------------------------

std::vector<ExperienceRecord> distill(const std::vector<TraceEvent>& trace) {
  struct RoundFacts {
    std::string request;
    std::string session;
    std::string app_id;
    std::vector<std::string> plan;
    bool success = false;
  };
  std::map<int, RoundFacts> rounds;
  for (const auto& ev : trace) {
    if (ev.kind == events::kRoundStart) {
      auto& r = rounds[ev.round];
      r.request = ev.payload.value("request", "");
      r.session = ev.session;
    } else if (ev.kind == events::kAction) {
      const auto outcome = ev.payload.at("outcome").get<ActionOutcome>();
      if (!outcome.ok()) continue;
      auto& r = rounds[ev.round];
      if (r.app_id.empty()) r.app_id = ev.payload.value("app", "");
      r.plan.push_back(ev.payload.at("action").get<PlannedAction>().describe());
    } else if (ev.kind == events::kEvaluation) {
      rounds[ev.round].success = ev.payload.value("verdict", "") == "success";
    }
  }
  std::vector<ExperienceRecord> out;
  for (const auto& [index, r] : rounds) {
    if (!r.success || r.request.empty() || r.app_id.empty()) continue;
    out.push_back(ExperienceRecord{r.app_id, r.request, r.plan, true, r.session});
  }
  return out;
}

}  // namespace agentos::knowledge
