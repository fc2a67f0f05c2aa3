#pragma once

// Retrieval layer over help documents and distilled execution experience.
// Records are embedded once at ingestion; queries rank by cosine similarity
// with ties going to the earlier-ingested record.

#include <filesystem>
#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "agentos/domain.hpp"

namespace agentos {
struct TraceEvent;
}

namespace agentos::knowledge {

inline constexpr std::size_t kDefaultDocBudget = 1;
inline constexpr std::size_t kDefaultExperienceBudget = 3;

struct HelpDoc {
  std::string app_id;
  std::string request;
  std::string guidance;
  std::string version = "1";
};

struct ExperienceRecord {
  std::string app_id;
  std::string task_signature;
  std::vector<std::string> plan;
  bool outcome = true;
  std::string source_session;
};

void to_json(Json& j, const HelpDoc& v);
void from_json(const Json& j, HelpDoc& v);
void to_json(Json& j, const ExperienceRecord& v);
void from_json(const Json& j, ExperienceRecord& v);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<double> embed(std::string_view text) const = 0;
};

/// Lowercased alphanumeric tokens hashed (FNV-1a) into a fixed number of
/// buckets, then L2-normalized.
class HashingEmbedder : public Embedder {
 public:
  explicit HashingEmbedder(std::size_t dim = 256) : dim_(dim) {}
  std::vector<double> embed(std::string_view text) const override;
  std::size_t dim() const { return dim_; }

 private:
  std::size_t dim_;
};

/// Sentence-embedding service: POST <path> {"input": text} -> {"embedding": [...]}.
class HttpEmbedder : public Embedder {
 public:
  HttpEmbedder(std::string base_url, std::string path = "/embed", int timeout_seconds = 10);
  std::vector<double> embed(std::string_view text) const override;

 private:
  std::string base_url_;
  std::string path_;
  int timeout_seconds_;
};

std::vector<std::string> tokenize(std::string_view text);
double cosine(const std::vector<double>& a, const std::vector<double>& b);

struct IngestStats {
  std::size_t added = 0;
  std::size_t total = 0;
};

struct ScoredDoc {
  HelpDoc doc;
  double score = 0.0;
};

struct ScoredExperience {
  ExperienceRecord record;
  double score = 0.0;
};

struct Retrieval {
  std::vector<ScoredDoc> docs;
  std::vector<ScoredExperience> examples;
};

void to_json(Json& j, const Retrieval& v);

class KnowledgeStore {
 public:
  explicit KnowledgeStore(std::shared_ptr<const Embedder> embedder = std::make_shared<HashingEmbedder>());

  /// Throws MalformedRecord (nothing is ingested if any record is invalid).
  IngestStats ingest_docs(const std::vector<HelpDoc>& records);
  /// Only successful trajectories are admitted; throws MalformedRecord otherwise.
  IngestStats add_experience(const std::vector<ExperienceRecord>& records);

  /// A doc re-ingested under the same (app, request) supersedes older versions
  /// at query time; older versions stay in the index.
  Retrieval retrieve(const std::string& app_id, std::string_view query, std::size_t k_docs = kDefaultDocBudget,
                     std::size_t k_exp = kDefaultExperienceBudget) const;

  std::size_t doc_count() const;
  std::size_t experience_count() const;

  /// One flat file per app: <dir>/<app_id>.index.json (records + vectors).
  void save(const std::filesystem::path& dir) const;
  static std::shared_ptr<KnowledgeStore> load(const std::filesystem::path& dir,
                             std::shared_ptr<const Embedder> embedder = std::make_shared<HashingEmbedder>());

  /// Reads every *.json file in `dir`; each holds one HelpDoc or an array of them.
  static std::vector<HelpDoc> read_docs_dir(const std::filesystem::path& dir);

 private:
  struct DocEntry {
    HelpDoc doc;
    std::vector<double> vec;
    std::uint64_t order;
  };
  struct ExperienceEntry {
    ExperienceRecord record;
    std::vector<double> vec;
    std::uint64_t order;
  };
  struct AppIndex {
    std::vector<DocEntry> docs;
    std::vector<ExperienceEntry> experiences;
  };

  std::shared_ptr<const Embedder> embedder_;
  mutable std::shared_mutex mu_;
  std::map<std::string, AppIndex> apps_;
  std::uint64_t next_order_ = 0;
};

/// One record per evaluator-approved round: the round request as the task
/// signature and its executed actions, in order, as the plan.
std::vector<ExperienceRecord> distill(const std::vector<TraceEvent>& trace);

}  // namespace agentos::knowledge
