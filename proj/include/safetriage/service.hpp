#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "safetriage/workflow.hpp"

namespace httplib {
class Server;
}

namespace safetriage {

enum class Verdict { Pending, TruePositive, FalsePositive, Invalid };

std::string_view to_string(Verdict v);
/// Accepts pending, true_positive, false_positive, invalid. Throws InputError.
Verdict parse_verdict(std::string_view name);

struct TriageItem {
  std::string doc_id;
  std::string text;
  double model_score = 0.0;
  std::uint64_t model_version = 0;  // 0 = not scored yet
  std::string surfaced_at;
  Verdict verdict = Verdict::Pending;
  std::optional<std::string> verdict_by;

  nlohmann::json to_json() const;
};

struct FeedbackRecord {
  std::string doc_id;
  Verdict verdict = Verdict::Pending;
  std::string rater;
  std::string timestamp;

  bool operator==(const FeedbackRecord&) const = default;
  nlohmann::json to_json() const;
  static FeedbackRecord from_json(const nlohmann::json& j);
};

/// doc id -> (verdict, rater)
using VerdictState = std::map<std::string, std::pair<Verdict, std::string>>;

/// Append-only verdict log, optionally backed by a JSON-lines file.
class FeedbackStore {
 public:
  FeedbackStore() = default;
  /// Opens (creating if needed) the log file and loads its records.
  explicit FeedbackStore(std::filesystem::path path);

  void append(const FeedbackRecord& record);
  const std::vector<FeedbackRecord>& records() const { return records_; }
  const std::optional<std::filesystem::path>& path() const { return path_; }

  /// Reads a log file. Blank lines are skipped; a malformed line throws
  /// FormatError.
  static std::vector<FeedbackRecord> read_log(const std::filesystem::path& path);
  /// Verdict state implied by a sequence of records. A later record for an
  /// already verdicted document throws ConflictError unless it repeats it.
  static VerdictState replay(const std::vector<FeedbackRecord>& records);

 private:
  std::optional<std::filesystem::path> path_;
  std::vector<FeedbackRecord> records_;
};

struct ServiceConfig {
  TrainConfig train;
  /// Labeled documents every retrain starts from.
  std::vector<Document> base_training;
  std::shared_ptr<const Lexicon> lexicon;
  std::optional<SmokeList> smoke;
  /// When set: documents.jsonl, feedback.jsonl and models/ live here.
  std::optional<std::filesystem::path> data_dir;
  /// ISO-8601 timestamps; replaceable for tests.
  std::function<std::string()> clock;
};

struct VerdictAck {
  FeedbackRecord record;
  bool already_recorded = false;
  nlohmann::json to_json() const;
};

struct RetrainResult {
  bool trained = false;
  std::string status;  // "trained" or "nothing to train"
  std::uint64_t version = 0;
  std::size_t new_verdicts = 0;
  std::size_t training_size = 0;
  nlohmann::json to_json() const;
};

struct ServiceMetrics {
  std::uint64_t model_version = 0;
  std::size_t pending = 0;
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t invalid = 0;
  std::optional<double> precision_to_date;  // TP / (TP + FP)
  std::optional<double> model_threshold;
  nlohmann::json to_json() const;
};

struct ScoreResult {
  double score = 0.0;
  std::uint64_t model_version = 0;
};

/// Scored triage queue with verdict capture and feedback retraining. All
/// public methods are safe to call concurrently.
class TriageService {
 public:
  explicit TriageService(ServiceConfig config);
  ~TriageService();
  TriageService(const TriageService&) = delete;
  TriageService& operator=(const TriageService&) = delete;

  /// Installs a model as the next version and rescores pending items.
  std::uint64_t install_model(ModelBundle bundle);
  std::uint64_t model_version() const;
  std::vector<std::uint64_t> retained_versions() const;

  /// Adds unlabeled documents; ids already present are skipped. Returns the
  /// number added.
  std::size_t add_documents(const std::vector<Document>& docs);

  /// Up to `limit` pending items, score descending then id ascending.
  /// Throws UnavailableError without a model.
  std::vector<TriageItem> get_queue(std::size_t limit, std::optional<double> min_score = std::nullopt) const;

  /// Throws NotFoundError for an unknown id, ConflictError when a different
  /// verdict is already stored, InputError for a Pending verdict or an empty
  /// rater.
  VerdictAck submit_verdict(const std::string& doc_id, Verdict verdict, const std::string& rater);

  /// Synchronous retrain on base data plus verdicts. Throws ConflictError when
  /// another retrain is running; on failure the serving model is unchanged.
  RetrainResult retrain();

  /// Background retrain. Returns the immediate result: "nothing to train",
  /// or "started" with the version the job will produce. Throws
  /// ConflictError when one is already running.
  RetrainResult start_retrain();
  /// State of the last background job: idle, running, succeeded or failed.
  nlohmann::json retrain_status() const;
  void wait_for_retrain();

  ScoreResult score_text(const std::string& text) const;
  ServiceMetrics metrics() const;
  std::optional<TriageItem> item(const std::string& doc_id) const;
  VerdictState verdict_state() const;
  const FeedbackStore& feedback() const { return feedback_; }

 private:
  struct Entry {
    Document doc;
    TriageItem item;
  };

  std::shared_ptr<const ModelBundle> current_model() const;
  RetrainResult retrain_locked();
  std::uint64_t swap_model(std::shared_ptr<const ModelBundle> bundle);
  void rescore_stale();
  std::vector<Document> training_set() const;
  std::size_t new_verdicts() const;
  void apply_record(const FeedbackRecord& r);
  std::string now() const;

  ServiceConfig config_;
  mutable std::mutex mutex_;  // guards everything below except retrain_mutex_
  std::map<std::string, Entry> items_;
  FeedbackStore feedback_;
  std::shared_ptr<const ModelBundle> model_;
  std::uint64_t version_ = 0;
  std::map<std::uint64_t, std::shared_ptr<const ModelBundle>> history_;
  std::size_t verdicts_at_last_train_ = 0;

  std::mutex retrain_mutex_;  // held for the whole of a retrain or install
  std::mutex worker_mutex_;   // guards worker_
  std::thread worker_;
  nlohmann::json job_ = {{"state", "idle"}};
};

/// JSON-over-HTTP front end for a TriageService.
class HttpServer {
 public:
  explicit HttpServer(TriageService& service);
  ~HttpServer();
  /// Binds to host:port (port 0 picks a free one) and returns the port.
  int bind(const std::string& host, int port);
  /// Serves until stop(); blocks.
  void listen_after_bind();
  void stop();

 private:
  TriageService& service_;
  std::unique_ptr<httplib::Server> server_;
};

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

}  // namespace safetriage
