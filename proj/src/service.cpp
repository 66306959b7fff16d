#include "safetriage/service.hpp"

#include <algorithm>
#include <ctime>
#include <fstream>
#include <set>

#include <httplib.h>

#include "safetriage/error.hpp"

namespace safetriage {

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Pending: return "pending";
    case Verdict::TruePositive: return "true_positive";
    case Verdict::FalsePositive: return "false_positive";
    case Verdict::Invalid: return "invalid";
  }
  return "?";
}

Verdict parse_verdict(std::string_view name) {
  for (auto v : {Verdict::Pending, Verdict::TruePositive, Verdict::FalsePositive, Verdict::Invalid}) {
    if (to_string(v) == name) return v;
  }
  throw InputError("unknown verdict '" + std::string(name) + "'");
}

std::string utc_timestamp() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json TriageItem::to_json() const {
  nlohmann::json j = {{"doc_id", doc_id},       {"text", text},
                      {"model_score", model_score}, {"model_version", model_version},
                      {"surfaced_at", surfaced_at}, {"verdict", to_string(verdict)}};
  j["verdict_by"] = verdict_by ? nlohmann::json(*verdict_by) : nlohmann::json();
  return j;
}

nlohmann::json FeedbackRecord::to_json() const {
  return {{"doc_id", doc_id}, {"verdict", to_string(verdict)}, {"rater", rater}, {"timestamp", timestamp}};
}

FeedbackRecord FeedbackRecord::from_json(const nlohmann::json& j) {
  return {j.at("doc_id").get<std::string>(), parse_verdict(j.at("verdict").get<std::string>()),
          j.at("rater").get<std::string>(), j.at("timestamp").get<std::string>()};
}

FeedbackStore::FeedbackStore(std::filesystem::path path) : path_(std::move(path)) {
  if (std::filesystem::exists(*path_)) records_ = read_log(*path_);
  std::ofstream touch(*path_, std::ios::app);
  if (!touch) throw IngestError("cannot open feedback log " + path_->string());
}

void FeedbackStore::append(const FeedbackRecord& record) {
  if (path_) {
    std::ofstream out(*path_, std::ios::app);
    out << record.to_json().dump() << '\n';
    out.flush();
    if (!out) throw IngestError("failed appending to feedback log " + path_->string());
  }
  records_.push_back(record);
}

std::vector<FeedbackRecord> FeedbackStore::read_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot read feedback log " + path.string());
  std::vector<FeedbackRecord> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(FeedbackRecord::from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("feedback log line " + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

VerdictState FeedbackStore::replay(const std::vector<FeedbackRecord>& records) {
  VerdictState state;
  for (const auto& r : records) {
    if (r.verdict == Verdict::Pending) throw FormatError("log holds a pending verdict for " + r.doc_id);
    auto [it, inserted] = state.try_emplace(r.doc_id, r.verdict, r.rater);
    if (!inserted && it->second.first != r.verdict) throw ConflictError("conflicting verdicts for " + r.doc_id);
  }
  return state;
}

nlohmann::json VerdictAck::to_json() const {
  auto j = record.to_json();
  j["already_recorded"] = already_recorded;
  return j;
}

nlohmann::json RetrainResult::to_json() const {
  return {{"trained", trained}, {"status", status}, {"version", version}, {"new_verdicts", new_verdicts},
          {"training_size", training_size}};
}

nlohmann::json ServiceMetrics::to_json() const {
  nlohmann::json j = {{"model_version", model_version}, {"pending", pending}, {"true_positive", true_positive},
                      {"false_positive", false_positive}, {"invalid", invalid}};
  j["precision_to_date"] = precision_to_date ? nlohmann::json(*precision_to_date) : nlohmann::json();
  j["model_threshold"] = model_threshold ? nlohmann::json(*model_threshold) : nlohmann::json();
  return j;
}

TriageService::TriageService(ServiceConfig config) : config_(std::move(config)) {
  if (!config_.clock) config_.clock = utc_timestamp;
  if (!config_.lexicon) config_.lexicon = load_lexicon(config_.train.pipeline);
  if (!config_.data_dir) return;

  const auto& dir = *config_.data_dir;
  std::filesystem::create_directories(dir / "models");
  if (std::ifstream in(dir / "documents.jsonl"); in) {
    std::string line;
    while (std::getline(in, line)) {
      if (auto doc = parse_document_line(line, std::nullopt)) {
        Entry e{*doc, {doc->id, doc->text, 0.0, 0, now(), Verdict::Pending, std::nullopt}};
        items_.emplace(doc->id, std::move(e));
      }
    }
  }
  feedback_ = FeedbackStore(dir / "feedback.jsonl");
  FeedbackStore::replay(feedback_.records());
  for (const auto& r : feedback_.records()) apply_record(r);
}

TriageService::~TriageService() {
  std::lock_guard guard(worker_mutex_);
  if (worker_.joinable()) worker_.join();
}

std::string TriageService::now() const { return config_.clock(); }

void TriageService::apply_record(const FeedbackRecord& r) {
  auto it = items_.find(r.doc_id);
  if (it == items_.end()) return;
  it->second.item.verdict = r.verdict;
  it->second.item.verdict_by = r.rater;
}

std::shared_ptr<const ModelBundle> TriageService::current_model() const {
  std::lock_guard lock(mutex_);
  return model_;
}

std::uint64_t TriageService::model_version() const {
  std::lock_guard lock(mutex_);
  return version_;
}

std::vector<std::uint64_t> TriageService::retained_versions() const {
  std::lock_guard lock(mutex_);
  std::vector<std::uint64_t> out;
  for (const auto& [v, _] : history_) out.push_back(v);
  return out;
}

std::uint64_t TriageService::swap_model(std::shared_ptr<const ModelBundle> bundle) {
  std::uint64_t v;
  {
    std::lock_guard lock(mutex_);
    v = version_ + 1;
  }
  if (config_.data_dir) bundle->save(*config_.data_dir / "models" / ("v" + std::to_string(v) + ".json"));
  {
    std::lock_guard lock(mutex_);
    version_ = v;
    model_ = bundle;
    history_[v] = std::move(bundle);
  }
  rescore_stale();
  return v;
}

std::uint64_t TriageService::install_model(ModelBundle bundle) {
  std::lock_guard guard(retrain_mutex_);
  return swap_model(std::make_shared<const ModelBundle>(std::move(bundle)));
}

void TriageService::rescore_stale() {
  for (;;) {
    std::shared_ptr<const ModelBundle> model;
    std::uint64_t version;
    std::vector<Document> stale;
    {
      std::lock_guard lock(mutex_);
      model = model_;
      version = version_;
      for (const auto& [id, e] : items_) {
        if (e.item.verdict == Verdict::Pending && e.item.model_version != version) stale.push_back(e.doc);
      }
    }
    if (!model || stale.empty()) return;
    const auto scores = model->score(stale);
    std::lock_guard lock(mutex_);
    if (version_ != version) continue;
    for (std::size_t i = 0; i < stale.size(); ++i) {
      auto& item = items_.at(stale[i].id).item;
      if (item.verdict != Verdict::Pending) continue;
      item.model_score = scores[i];
      item.model_version = version;
    }
    return;
  }
}

std::size_t TriageService::add_documents(const std::vector<Document>& docs) {
  std::vector<Document> fresh;
  {
    std::lock_guard lock(mutex_);
    std::set<std::string> seen;
    for (const auto& d : docs) {
      if (!items_.contains(d.id) && seen.insert(d.id).second) fresh.push_back(d);
    }
  }
  if (fresh.empty()) return 0;
  for (auto& d : fresh) d.label = Label::Unlabeled;

  std::size_t added = 0;
  {
    std::lock_guard lock(mutex_);
    std::ofstream log;
    if (config_.data_dir) log.open(*config_.data_dir / "documents.jsonl", std::ios::app);
    const auto stamp = now();
    for (const auto& d : fresh) {
      if (items_.contains(d.id)) continue;
      items_.emplace(d.id, Entry{d, {d.id, d.text, 0.0, 0, stamp, Verdict::Pending, std::nullopt}});
      if (log) write_documents(log, {d});
      ++added;
    }
  }
  rescore_stale();
  return added;
}

std::vector<TriageItem> TriageService::get_queue(std::size_t limit, std::optional<double> min_score) const {
  std::lock_guard lock(mutex_);
  if (!model_) throw UnavailableError("no model is loaded");
  std::vector<TriageItem> out;
  for (const auto& [id, e] : items_) {
    if (e.item.verdict != Verdict::Pending || e.item.model_version == 0) continue;
    if (min_score && e.item.model_score < *min_score) continue;
    out.push_back(e.item);
  }
  std::sort(out.begin(), out.end(), [](const TriageItem& a, const TriageItem& b) {
    return a.model_score != b.model_score ? a.model_score > b.model_score : a.doc_id < b.doc_id;
  });
  if (out.size() > limit) out.resize(limit);
  return out;
}

VerdictAck TriageService::submit_verdict(const std::string& doc_id, Verdict verdict, const std::string& rater) {
  if (verdict == Verdict::Pending) throw InputError("a verdict cannot be pending");
  if (rater.empty()) throw InputError("rater id is required");
  std::lock_guard lock(mutex_);
  auto it = items_.find(doc_id);
  if (it == items_.end()) throw NotFoundError("unknown document '" + doc_id + "'");
  auto& item = it->second.item;
  if (item.verdict != Verdict::Pending) {
    if (item.verdict != verdict) {
      throw ConflictError("document '" + doc_id + "' already has verdict " + std::string(to_string(item.verdict)));
    }
    const auto& recs = feedback_.records();
    auto rec = std::find_if(recs.rbegin(), recs.rend(), [&](const FeedbackRecord& r) { return r.doc_id == doc_id; });
    return {*rec, true};
  }
  FeedbackRecord record{doc_id, verdict, rater, now()};
  feedback_.append(record);
  apply_record(record);
  return {record, false};
}

std::size_t TriageService::new_verdicts() const { return feedback_.records().size() - verdicts_at_last_train_; }

std::vector<Document> TriageService::training_set() const {
  std::map<std::string, Document> fed;
  for (const auto& [id, e] : items_) {
    if (e.item.verdict != Verdict::TruePositive && e.item.verdict != Verdict::FalsePositive) continue;
    Document d = e.doc;
    d.label = e.item.verdict == Verdict::TruePositive ? Label::MentionsSafetyIssue : Label::NoSafetyIssue;
    fed.emplace(id, std::move(d));
  }
  std::vector<Document> out;
  for (const auto& d : config_.base_training) {
    if (!fed.contains(d.id)) out.push_back(d);
  }
  for (auto& [id, d] : fed) out.push_back(std::move(d));
  return out;
}

RetrainResult TriageService::retrain() {
  std::unique_lock guard(retrain_mutex_, std::try_to_lock);
  if (!guard.owns_lock()) throw ConflictError("a retrain is already running");
  return retrain_locked();
}

RetrainResult TriageService::retrain_locked() {
  std::vector<Document> docs;
  std::size_t records, fresh;
  std::shared_ptr<const ModelBundle> model;
  RetrainResult r;
  {
    std::lock_guard lock(mutex_);
    records = feedback_.records().size();
    fresh = new_verdicts();
    r.version = version_;
    model = model_;
    if (fresh > 0) docs = training_set();
  }
  r.new_verdicts = fresh;
  if (fresh == 0) {
    r.status = "nothing to train";
    return r;
  }
  SmokeList smoke;
  if (config_.smoke) smoke = *config_.smoke;
  else if (model) smoke = model->pipeline.smoke();
  else throw TrainingError("no smoke list configured");

  auto bundle = std::make_shared<const ModelBundle>(train_bundle(docs, config_.train, config_.lexicon, smoke));
  r.version = swap_model(std::move(bundle));
  {
    std::lock_guard lock(mutex_);
    verdicts_at_last_train_ = records;
  }
  r.trained = true;
  r.status = "trained";
  r.training_size = docs.size();
  return r;
}

RetrainResult TriageService::start_retrain() {
  std::lock_guard worker_guard(worker_mutex_);
  RetrainResult r;
  {
    std::lock_guard lock(mutex_);
    if (job_.at("state") == "running") throw ConflictError("a retrain is already running");
    r.version = version_;
    r.new_verdicts = new_verdicts();
    if (r.new_verdicts == 0) {
      r.status = "nothing to train";
      return r;
    }
    r.version = version_ + 1;
    r.status = "started";
    job_ = {{"state", "running"}, {"version", r.version}};
  }
  if (worker_.joinable()) worker_.join();
  worker_ = std::thread([this] {
    nlohmann::json done;
    try {
      std::lock_guard guard(retrain_mutex_);
      const auto result = retrain_locked();
      done = {{"state", "succeeded"}, {"version", result.version}, {"result", result.to_json()}};
    } catch (const std::exception& e) {
      done = {{"state", "failed"}, {"error", e.what()}};
    }
    std::lock_guard lock(mutex_);
    job_ = std::move(done);
  });
  return r;
}

nlohmann::json TriageService::retrain_status() const {
  std::lock_guard lock(mutex_);
  return job_;
}

void TriageService::wait_for_retrain() {
  std::lock_guard guard(worker_mutex_);
  if (worker_.joinable()) worker_.join();
}

ScoreResult TriageService::score_text(const std::string& text) const {
  std::shared_ptr<const ModelBundle> model;
  std::uint64_t version;
  {
    std::lock_guard lock(mutex_);
    model = model_;
    version = version_;
  }
  if (!model) throw UnavailableError("no model is loaded");
  Document d;
  d.id = "query";
  d.text = text;
  return {model->score({d})[0], version};
}

ServiceMetrics TriageService::metrics() const {
  std::lock_guard lock(mutex_);
  ServiceMetrics m;
  m.model_version = version_;
  for (const auto& [id, e] : items_) {
    switch (e.item.verdict) {
      case Verdict::Pending: ++m.pending; break;
      case Verdict::TruePositive: ++m.true_positive; break;
      case Verdict::FalsePositive: ++m.false_positive; break;
      case Verdict::Invalid: ++m.invalid; break;
    }
  }
  if (m.true_positive + m.false_positive > 0) {
    m.precision_to_date =
        static_cast<double>(m.true_positive) / static_cast<double>(m.true_positive + m.false_positive);
  }
  if (model_) m.model_threshold = model_->model.threshold();
  return m;
}

std::optional<TriageItem> TriageService::item(const std::string& doc_id) const {
  std::lock_guard lock(mutex_);
  auto it = items_.find(doc_id);
  if (it == items_.end()) return std::nullopt;
  return it->second.item;
}

VerdictState TriageService::verdict_state() const {
  std::lock_guard lock(mutex_);
  VerdictState s;
  for (const auto& [id, e] : items_) {
    if (e.item.verdict != Verdict::Pending) s.emplace(id, std::make_pair(e.item.verdict, *e.item.verdict_by));
  }
  return s;
}

namespace {

int status_for(const std::exception& e) {
  if (dynamic_cast<const NotFoundError*>(&e)) return 404;
  if (dynamic_cast<const ConflictError*>(&e)) return 409;
  if (dynamic_cast<const UnavailableError*>(&e)) return 503;
  if (dynamic_cast<const InputError*>(&e) || dynamic_cast<const ArgumentError*>(&e) ||
      dynamic_cast<const nlohmann::json::exception*>(&e)) {
    return 400;
  }
  return 500;
}

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename F>
httplib::Server::Handler guarded(F&& f) {
  return [f = std::forward<F>(f)](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const std::exception& e) {
      send_json(res, status_for(e), {{"error", e.what()}});
    }
  };
}

std::size_t parse_count(const std::string& text) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &pos);
  } catch (const std::exception&) {
    throw InputError("not an integer: '" + text + "'");
  }
  if (pos != text.size() || v < 0) throw InputError("not a non-negative integer: '" + text + "'");
  return static_cast<std::size_t>(v);
}

double parse_real(const std::string& text) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    throw InputError("not a number: '" + text + "'");
  }
  if (pos != text.size()) throw InputError("not a number: '" + text + "'");
  return v;
}

}  // namespace

HttpServer::HttpServer(TriageService& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto& s = *server_;
  s.Get("/api/v1/queue", guarded([this](const httplib::Request& req, httplib::Response& res) {
          const std::size_t limit = req.has_param("limit") ? parse_count(req.get_param_value("limit")) : 50;
          std::optional<double> min_score;
          if (req.has_param("min_score")) min_score = parse_real(req.get_param_value("min_score"));
          nlohmann::json items = nlohmann::json::array();
          for (const auto& item : service_.get_queue(limit, min_score)) items.push_back(item.to_json());
          send_json(res, 200, items);
        }));
  s.Post("/api/v1/verdicts", guarded([this](const httplib::Request& req, httplib::Response& res) {
           const auto body = nlohmann::json::parse(req.body);
           const auto ack = service_.submit_verdict(body.at("doc_id").get<std::string>(),
                                                    parse_verdict(body.at("verdict").get<std::string>()),
                                                    body.at("rater").get<std::string>());
           send_json(res, 200, ack.to_json());
         }));
  s.Post("/api/v1/retrain", guarded([this](const httplib::Request&, httplib::Response& res) {
           const auto r = service_.start_retrain();
           send_json(res, r.status == "started" ? 202 : 200, r.to_json());
         }));
  s.Get("/api/v1/retrain", guarded([this](const httplib::Request&, httplib::Response& res) {
          send_json(res, 200, service_.retrain_status());
        }));
  s.Get("/api/v1/metrics", guarded([this](const httplib::Request&, httplib::Response& res) {
          send_json(res, 200, service_.metrics().to_json());
        }));
  s.Post("/api/v1/documents", guarded([this](const httplib::Request& req, httplib::Response& res) {
           auto body = nlohmann::json::parse(req.body);
           if (body.is_object()) body = body.at("documents");
           if (!body.is_array()) throw InputError("expected an array of documents");
           std::vector<Document> docs;
           std::size_t rejected = 0;
           for (const auto& d : body) {
             if (auto doc = parse_document_line(d.dump(), Source::AmazonReview)) docs.push_back(*doc);
             else ++rejected;
           }
           const auto added = service_.add_documents(docs);
           send_json(res, 200, {{"added", added}, {"duplicates", docs.size() - added}, {"rejected", rejected}});
         }));
  s.Post("/api/v1/score", guarded([this](const httplib::Request& req, httplib::Response& res) {
           const auto body = nlohmann::json::parse(req.body);
           const auto r = service_.score_text(body.at("text").get<std::string>());
           send_json(res, 200, {{"score", r.score}, {"model_version", r.model_version}});
         }));
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  if (!server_->bind_to_port(host, port)) throw UnavailableError("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::listen_after_bind() { server_->listen_after_bind(); }

void HttpServer::stop() {
  if (server_) server_->stop();
}

}  // namespace safetriage
