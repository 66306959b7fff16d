// Command-line front end: data preparation, training, evaluation, surfacing
// and the triage server.

#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "safetriage/corpus.hpp"
#include "safetriage/error.hpp"
#include "safetriage/evaluation.hpp"
#include "safetriage/service.hpp"
#include "safetriage/synthetic.hpp"
#include "safetriage/workflow.hpp"

using namespace safetriage;
namespace fs = std::filesystem;

namespace {

template <typename T>
void report_skipped(const LoadResult<T>& r, const fs::path& path) {
  std::cerr << path.string() << ": " << r.records.size() << " records";
  if (r.skipped > 0) std::cerr << ", " << r.skipped << " malformed lines skipped";
  std::cerr << '\n';
}

void write_json(const nlohmann::json& j, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream f(out);
  if (!f) throw IngestError("cannot write " + out);
  f << j.dump(2) << '\n';
}

void emit_documents(const std::vector<Document>& docs, const std::string& out) {
  if (out.empty() || out == "-") write_documents(std::cout, docs);
  else write_documents(fs::path(out), docs);
}

SmokeList load_smoke(const std::vector<std::string>& paths) {
  if (paths.empty()) return SmokeList::load(fs::path(SAFETRIAGE_DATA_DIR) / "smoke" / "hazard_words.txt");
  auto list = SmokeList::load(paths.front());
  for (std::size_t i = 1; i < paths.size(); ++i) list.merge(SmokeList::load(paths[i]));
  return list;
}

std::string config_hash(const nlohmann::json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

HttpServer* active_server = nullptr;
void on_signal(int) {
  if (active_server) active_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Product-safety review triage"};
  app.require_subcommand(1);

  // ingest
  std::string source_name, in_path, out_path;
  auto* ingest = app.add_subcommand("ingest", "Load one source's records and write normalized JSON lines");
  ingest->add_option("--source", source_name, "amazon|saferproducts|cpsc|eu")->required();
  ingest->add_option("--in", in_path)->required();
  ingest->add_option("--out", out_path);

  // join
  std::string reviews_path, recalls_path;
  auto* join = app.add_subcommand("join", "Keep reviews of recalled products written before the recall");
  join->add_option("--reviews", reviews_path)->required();
  join->add_option("--recalls", recalls_path)->required();
  join->add_option("--out", out_path);

  // sample
  std::size_t sample_n = 3333;
  std::uint64_t seed = 1;
  auto* sample = app.add_subcommand("sample", "Uniform random subset");
  sample->add_option("--in", in_path)->required();
  sample->add_option("--n", sample_n)->capture_default_str();
  sample->add_option("--seed", seed)->capture_default_str();
  sample->add_option("--out", out_path);

  // merge
  std::vector<std::string> parts;
  auto* merge = app.add_subcommand("merge", "Concatenate document files, rejecting duplicate ids");
  merge->add_option("--in", parts)->required();
  merge->add_option("--out", out_path);

  // preprocess
  std::string lexicon_path;
  auto* prep = app.add_subcommand("preprocess", "Tokenize, drop non-English words and stem");
  prep->add_option("--in", in_path)->required();
  prep->add_option("--lexicon", lexicon_path);
  prep->add_option("--out", out_path);

  // train
  std::string family_name = "lr", train_path;
  std::vector<std::string> smoke_paths;
  PipelineConfig pc;
  auto* train_cmd = app.add_subcommand("train", "Fit the feature pipeline and a classifier");
  train_cmd->add_option("--model", family_name, "lr|svm|nb|rf|knn|ensemble")->capture_default_str();
  train_cmd->add_option("--train", train_path)->required();
  train_cmd->add_option("--out", out_path)->required();
  train_cmd->add_option("--select-k", pc.select_k)->capture_default_str();
  train_cmd->add_option("--min-df", pc.min_df)->capture_default_str();
  train_cmd->add_option("--dim", pc.embedding.dimension)->capture_default_str();
  train_cmd->add_option("--epochs", pc.embedding.epochs)->capture_default_str();
  train_cmd->add_option("--lexicon", lexicon_path);
  train_cmd->add_option("--smoke", smoke_paths);
  train_cmd->add_option("--seed", seed)->capture_default_str();

  // evaluate
  std::string model_path, data_path;
  std::size_t folds = 5;
  auto* evaluate = app.add_subcommand("evaluate", "Cross-validate a model's configuration on labeled data");
  evaluate->add_option("--model", model_path)->required();
  evaluate->add_option("--data", data_path)->required();
  evaluate->add_option("--folds", folds)->capture_default_str();
  evaluate->add_option("--seed", seed)->capture_default_str();
  evaluate->add_option("--out", out_path);

  // surface
  std::string pool_path;
  std::size_t k = 50;
  auto* surface = app.add_subcommand("surface", "Top and bottom scored documents as a labeling worksheet");
  surface->add_option("--model", model_path)->required();
  surface->add_option("--pool", pool_path)->required();
  surface->add_option("--k", k)->capture_default_str();
  surface->add_option("--out", out_path);

  // serve
  std::string host = "127.0.0.1", data_dir;
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Run the triage HTTP service");
  serve->add_option("--model", model_path);
  serve->add_option("--train", train_path, "labeled base data for retraining");
  serve->add_option("--pool", pool_path, "unlabeled documents to queue");
  serve->add_option("--data-dir", data_dir);
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--smoke", smoke_paths);
  serve->add_option("--lexicon", lexicon_path);
  serve->add_option("--seed", seed)->capture_default_str();

  // synth
  SyntheticConfig sc;
  std::string truth_path;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled review corpus");
  synth->add_option("--n", sc.documents)->capture_default_str();
  synth->add_option("--prevalence", sc.prevalence)->capture_default_str();
  synth->add_option("--noise", sc.label_noise)->capture_default_str();
  synth->add_option("--seed", sc.seed)->capture_default_str();
  synth->add_option("--prefix", sc.id_prefix)->capture_default_str();
  synth->add_option("--out", out_path);
  synth->add_option("--truth-out", truth_path, "JSON lines of {id, truth}");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      const auto r = load_documents(in_path, parse_source(source_name));
      report_skipped(r, in_path);
      emit_documents(r.records, out_path);
    } else if (*join) {
      const auto reviews = load_corpus(reviews_path);
      const auto recalls = load_recalls(recalls_path);
      const auto r = join_pre_recall(reviews.records, recalls.records);
      std::cerr << r.documents.size() << " retained, " << r.missing_upc_or_date << " missing UPC or date, "
                << r.unmatched << " not before a matching recall\n";
      emit_documents(r.documents, out_path);
    } else if (*sample) {
      emit_documents(downsample(load_corpus(in_path).records, sample_n, seed), out_path);
    } else if (*merge) {
      std::vector<std::vector<Document>> loaded;
      for (const auto& p : parts) loaded.push_back(load_corpus(p).records);
      const auto r = merge_training_set(loaded);
      nlohmann::json counts;
      for (const auto& [s, n] : r.summary.per_source) counts["per_source"][std::string(to_string(s))] = n;
      for (const auto& [l, n] : r.summary.per_label) counts["per_label"][std::string(to_string(l))] = n;
      counts["total"] = r.documents.size();
      std::cerr << counts.dump() << '\n';
      emit_documents(r.documents, out_path);
    } else if (*prep) {
      PipelineConfig cfg;
      cfg.lexicon_path = lexicon_path;
      const auto lexicon = load_lexicon(cfg);
      const auto docs = load_corpus(in_path).records;
      std::ofstream file;
      if (!out_path.empty() && out_path != "-") file.open(out_path);
      std::ostream& out = file.is_open() ? file : std::cout;
      for (const auto& d : docs) {
        const auto t = preprocess(d.text, *lexicon, d.id);
        out << nlohmann::json{{"id", t.source_id}, {"tokens", t.tokens}}.dump() << '\n';
      }
    } else if (*train_cmd) {
      TrainConfig tc;
      tc.pipeline = pc;
      tc.pipeline.lexicon_path = lexicon_path;
      tc.spec.family = parse_family(family_name);
      tc.master_seed = seed;
      const auto docs = load_corpus(train_path).records;
      const auto bundle = train_bundle(docs, tc, load_lexicon(tc.pipeline), load_smoke(smoke_paths));
      bundle.save(out_path);
      std::cerr << "trained " << to_string(tc.spec.family) << " on " << docs.size() << " documents, "
                << bundle.pipeline.width() << " features, threshold " << bundle.model.threshold() << '\n';
    } else if (*evaluate) {
      const auto bundle = ModelBundle::load(model_path);
      const auto docs = load_corpus(data_path).records;
      Labels amazon;
      for (const auto& d : docs) {
        if (d.source == Source::AmazonReview) amazon.push_back(label_value(d));
      }
      const auto plan = make_fold_plan(amazon, folds, seed);
      const auto report = cross_validate(bundle.model.spec(), docs, plan, bundle.pipeline.config(),
                                         std::make_shared<const Lexicon>(bundle.pipeline.lexicon()),
                                         bundle.pipeline.smoke());
      auto j = report.to_json();
      j["run"] = {{"fold_seed", seed},
                  {"master_seed", bundle.master_seed},
                  {"family", to_string(bundle.model.spec().family)},
                  {"config_hash", config_hash({bundle.pipeline.config().to_json(), bundle.model.spec().to_json()})}};
      write_json(j, out_path);
    } else if (*surface) {
      const auto bundle = ModelBundle::load(model_path);
      const auto pool = load_corpus(pool_path).records;
      const auto sets = top_bottom_review(bundle.score_documents(pool), k);
      if (out_path.empty() || out_path == "-") write_worksheet(std::cout, sets);
      else write_worksheet(fs::path(out_path), sets);
    } else if (*serve) {
      ServiceConfig cfg;
      cfg.train.master_seed = seed;
      cfg.train.pipeline.lexicon_path = lexicon_path;
      if (!train_path.empty()) cfg.base_training = load_corpus(train_path).records;
      if (!smoke_paths.empty()) cfg.smoke = load_smoke(smoke_paths);
      if (!data_dir.empty()) cfg.data_dir = data_dir;
      cfg.lexicon = load_lexicon(cfg.train.pipeline);
      TriageService service(cfg);
      if (!model_path.empty()) service.install_model(ModelBundle::load(model_path, cfg.lexicon));
      if (!pool_path.empty()) service.add_documents(load_corpus(pool_path).records);
      HttpServer server(service);
      const int bound = server.bind(host, port);
      active_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on " << host << ":" << bound << '\n';
      server.listen_after_bind();
      active_server = nullptr;
    } else if (*synth) {
      const auto corpus = generate_corpus(sc);
      emit_documents(corpus.docs, out_path);
      if (!truth_path.empty()) {
        std::ofstream t(truth_path);
        for (std::size_t i = 0; i < corpus.docs.size(); ++i) {
          t << nlohmann::json{{"id", corpus.docs[i].id}, {"truth", corpus.truth[i]}}.dump() << '\n';
        }
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
