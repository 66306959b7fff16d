#include "safetriage/pipeline.hpp"

#include "safetriage/error.hpp"
#include "safetriage/rng.hpp"

namespace safetriage {

nlohmann::json PipelineConfig::to_json() const {
  const auto& e = embedding;
  return {{"min_df", min_df},
          {"select_k", select_k},
          {"seed", seed},
          {"lexicon_path", lexicon_path.string()},
          {"lexicon_inflections", lexicon_inflections},
          {"embedding",
           {{"dimension", e.dimension}, {"epochs", e.epochs}, {"window", e.window}, {"negative", e.negative},
            {"min_count", e.min_count}, {"alpha", e.alpha}, {"min_alpha", e.min_alpha}, {"seed", e.seed}}}};
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
  PipelineConfig c;
  c.min_df = j.at("min_df");
  c.select_k = j.at("select_k");
  c.seed = j.at("seed");
  c.lexicon_path = j.at("lexicon_path").get<std::string>();
  c.lexicon_inflections = j.at("lexicon_inflections");
  const auto& e = j.at("embedding");
  c.embedding = {e.at("dimension"), e.at("epochs"), e.at("window"), e.at("negative"),
                 e.at("min_count"), e.at("alpha"), e.at("min_alpha"), e.at("seed")};
  return c;
}

int label_value(const Document& doc) {
  switch (doc.label) {
    case Label::MentionsSafetyIssue: return 1;
    case Label::NoSafetyIssue: return 0;
    case Label::Unlabeled: break;
  }
  throw DataError("document '" + doc.id + "' has no label");
}

Labels label_values(const std::vector<Document>& docs) {
  Labels y;
  y.reserve(docs.size());
  for (const auto& d : docs) y.push_back(label_value(d));
  return y;
}

std::shared_ptr<const Lexicon> load_lexicon(const PipelineConfig& config) {
  auto path = config.lexicon_path;
  if (path.empty()) path = std::filesystem::path(SAFETRIAGE_DATA_DIR) / "lexicon" / "english.txt";
  return std::make_shared<const Lexicon>(Lexicon::load(path, {config.lexicon_inflections}));
}

namespace {

template <typename F>
void for_each_index(std::size_t n, Execution exec, F&& f) {
  const auto m = static_cast<std::ptrdiff_t>(n);
  if (exec == Execution::Serial) {
    for (std::ptrdiff_t i = 0; i < m; ++i) f(static_cast<std::size_t>(i));
    return;
  }
#pragma omp parallel for schedule(dynamic, 32)
  for (std::ptrdiff_t i = 0; i < m; ++i) f(static_cast<std::size_t>(i));
}

std::vector<TokenSequence> preprocess_all(const std::vector<Document>& docs, const Lexicon& lexicon, Execution exec) {
  std::vector<TokenSequence> out(docs.size());
  for_each_index(docs.size(), exec, [&](std::size_t i) { out[i] = preprocess(docs[i].text, lexicon, docs[i].id); });
  return out;
}

}  // namespace

std::uint64_t FittedPipeline::infer_seed(const TokenSequence& tokens) const {
  return derive_seed(config_.seed, token_hash(tokens));
}

std::vector<TokenSequence> FittedPipeline::preprocess(const std::vector<Document>& docs, Execution exec) const {
  return preprocess_all(docs, *lexicon_, exec);
}

FeatureVector FittedPipeline::features(const Document& doc) const {
  const auto tokens = safetriage::preprocess(doc.text, *lexicon_, doc.id);
  return assemble(doc, tokens, &vocab_, &embedding_, &smoke_, infer_seed(tokens));
}

std::vector<FeatureVector> FittedPipeline::features(const std::vector<Document>& docs, Execution exec) const {
  std::vector<FeatureVector> out(docs.size());
  for_each_index(docs.size(), exec, [&](std::size_t i) { out[i] = features(docs[i]); });
  return out;
}

Matrix FittedPipeline::transform(const std::vector<Document>& docs, Execution exec) const {
  if (mask_.original_width != layout().width()) throw PipelineError("pipeline has no fitted selection mask");
  Matrix out(docs.size(), mask_.width());
  for_each_index(docs.size(), exec, [&](std::size_t i) {
    const auto reduced = apply(mask_, features(docs[i]));
    std::copy(reduced.begin(), reduced.end(), out.row(i).begin());
  });
  return out;
}

FittedPipeline fit_pipeline(const std::vector<Document>& docs, const PipelineConfig& config,
                            std::shared_ptr<const Lexicon> lexicon, SmokeList smoke,
                            const std::vector<Document>* embedding_corpus, Execution exec,
                            Matrix* reduced_training) {
  if (docs.empty()) throw FitError("cannot fit a pipeline on no documents");
  if (!lexicon) throw PipelineError("no lexicon given");
  if (smoke.size() == 0) throw PipelineError("smoke list is empty");
  const auto y = label_values(docs);

  FittedPipeline p;
  p.config_ = config;
  p.lexicon_ = std::move(lexicon);
  p.smoke_ = std::move(smoke);
  const auto tokens = preprocess_all(docs, *p.lexicon_, exec);
  p.vocab_ = fit_tfidf(tokens, config.min_df);
  auto emb_cfg = config.embedding;
  emb_cfg.seed = derive_seed(config.seed, 1);
  p.embedding_ = train_embedding(embedding_corpus ? preprocess_all(*embedding_corpus, *p.lexicon_, exec) : tokens,
                                 emb_cfg);

  std::vector<FeatureVector> x(docs.size());
  for_each_index(docs.size(), exec, [&](std::size_t i) {
    x[i] = assemble(docs[i], tokens[i], &p.vocab_, &p.embedding_, &p.smoke_, p.infer_seed(tokens[i]));
  });
  const auto layout = p.layout();
  const std::uint64_t select_seed = derive_seed(config.seed, 2);
  const auto importances = compute_importance(x, y, select_seed, exec);
  const std::size_t pinned[] = {layout.star_index(), layout.smoke_index()};
  p.mask_ = select(importances, config.select_k, pinned);
  p.mask_.seed = select_seed;
  if (reduced_training) {
    *reduced_training = Matrix(docs.size(), p.mask_.width());
    for_each_index(docs.size(), exec, [&](std::size_t i) {
      const auto r = apply(p.mask_, x[i]);
      std::copy(r.begin(), r.end(), reduced_training->row(i).begin());
    });
  }
  return p;
}

nlohmann::json FittedPipeline::to_json() const {
  return {{"format_version", kPipelineFormatVersion},
          {"config", config_.to_json()},
          {"vocabulary", vocab_.to_json()},
          {"embedding", embedding_.to_json()},
          {"smoke", smoke_.to_json()},
          {"mask", mask_.to_json()}};
}

FittedPipeline FittedPipeline::from_json(const nlohmann::json& j, std::shared_ptr<const Lexicon> lexicon) {
  if (j.at("format_version").get<int>() != kPipelineFormatVersion) {
    throw FormatError("unsupported pipeline format version " + j.at("format_version").dump());
  }
  FittedPipeline p;
  p.config_ = PipelineConfig::from_json(j.at("config"));
  p.vocab_ = TfidfVocabulary::from_json(j.at("vocabulary"));
  p.embedding_ = EmbeddingModel::from_json(j.at("embedding"));
  p.smoke_ = SmokeList::from_json(j.at("smoke"));
  p.mask_ = SelectionMask::from_json(j.at("mask"));
  if (p.mask_.original_width != p.layout().width()) throw FormatError("selection mask width disagrees with features");
  p.lexicon_ = lexicon ? std::move(lexicon) : load_lexicon(p.config_);
  return p;
}

}  // namespace safetriage
