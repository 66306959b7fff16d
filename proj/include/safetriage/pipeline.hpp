#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include <json.hpp>

#include "safetriage/corpus.hpp"
#include "safetriage/features.hpp"
#include "safetriage/kernels.hpp"
#include "safetriage/selection.hpp"

namespace safetriage {

inline constexpr int kPipelineFormatVersion = 1;

struct PipelineConfig {
  std::size_t min_df = 2;
  EmbeddingConfig embedding;
  std::size_t select_k = 2400;
  std::uint64_t seed = 1;
  std::filesystem::path lexicon_path;
  bool lexicon_inflections = true;

  nlohmann::json to_json() const;
  static PipelineConfig from_json(const nlohmann::json& j);
};

/// Label as a 0/1 class. Throws DataError for unlabeled documents.
int label_value(const Document& doc);
Labels label_values(const std::vector<Document>& docs);

/// Frozen vocabulary, embedding model, smoke list and selection mask.
class FittedPipeline {
 public:
  std::vector<TokenSequence> preprocess(const std::vector<Document>& docs, Execution exec = Execution::Parallel) const;
  FeatureVector features(const Document& doc) const;
  std::vector<FeatureVector> features(const std::vector<Document>& docs, Execution exec = Execution::Parallel) const;
  /// Selected features, one row per document.
  Matrix transform(const std::vector<Document>& docs, Execution exec = Execution::Parallel) const;

  const Lexicon& lexicon() const { return *lexicon_; }
  const TfidfVocabulary& vocabulary() const { return vocab_; }
  const EmbeddingModel& embedding() const { return embedding_; }
  const SmokeList& smoke() const { return smoke_; }
  const SelectionMask& mask() const { return mask_; }
  const PipelineConfig& config() const { return config_; }
  FeatureLayout layout() const { return {vocab_.size(), embedding_.dimension()}; }
  std::size_t width() const { return mask_.width(); }

  /// The lexicon is not embedded; it is reloaded from config().lexicon_path
  /// unless one is passed in.
  nlohmann::json to_json() const;
  static FittedPipeline from_json(const nlohmann::json& j, std::shared_ptr<const Lexicon> lexicon = nullptr);

  friend FittedPipeline fit_pipeline(const std::vector<Document>&, const PipelineConfig&,
                                     std::shared_ptr<const Lexicon>, SmokeList, const std::vector<Document>*,
                                     Execution, Matrix*);

 private:
  std::uint64_t infer_seed(const TokenSequence& tokens) const;

  std::shared_ptr<const Lexicon> lexicon_;
  TfidfVocabulary vocab_;
  EmbeddingModel embedding_;
  SmokeList smoke_;
  SelectionMask mask_;
  PipelineConfig config_;
};

/// Fits TF-IDF and the embedding on `docs` (or on `embedding_corpus` for
/// the embedding when given), then selects features with forest importance
/// on the labels of `docs`. Star and smoke columns are always kept. When
/// `reduced_training` is given it receives the selected features of `docs`.
FittedPipeline fit_pipeline(const std::vector<Document>& docs, const PipelineConfig& config,
                            std::shared_ptr<const Lexicon> lexicon, SmokeList smoke,
                            const std::vector<Document>* embedding_corpus = nullptr,
                            Execution exec = Execution::Parallel, Matrix* reduced_training = nullptr);

/// Lexicon named by the config, falling back to the bundled word list.
std::shared_ptr<const Lexicon> load_lexicon(const PipelineConfig& config);

}  // namespace safetriage
