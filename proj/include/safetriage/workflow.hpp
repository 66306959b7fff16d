#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include <json.hpp>

#include "safetriage/classifiers.hpp"
#include "safetriage/evaluation.hpp"
#include "safetriage/pipeline.hpp"

namespace safetriage {

inline constexpr int kBundleFormatVersion = 1;

struct TrainConfig {
  PipelineConfig pipeline;
  ClassifierSpec spec;
  /// Seeds the pipeline and the classifier; overrides their own seeds.
  std::uint64_t master_seed = 1;
};

/// Fitted pipeline plus trained classifier: everything needed to score text.
struct ModelBundle {
  FittedPipeline pipeline;
  TrainedModel model;
  std::uint64_t master_seed = 1;

  std::vector<double> score(const std::vector<Document>& docs, Execution exec = Execution::Parallel) const;
  std::vector<ScoredDocument> score_documents(const std::vector<Document>& docs,
                                              Execution exec = Execution::Parallel) const;

  nlohmann::json to_json() const;
  static ModelBundle from_json(const nlohmann::json& j, std::shared_ptr<const Lexicon> lexicon = nullptr);
  void save(const std::filesystem::path& path) const;
  static ModelBundle load(const std::filesystem::path& path, std::shared_ptr<const Lexicon> lexicon = nullptr);
};

ModelBundle train_bundle(const std::vector<Document>& docs, const TrainConfig& config,
                         std::shared_ptr<const Lexicon> lexicon, SmokeList smoke,
                         Execution exec = Execution::Parallel);

}  // namespace safetriage
