#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "safetriage/corpus.hpp"
#include "safetriage/embedding.hpp"
#include "safetriage/smoke.hpp"
#include "safetriage/tfidf.hpp"

namespace safetriage {

/// Column layout of an assembled vector: [tfidf | embedding | star | smoke_count].
struct FeatureLayout {
  std::size_t tfidf_width = 0;
  std::size_t embedding_width = 0;

  std::size_t embedding_offset() const { return tfidf_width; }
  std::size_t star_index() const { return tfidf_width + embedding_width; }
  std::size_t smoke_index() const { return star_index() + 1; }
  std::size_t width() const { return tfidf_width + embedding_width + 2; }

  bool operator==(const FeatureLayout&) const = default;
};

/// One document's features. The TF-IDF span is stored sparsely (it is mostly
/// zeros); `dense()` materializes the full vector.
struct FeatureVector {
  FeatureLayout layout;
  SparseVector tfidf;  // L2-normalized or empty
  std::vector<double> embedding;
  double star = 1.0;
  double smoke_count = 0.0;

  std::size_t width() const { return layout.width(); }
  double at(std::size_t column) const;
  std::vector<double> dense() const;
  /// Nonzero entries over the full width, increasing column order.
  SparseVector nonzeros() const;
};

/// Star rating used as a feature: the document's rating, one star for
/// complaint and recall sources, and three (neutral) for an Amazon review
/// without a rating.
int star_feature(const Document& doc);

/// Concatenates the four feature families. Throws PipelineError when any
/// extractor is missing.
FeatureVector assemble(const Document& doc, const TokenSequence& tokens, const TfidfVocabulary* vocab,
                       const EmbeddingModel* model, const SmokeList* smoke, std::uint64_t infer_seed);

/// Content hash of a token sequence (FNV-1a), used to derive per-document
/// inference seeds that do not depend on batch position.
std::uint64_t token_hash(const TokenSequence& tokens);

}  // namespace safetriage
