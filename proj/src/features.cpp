#include "safetriage/features.hpp"

#include <algorithm>

#include "safetriage/error.hpp"

namespace safetriage {

double FeatureVector::at(std::size_t column) const {
  if (column >= width()) throw ShapeError("feature column out of range");
  if (column < layout.tfidf_width) {
    auto it = std::lower_bound(tfidf.begin(), tfidf.end(), column,
                               [](const SparseEntry& e, std::size_t c) { return e.index < c; });
    return it != tfidf.end() && it->index == column ? it->value : 0.0;
  }
  if (column < layout.star_index()) return embedding[column - layout.embedding_offset()];
  return column == layout.star_index() ? star : smoke_count;
}

std::vector<double> FeatureVector::dense() const {
  std::vector<double> out(width(), 0.0);
  for (const auto& e : tfidf) out[e.index] = e.value;
  std::copy(embedding.begin(), embedding.end(), out.begin() + static_cast<std::ptrdiff_t>(layout.embedding_offset()));
  out[layout.star_index()] = star;
  out[layout.smoke_index()] = smoke_count;
  return out;
}

SparseVector FeatureVector::nonzeros() const {
  SparseVector out = tfidf;
  out.reserve(tfidf.size() + embedding.size() + 2);
  for (std::size_t i = 0; i < embedding.size(); ++i) {
    if (embedding[i] != 0.0) out.push_back({static_cast<std::uint32_t>(layout.embedding_offset() + i), embedding[i]});
  }
  if (star != 0.0) out.push_back({static_cast<std::uint32_t>(layout.star_index()), star});
  if (smoke_count != 0.0) out.push_back({static_cast<std::uint32_t>(layout.smoke_index()), smoke_count});
  return out;
}

int star_feature(const Document& doc) {
  if (doc.source != Source::AmazonReview) return 1;
  return doc.star_rating.value_or(3);
}

std::uint64_t token_hash(const TokenSequence& tokens) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : tokens.tokens) {
    for (unsigned char c : t) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xff;  // token separator
    h *= 0x100000001b3ULL;
  }
  return h;
}

FeatureVector assemble(const Document& doc, const TokenSequence& tokens, const TfidfVocabulary* vocab,
                       const EmbeddingModel* model, const SmokeList* smoke, std::uint64_t infer_seed) {
  if (vocab == nullptr || model == nullptr || smoke == nullptr) {
    throw PipelineError("feature extractors are not fitted");
  }
  FeatureVector v;
  v.layout = {vocab->size(), model->dimension()};
  v.tfidf = transform_tfidf(tokens, *vocab);
  v.embedding = infer_embedding(tokens, *model, infer_seed);
  v.star = static_cast<double>(star_feature(doc));
  v.smoke_count = static_cast<double>(count_smoke_words(tokens, *smoke));
  return v;
}

}  // namespace safetriage
