#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "safetriage/textprep.hpp"

namespace safetriage {

struct SparseEntry {
  std::uint32_t index;
  double value;

  bool operator==(const SparseEntry&) const = default;
};

/// Sparse vector with strictly increasing indices.
using SparseVector = std::vector<SparseEntry>;

/// Unigrams followed by adjacent bigrams joined with '_' ("a_b").
std::vector<std::string> ngrams(const TokenSequence& doc);

/// Term -> column map with document frequencies, frozen at fit time.
/// Columns are assigned in lexicographic term order.
class TfidfVocabulary {
 public:
  std::size_t size() const { return terms_.size(); }
  std::size_t n_docs() const { return n_docs_; }
  std::size_t min_df() const { return min_df_; }

  std::optional<std::uint32_t> index_of(const std::string& term) const;
  const std::string& term(std::uint32_t index) const { return terms_.at(index); }
  std::size_t doc_freq(std::uint32_t index) const { return doc_freq_.at(index); }
  /// ln((1 + N) / (1 + df)) + 1
  double idf(std::uint32_t index) const { return idf_.at(index); }

  nlohmann::json to_json() const;
  static TfidfVocabulary from_json(const nlohmann::json& j);

  friend TfidfVocabulary fit_tfidf(const std::vector<TokenSequence>& corpus, std::size_t min_df);

 private:
  void rebuild_index();

  std::vector<std::string> terms_;
  std::vector<std::size_t> doc_freq_;
  std::vector<double> idf_;
  std::map<std::string, std::uint32_t, std::less<>> index_;
  std::size_t n_docs_ = 0;
  std::size_t min_df_ = 1;
};

/// Every unigram and bigram with document frequency >= min_df. Throws FitError
/// on an empty corpus.
TfidfVocabulary fit_tfidf(const std::vector<TokenSequence>& corpus, std::size_t min_df);

/// Raw count x idf per known term, L2-normalized. Unknown terms are ignored; a
/// document without known terms maps to the empty (all-zero) vector.
SparseVector transform_tfidf(const TokenSequence& doc, const TfidfVocabulary& vocab);

}  // namespace safetriage
