#include "safetriage/tfidf.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "safetriage/error.hpp"

namespace safetriage {

std::vector<std::string> ngrams(const TokenSequence& doc) {
  const auto& t = doc.tokens;
  std::vector<std::string> out(t.begin(), t.end());
  for (std::size_t i = 0; i + 1 < t.size(); ++i) out.push_back(t[i] + '_' + t[i + 1]);
  return out;
}

std::optional<std::uint32_t> TfidfVocabulary::index_of(const std::string& term) const {
  auto it = index_.find(term);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void TfidfVocabulary::rebuild_index() {
  index_.clear();
  idf_.resize(terms_.size());
  for (std::uint32_t i = 0; i < terms_.size(); ++i) {
    index_.emplace(terms_[i], i);
    idf_[i] = std::log((1.0 + static_cast<double>(n_docs_)) / (1.0 + static_cast<double>(doc_freq_[i]))) + 1.0;
  }
}

TfidfVocabulary fit_tfidf(const std::vector<TokenSequence>& corpus, std::size_t min_df) {
  if (corpus.empty()) throw FitError("cannot fit TF-IDF on an empty corpus");
  min_df = std::max<std::size_t>(min_df, 1);

  std::unordered_map<std::string, std::size_t> df;
  for (const auto& doc : corpus) {
    auto grams = ngrams(doc);
    std::sort(grams.begin(), grams.end());
    grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
    for (auto& g : grams) ++df[std::move(g)];
  }

  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [term, count] : df) {
    if (count >= min_df) kept.emplace_back(term, count);
  }
  std::sort(kept.begin(), kept.end());

  TfidfVocabulary vocab;
  vocab.n_docs_ = corpus.size();
  vocab.min_df_ = min_df;
  vocab.terms_.reserve(kept.size());
  vocab.doc_freq_.reserve(kept.size());
  for (auto& [term, count] : kept) {
    vocab.terms_.push_back(std::move(term));
    vocab.doc_freq_.push_back(count);
  }
  vocab.rebuild_index();
  return vocab;
}

SparseVector transform_tfidf(const TokenSequence& doc, const TfidfVocabulary& vocab) {
  std::unordered_map<std::uint32_t, double> counts;
  for (const auto& g : ngrams(doc)) {
    if (auto idx = vocab.index_of(g)) counts[*idx] += 1.0;
  }
  SparseVector out;
  out.reserve(counts.size());
  for (const auto& [idx, c] : counts) out.push_back({idx, c * vocab.idf(idx)});
  std::sort(out.begin(), out.end(), [](const SparseEntry& a, const SparseEntry& b) { return a.index < b.index; });
  double norm2 = 0.0;
  for (const auto& e : out) norm2 += e.value * e.value;
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& e : out) e.value *= inv;
  }
  return out;
}

nlohmann::json TfidfVocabulary::to_json() const {
  return {{"terms", terms_}, {"doc_freq", doc_freq_}, {"n_docs", n_docs_}, {"min_df", min_df_}};
}

TfidfVocabulary TfidfVocabulary::from_json(const nlohmann::json& j) {
  TfidfVocabulary v;
  v.terms_ = j.at("terms").get<std::vector<std::string>>();
  v.doc_freq_ = j.at("doc_freq").get<std::vector<std::size_t>>();
  v.n_docs_ = j.at("n_docs").get<std::size_t>();
  v.min_df_ = j.value("min_df", std::size_t{1});
  if (v.terms_.size() != v.doc_freq_.size()) throw FormatError("tfidf: terms/doc_freq length mismatch");
  v.rebuild_index();
  return v;
}

}  // namespace safetriage
