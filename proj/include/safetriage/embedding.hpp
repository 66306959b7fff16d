#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "safetriage/matrix.hpp"
#include "safetriage/textprep.hpp"

namespace safetriage {

struct EmbeddingConfig {
  std::size_t dimension = 100;
  std::size_t epochs = 20;
  // Context window. Pure distributed bag-of-words does not read it; kept so the
  // training record states the full configuration.
  std::size_t window = 5;
  std::size_t negative = 5;
  std::size_t min_count = 2;
  double alpha = 0.025;
  double min_alpha = 0.0001;
  std::uint64_t seed = 1;
};

struct EmbeddingTrainingMeta {
  EmbeddingConfig config;
  std::size_t corpus_size = 0;
  /// Mean negative-sampling loss per (document, word) pair for each epoch.
  std::vector<double> epoch_loss;
};

/// Distributed bag-of-words paragraph-vector model: a document vector is
/// trained to predict the document's words through per-word output vectors
/// under negative sampling. The output vectors are frozen after training and
/// reused to infer vectors for unseen documents.
class EmbeddingModel {
 public:
  std::size_t dimension() const { return word_vectors_.cols(); }
  std::size_t vocab_size() const { return words_.size(); }
  const EmbeddingTrainingMeta& meta() const { return meta_; }

  /// -1 when the word is out of vocabulary.
  std::int64_t word_index(const std::string& word) const;
  std::span<const double> word_vector(std::size_t index) const { return word_vectors_.row(index); }

  /// Paragraph vectors learned for the training documents, in corpus order.
  /// Not persisted.
  const Matrix& training_vectors() const { return doc_vectors_; }

  /// Draws a noise word from the unigram^0.75 distribution.
  std::size_t sample_noise(double u) const;

  nlohmann::json to_json() const;
  static EmbeddingModel from_json(const nlohmann::json& j);

  friend EmbeddingModel train_embedding(const std::vector<TokenSequence>& corpus, const EmbeddingConfig& config);

 private:
  void build_noise_table();

  std::vector<std::string> words_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, std::size_t> index_;
  Matrix word_vectors_;
  Matrix doc_vectors_;
  std::vector<double> noise_cdf_;
  EmbeddingTrainingMeta meta_;
};

/// Single-threaded, deterministic for a fixed seed. Throws TrainingError when
/// the corpus has fewer than 100 documents or dimension < 2.
EmbeddingModel train_embedding(const std::vector<TokenSequence>& corpus, const EmbeddingConfig& config);

/// Gradient inference of a new paragraph vector with the output vectors held
/// fixed. Documents without in-vocabulary words map to the zero vector.
std::vector<double> infer_embedding(const TokenSequence& doc, const EmbeddingModel& model, std::uint64_t seed);

// Negative-sampling objective for one (document, target word) pair:
//   -log s(d.u_pos) - sum_k log s(-d.u_neg_k),  s = logistic sigmoid.

double negative_sampling_loss(std::span<const double> doc, std::span<const double> target,
                              const std::vector<std::span<const double>>& negatives);

struct NegativeSamplingGradient {
  std::vector<double> doc;
  std::vector<double> target;
  std::vector<std::vector<double>> negatives;
};

NegativeSamplingGradient negative_sampling_gradient(std::span<const double> doc, std::span<const double> target,
                                                    const std::vector<std::span<const double>>& negatives);

/// One SGD step on the pair objective: doc -= lr * grad_doc, and, when
/// `update_words`, every output vector -= lr * its gradient (computed from the
/// pre-step doc vector). Returns the pre-step loss.
double negative_sampling_step(std::span<double> doc, std::span<double> target,
                              const std::vector<std::span<double>>& negatives, double lr, bool update_words);

}  // namespace safetriage
