#include "safetriage/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "safetriage/error.hpp"
#include "safetriage/rng.hpp"

namespace safetriage {
namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(sigmoid(x)) without overflow
double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

constexpr std::size_t kMinCorpus = 100;

}  // namespace

double negative_sampling_loss(std::span<const double> doc, std::span<const double> target,
                              const std::vector<std::span<const double>>& negatives) {
  double loss = -log_sigmoid(dot(doc, target));
  for (const auto& n : negatives) loss -= log_sigmoid(-dot(doc, n));
  return loss;
}

NegativeSamplingGradient negative_sampling_gradient(std::span<const double> doc, std::span<const double> target,
                                                    const std::vector<std::span<const double>>& negatives) {
  const std::size_t dim = doc.size();
  NegativeSamplingGradient g;
  g.doc.assign(dim, 0.0);
  g.target.assign(dim, 0.0);
  // d/dx [-log s(x)] = s(x) - 1 ; d/dx [-log s(-x)] = s(x)
  const double c_pos = sigmoid(dot(doc, target)) - 1.0;
  for (std::size_t i = 0; i < dim; ++i) {
    g.doc[i] += c_pos * target[i];
    g.target[i] = c_pos * doc[i];
  }
  for (const auto& n : negatives) {
    const double c_neg = sigmoid(dot(doc, n));
    std::vector<double> gn(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      g.doc[i] += c_neg * n[i];
      gn[i] = c_neg * doc[i];
    }
    g.negatives.push_back(std::move(gn));
  }
  return g;
}

double negative_sampling_step(std::span<double> doc, std::span<double> target,
                              const std::vector<std::span<double>>& negatives, double lr, bool update_words) {
  const std::size_t dim = doc.size();
  thread_local std::vector<double> doc_grad;
  doc_grad.assign(dim, 0.0);
  double loss = 0.0;

  auto visit = [&](std::span<double> u, bool positive) {
    const double x = dot(doc, u);
    loss -= log_sigmoid(positive ? x : -x);
    const double c = positive ? sigmoid(x) - 1.0 : sigmoid(x);
    for (std::size_t i = 0; i < dim; ++i) doc_grad[i] += c * u[i];
    if (update_words) {
      for (std::size_t i = 0; i < dim; ++i) u[i] -= lr * c * doc[i];
    }
  };
  visit(target, true);
  for (const auto& n : negatives) visit(n, false);
  for (std::size_t i = 0; i < dim; ++i) doc[i] -= lr * doc_grad[i];
  return loss;
}

std::int64_t EmbeddingModel::word_index(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

void EmbeddingModel::build_noise_table() {
  index_.clear();
  for (std::size_t i = 0; i < words_.size(); ++i) index_.emplace(words_[i], i);
  noise_cdf_.resize(counts_.size());
  double total = 0.0;
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    total += std::pow(static_cast<double>(counts_[i]), 0.75);
    noise_cdf_[i] = total;
  }
  for (auto& c : noise_cdf_) c /= total;
}

std::size_t EmbeddingModel::sample_noise(double u) const {
  auto it = std::upper_bound(noise_cdf_.begin(), noise_cdf_.end(), u);
  if (it == noise_cdf_.end()) --it;
  return static_cast<std::size_t>(it - noise_cdf_.begin());
}

namespace {

// One training pass over a document; returns the summed pair loss.
double train_document(std::span<double> doc_vec, const std::vector<std::size_t>& word_ids, Matrix& word_vectors,
                      const EmbeddingModel& noise, std::size_t negative, double lr, Rng& rng) {
  double loss = 0.0;
  std::vector<std::span<double>> negs;
  negs.reserve(negative);
  for (auto w : word_ids) {
    negs.clear();
    for (std::size_t k = 0; k < negative; ++k) {
      const auto n = noise.sample_noise(rng.uniform());
      if (n == w) continue;
      negs.push_back(word_vectors.row(n));
    }
    loss += negative_sampling_step(doc_vec, word_vectors.row(w), negs, lr, true);
  }
  return loss;
}

// Inference step: only the document vector moves.
void infer_document(std::span<double> doc_vec, const std::vector<std::size_t>& word_ids, const EmbeddingModel& model,
                    std::size_t negative, double lr, Rng& rng) {
  const std::size_t dim = doc_vec.size();
  std::vector<double> grad(dim);
  for (auto w : word_ids) {
    std::fill(grad.begin(), grad.end(), 0.0);
    auto accumulate = [&](std::span<const double> u, bool positive) {
      const double x = dot(doc_vec, u);
      const double c = positive ? sigmoid(x) - 1.0 : sigmoid(x);
      for (std::size_t i = 0; i < dim; ++i) grad[i] += c * u[i];
    };
    accumulate(model.word_vector(w), true);
    for (std::size_t k = 0; k < negative; ++k) {
      const auto n = model.sample_noise(rng.uniform());
      if (n != w) accumulate(model.word_vector(n), false);
    }
    for (std::size_t i = 0; i < dim; ++i) doc_vec[i] -= lr * grad[i];
  }
}

}  // namespace

EmbeddingModel train_embedding(const std::vector<TokenSequence>& corpus, const EmbeddingConfig& config) {
  if (corpus.size() < kMinCorpus) {
    throw TrainingError("embedding training needs at least " + std::to_string(kMinCorpus) + " documents, got " +
                        std::to_string(corpus.size()));
  }
  if (config.dimension < 2) throw TrainingError("embedding dimension must be at least 2");
  if (config.epochs == 0) throw TrainingError("embedding epochs must be at least 1");

  EmbeddingModel model;
  std::map<std::string, std::uint64_t> counts;
  for (const auto& doc : corpus) {
    for (const auto& t : doc.tokens) ++counts[t];
  }
  for (const auto& [w, c] : counts) {
    if (c >= std::max<std::size_t>(config.min_count, 1)) {
      model.words_.push_back(w);
      model.counts_.push_back(c);
    }
  }
  if (model.words_.empty()) throw TrainingError("embedding vocabulary is empty after min_count pruning");
  model.build_noise_table();

  const std::size_t dim = config.dimension;
  model.word_vectors_ = Matrix(model.words_.size(), dim, 0.0);
  model.doc_vectors_ = Matrix(corpus.size(), dim);
  Rng rng(derive_seed(config.seed, 0));
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    for (auto& v : model.doc_vectors_.row(d)) v = (rng.uniform() - 0.5) / static_cast<double>(dim);
  }

  std::vector<std::vector<std::size_t>> ids(corpus.size());
  std::size_t total_words = 0;
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    for (const auto& t : corpus[d].tokens) {
      const auto i = model.word_index(t);
      if (i >= 0) ids[d].push_back(static_cast<std::size_t>(i));
    }
    total_words += ids[d].size();
  }
  if (total_words == 0) throw TrainingError("embedding corpus has no in-vocabulary words");

  model.meta_.config = config;
  model.meta_.corpus_size = corpus.size();
  const double steps = static_cast<double>(config.epochs * corpus.size());
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double loss = 0.0;
    for (std::size_t d = 0; d < corpus.size(); ++d, ++step) {
      const double lr = config.alpha - (config.alpha - config.min_alpha) * (static_cast<double>(step) / steps);
      loss += train_document(model.doc_vectors_.row(d), ids[d], model.word_vectors_, model, config.negative, lr,
                             rng);
    }
    model.meta_.epoch_loss.push_back(loss / static_cast<double>(total_words));
  }
  return model;
}

std::vector<double> infer_embedding(const TokenSequence& doc, const EmbeddingModel& model, std::uint64_t seed) {
  const std::size_t dim = model.dimension();
  std::vector<std::size_t> ids;
  for (const auto& t : doc.tokens) {
    const auto i = model.word_index(t);
    if (i >= 0) ids.push_back(static_cast<std::size_t>(i));
  }
  std::vector<double> vec(dim, 0.0);
  if (ids.empty()) return vec;

  Rng rng(seed);
  for (auto& v : vec) v = (rng.uniform() - 0.5) / static_cast<double>(dim);
  const auto& cfg = model.meta().config;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.alpha - (cfg.alpha - cfg.min_alpha) * (static_cast<double>(epoch) / static_cast<double>(cfg.epochs));
    infer_document(vec, ids, model, cfg.negative, lr, rng);
  }
  return vec;
}

nlohmann::json EmbeddingModel::to_json() const {
  const auto& c = meta_.config;
  return {
      {"dimension", dimension()},
      {"words", words_},
      {"counts", counts_},
      {"word_vectors", std::vector<double>(word_vectors_.data().begin(), word_vectors_.data().end())},
      {"training_meta",
       {{"epochs", c.epochs}, {"window", c.window}, {"negative", c.negative}, {"min_count", c.min_count},
        {"alpha", c.alpha}, {"min_alpha", c.min_alpha}, {"seed", c.seed}, {"corpus_size", meta_.corpus_size},
        {"epoch_loss", meta_.epoch_loss}}},
  };
}

EmbeddingModel EmbeddingModel::from_json(const nlohmann::json& j) {
  EmbeddingModel m;
  const auto dim = j.at("dimension").get<std::size_t>();
  m.words_ = j.at("words").get<std::vector<std::string>>();
  m.counts_ = j.at("counts").get<std::vector<std::uint64_t>>();
  const auto flat = j.at("word_vectors").get<std::vector<double>>();
  if (flat.size() != m.words_.size() * dim || m.counts_.size() != m.words_.size()) {
    throw FormatError("embedding: inconsistent table sizes");
  }
  m.word_vectors_ = Matrix(m.words_.size(), dim);
  for (std::size_t i = 0; i < m.words_.size(); ++i) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(i * dim), dim, m.word_vectors_.row(i).begin());
  }
  const auto& meta = j.at("training_meta");
  auto& c = m.meta_.config;
  c.dimension = dim;
  c.epochs = meta.at("epochs");
  c.window = meta.at("window");
  c.negative = meta.at("negative");
  c.min_count = meta.at("min_count");
  c.alpha = meta.at("alpha");
  c.min_alpha = meta.at("min_alpha");
  c.seed = meta.at("seed");
  m.meta_.corpus_size = meta.at("corpus_size");
  m.meta_.epoch_loss = meta.at("epoch_loss").get<std::vector<double>>();
  m.build_noise_table();
  return m;
}

}  // namespace safetriage
