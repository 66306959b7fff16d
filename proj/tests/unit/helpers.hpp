#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "safetriage/corpus.hpp"
#include "safetriage/textprep.hpp"

namespace testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("safetriage-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p);
  out << content;
}

inline std::shared_ptr<const safetriage::Lexicon> bundled_lexicon() {
  static auto lex = std::make_shared<const safetriage::Lexicon>(safetriage::Lexicon::load(
      std::filesystem::path(SAFETRIAGE_DATA_DIR) / "lexicon" / "english.txt", {true}));
  return lex;
}

inline safetriage::Document amazon(std::string id, std::string text, safetriage::Label label,
                                   std::optional<int> stars = std::nullopt) {
  safetriage::Document d;
  d.id = std::move(id);
  d.text = std::move(text);
  d.label = label;
  d.star_rating = stars;
  return d;
}

}  // namespace testing

#include <cmath>

#include "safetriage/matrix.hpp"
#include "safetriage/rng.hpp"

namespace testing {

inline double gaussian(safetriage::Rng& rng) {
  const double u = 1.0 - rng.uniform();
  return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586 * rng.uniform());
}

struct Planted {
  safetriage::Matrix x;
  safetriage::Labels y;
  std::vector<std::size_t> informative;
};

/// Balanced labels; `n_informative` columns shifted by class, the rest noise.
inline Planted planted_dataset(std::size_t rows, std::size_t cols, std::size_t n_informative, std::uint64_t seed,
                               double shift = 1.5) {
  safetriage::Rng rng(seed);
  Planted p{safetriage::Matrix(rows, cols), safetriage::Labels(rows), {}};
  std::vector<std::size_t> order(cols);
  for (std::size_t j = 0; j < cols; ++j) order[j] = j;
  rng.shuffle(std::span<std::size_t>(order));
  p.informative.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_informative));
  std::vector<bool> planted(cols, false);
  for (auto j : p.informative) planted[j] = true;
  for (std::size_t i = 0; i < rows; ++i) {
    p.y[i] = static_cast<int>(i % 2);
    for (std::size_t j = 0; j < cols; ++j) {
      p.x(i, j) = gaussian(rng) + (planted[j] && p.y[i] == 1 ? shift : 0.0);
    }
  }
  return p;
}

}  // namespace testing

#include "safetriage/synthetic.hpp"
#include "safetriage/workflow.hpp"

namespace testing {

/// Fast configuration for tests: tiny embedding, few epochs.
inline safetriage::TrainConfig quick_train_config(std::uint64_t seed = 1) {
  safetriage::TrainConfig cfg;
  cfg.pipeline.embedding.dimension = 8;
  cfg.pipeline.embedding.epochs = 3;
  cfg.pipeline.select_k = 200;
  cfg.master_seed = seed;
  return cfg;
}

inline safetriage::SmokeList synthetic_smoke() {
  return safetriage::SmokeList::from_words(safetriage::synthetic_smoke_words(), "synthetic");
}

inline std::vector<safetriage::Document> labeled_corpus(std::size_t n, std::uint64_t seed, double noise = 0.0) {
  safetriage::SyntheticConfig sc;
  sc.documents = n;
  sc.prevalence = 0.2;
  sc.label_noise = noise;
  sc.seed = seed;
  sc.id_prefix = "train";
  return safetriage::generate_corpus(sc).docs;
}

}  // namespace testing
