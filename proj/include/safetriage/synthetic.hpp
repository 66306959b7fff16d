#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "safetriage/corpus.hpp"
#include "safetriage/matrix.hpp"

namespace safetriage {

struct SyntheticConfig {
  std::size_t documents = 10000;
  double prevalence = 0.10;   // share of true safety reports
  double label_noise = 0.20;  // share of labels flipped
  std::uint64_t seed = 7;
  std::string id_prefix = "syn";
  /// Share of documents that also carry `marker` (0 disables it).
  double marker_rate = 0.0;
  std::string marker = "zephyr";
};

struct SyntheticCorpus {
  std::vector<Document> docs;  // Amazon reviews carrying the (noisy) labels
  Labels truth;                // true class of each document
};

/// Baby-product style reviews. Positives draw two to four hazard words from
/// the smoke vocabulary plus low star ratings; negatives are ordinary praise
/// or complaints, occasionally with one harmless hazard word. Exactly
/// round(label_noise * n) labels are flipped.
SyntheticCorpus generate_corpus(const SyntheticConfig& config);

/// Hazard words used by the generator, suitable as a smoke list.
const std::vector<std::string>& synthetic_smoke_words();

}  // namespace safetriage
