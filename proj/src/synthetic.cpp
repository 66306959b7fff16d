#include "safetriage/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "safetriage/error.hpp"
#include "safetriage/rng.hpp"

namespace safetriage {
namespace {

const std::vector<std::string> kFiller = {
    "the", "and", "was", "it", "my", "for", "with", "this", "but", "very", "really", "we", "our", "is", "so", "a",
    "to", "of", "in", "on", "after", "just", "one", "when", "she", "he", "they", "had", "have", "be"};

const std::vector<std::string> kProducts = {"stroller", "crib", "blanket", "bottle", "toy",  "seat",
                                            "swing",    "monitor", "carrier", "gate", "bouncer", "chair"};

const std::vector<std::string> kPraise = {"great", "love", "easy", "soft",   "cute",   "nice",  "comfortable",
                                          "sturdy", "perfect", "happy", "pretty", "bright", "recommend", "gift",
                                          "quality", "design", "fabric", "clean",  "wash",   "price", "little"};

const std::vector<std::string> kGripes = {"cheap",  "late",   "smaller", "color",  "shipping", "return",
                                          "boring", "noisy",  "flimsy",  "ugly",   "expensive", "disappointed"};

const std::vector<std::string> kHazard = {"choke", "fire",  "burn",    "broke",  "injury", "hazard",
                                          "fell",  "sharp", "smoke",   "melt",   "pinch",  "bleed",
                                          "strangle", "suffocate", "rash", "danger", "collapse", "shock",
                                          "trap",  "scream", "hospital", "bruise"};

const std::string& pick(const std::vector<std::string>& words, Rng& rng) {
  return words[static_cast<std::size_t>(rng.below(words.size()))];
}

std::string make_text(bool positive, Rng& rng) {
  std::vector<std::string> words;
  const std::size_t length = 12 + static_cast<std::size_t>(rng.below(14));
  for (std::size_t i = 0; i < length; ++i) {
    const double u = rng.uniform();
    if (u < 0.45) words.push_back(pick(kFiller, rng));
    else if (u < 0.60) words.push_back(pick(kProducts, rng));
    else if (u < 0.85) words.push_back(positive ? pick(kGripes, rng) : pick(kPraise, rng));
    else words.push_back(positive ? pick(kPraise, rng) : pick(kGripes, rng));
  }
  const std::size_t hazards = positive ? 2 + static_cast<std::size_t>(rng.below(3)) : (rng.uniform() < 0.08 ? 1 : 0);
  for (std::size_t h = 0; h < hazards; ++h) {
    const auto at = static_cast<std::size_t>(rng.below(words.size() + 1));
    words.insert(words.begin() + static_cast<std::ptrdiff_t>(at), pick(kHazard, rng));
  }
  std::string text;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) text += rng.uniform() < 0.1 ? ", " : " ";
    text += words[i];
  }
  text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
  return text + ".";
}

int make_stars(bool positive, Rng& rng) {
  const double u = rng.uniform();
  if (positive) return u < 0.5 ? 1 : u < 0.75 ? 2 : u < 0.9 ? 3 : 4 + static_cast<int>(rng.below(2));
  return u < 0.55 ? 5 : u < 0.8 ? 4 : u < 0.9 ? 3 : 1 + static_cast<int>(rng.below(2));
}

}  // namespace

const std::vector<std::string>& synthetic_smoke_words() { return kHazard; }

SyntheticCorpus generate_corpus(const SyntheticConfig& config) {
  if (config.documents == 0) throw ArgumentError("synthetic corpus needs at least one document");
  if (config.prevalence < 0 || config.prevalence > 1 || config.label_noise < 0 || config.label_noise > 1) {
    throw ArgumentError("prevalence and label noise must lie in [0, 1]");
  }
  Rng rng(derive_seed(config.seed, 0));
  const std::size_t n = config.documents;
  const auto n_pos = static_cast<std::size_t>(std::llround(config.prevalence * static_cast<double>(n)));
  std::vector<int> truth(n, 0);
  std::fill(truth.begin(), truth.begin() + static_cast<std::ptrdiff_t>(n_pos), 1);
  rng.shuffle(std::span<int>(truth));

  SyntheticCorpus out;
  out.truth = truth;
  out.docs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Document d;
    char id[48];
    std::snprintf(id, sizeof id, "%s-%06zu", config.id_prefix.c_str(), i);
    d.id = id;
    d.text = make_text(truth[i] == 1, rng);
    if (config.marker_rate > 0 && rng.uniform() < config.marker_rate) d.text += " " + config.marker + ".";
    d.star_rating = make_stars(truth[i] == 1, rng);
    d.label = truth[i] == 1 ? Label::MentionsSafetyIssue : Label::NoSafetyIssue;
    out.docs.push_back(std::move(d));
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng flip(derive_seed(config.seed, 1));
  flip.shuffle(std::span<std::size_t>(order));
  const auto n_flip = static_cast<std::size_t>(std::llround(config.label_noise * static_cast<double>(n)));
  for (std::size_t i = 0; i < n_flip; ++i) {
    auto& d = out.docs[order[i]];
    d.label = d.label == Label::MentionsSafetyIssue ? Label::NoSafetyIssue : Label::MentionsSafetyIssue;
  }
  return out;
}

}  // namespace safetriage
