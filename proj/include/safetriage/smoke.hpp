#pragma once

#include <cstddef>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "safetriage/textprep.hpp"

namespace safetriage {

/// Stemmed "smoke words": terms whose presence hints at a hazard.
class SmokeList {
 public:
  /// Words are lowercased, split like review text, and stemmed. Throws
  /// ConfigError when nothing remains.
  static SmokeList from_words(const std::vector<std::string>& words, std::string provenance);
  /// One word per line, `#` comments. Provenance is the file name.
  static SmokeList load(const std::filesystem::path& path);

  /// Union with another list; provenance names are concatenated.
  void merge(const SmokeList& other);

  bool contains(const std::string& stem) const { return stems_.contains(stem); }
  std::size_t size() const { return stems_.size(); }
  const std::set<std::string>& stems() const { return stems_; }
  const std::vector<std::string>& provenance() const { return provenance_; }

  nlohmann::json to_json() const;
  static SmokeList from_json(const nlohmann::json& j);

 private:
  std::set<std::string> stems_;
  std::vector<std::string> provenance_;
};

/// Occurrences (with multiplicity) of smoke stems in a stemmed document.
/// Matching ignores context: "screaming with delight" counts like "screaming
/// in pain".
std::size_t count_smoke_words(const TokenSequence& doc, const SmokeList& list);

}  // namespace safetriage
