#include "safetriage/smoke.hpp"

#include <fstream>

#include "safetriage/error.hpp"
#include "safetriage/stemmer.hpp"

namespace safetriage {

SmokeList SmokeList::from_words(const std::vector<std::string>& words, std::string provenance) {
  SmokeList list;
  for (const auto& w : words) {
    for (const auto& token : tokenize(w)) list.stems_.insert(porter2::stem(token));
  }
  if (list.stems_.empty()) throw ConfigError("smoke list '" + provenance + "' is empty");
  list.provenance_.push_back(std::move(provenance));
  return list;
}

SmokeList SmokeList::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read smoke list " + path.string());
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    words.push_back(line.substr(first));
  }
  return from_words(words, path.filename().string());
}

void SmokeList::merge(const SmokeList& other) {
  stems_.insert(other.stems_.begin(), other.stems_.end());
  provenance_.insert(provenance_.end(), other.provenance_.begin(), other.provenance_.end());
}

std::size_t count_smoke_words(const TokenSequence& doc, const SmokeList& list) {
  std::size_t n = 0;
  for (const auto& t : doc.tokens) n += list.contains(t) ? 1 : 0;
  return n;
}

nlohmann::json SmokeList::to_json() const { return {{"stems", stems_}, {"provenance", provenance_}}; }

SmokeList SmokeList::from_json(const nlohmann::json& j) {
  SmokeList list;
  list.stems_ = j.at("stems").get<std::set<std::string>>();
  list.provenance_ = j.at("provenance").get<std::vector<std::string>>();
  if (list.stems_.empty()) throw FormatError("smoke list is empty");
  return list;
}

}  // namespace safetriage
