#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace safetriage {

/// Cleaned, stemmed tokens of one document.
struct TokenSequence {
  std::string source_id;
  std::vector<std::string> tokens;

  bool operator==(const TokenSequence&) const = default;
};

struct LexiconOptions {
  /// Add regular inflections (-s, -ed, -ing, -er, -est, -ly, ...) of every
  /// listed word. Needed for base-form word lists such as the bundled one.
  bool expand_inflections = false;
};

/// Set of lowercase English word forms. Immutable once built.
class Lexicon {
 public:
  /// Throws ConfigError when `words` is empty.
  static Lexicon from_words(const std::vector<std::string>& words, LexiconOptions options = {});
  /// One word per line, `#` starts a comment line. Throws ConfigError when the
  /// file is unreadable or holds no words.
  static Lexicon load(const std::filesystem::path& path, LexiconOptions options = {});

  bool contains(const std::string& word) const { return words_.contains(word); }
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

/// Regular inflected forms of a base word, including the word itself.
std::vector<std::string> inflections(std::string_view base);

/// Splits on runs of non-alphabetic characters and lowercases ASCII letters.
/// Digits split words ("Note7" -> "note"); non-ASCII letters are kept inside
/// the token so the lexicon can reject it as a whole.
std::vector<std::string> tokenize(std::string_view text);

/// Keeps tokens present in the lexicon, in order.
std::vector<std::string> filter_english(const std::vector<std::string>& tokens, const Lexicon& lexicon);

/// Replaces every token with its Snowball English stem.
TokenSequence stem(std::vector<std::string> tokens, std::string source_id = {});

/// tokenize -> filter_english -> stem.
TokenSequence preprocess(std::string_view text, const Lexicon& lexicon, std::string source_id = {});

}  // namespace safetriage
