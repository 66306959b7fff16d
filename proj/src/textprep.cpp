#include "safetriage/textprep.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>

#include "safetriage/error.hpp"
#include "safetriage/stemmer.hpp"

namespace safetriage {
namespace {

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

// Decodes one UTF-8 sequence starting at text[i]; advances i. Invalid bytes
// decode to U+FFFD.
std::uint32_t next_codepoint(std::string_view text, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(text[i]);
  int len = b0 < 0x80 ? 1 : (b0 >> 5) == 0x6 ? 2 : (b0 >> 4) == 0xE ? 3 : (b0 >> 3) == 0x1E ? 4 : 0;
  if (len == 0 || i + static_cast<std::size_t>(len) > text.size()) {
    ++i;
    return 0xFFFD;
  }
  std::uint32_t cp = len == 1 ? b0 : len == 2 ? (b0 & 0x1F) : len == 3 ? (b0 & 0x0F) : (b0 & 0x07);
  for (int k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(text[i + static_cast<std::size_t>(k)]);
    if ((b >> 6) != 0x2) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  i += static_cast<std::size_t>(len);
  return cp;
}

bool is_letter(std::uint32_t cp) {
  if (cp < 0x80) return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  if (cp < 0xC0 || cp == 0xD7 || cp == 0xF7) return false;  // Latin-1 punctuation, x, ÷
  if (cp >= 0x2000 && cp <= 0x2BFF) return false;            // punctuation, symbols, arrows
  if (cp >= 0x3000 && cp <= 0x303F) return false;            // CJK punctuation
  if (cp >= 0xFE30 && cp <= 0xFE4F) return false;
  if (cp >= 0xFF00 && cp <= 0xFF20) return false;            // fullwidth punctuation
  if (cp == 0xFFFD || cp == 0xFEFF) return false;
  if (cp >= 0x1F000) return false;                           // emoji and pictographs
  return true;
}

}  // namespace

std::vector<std::string> inflections(std::string_view base) {
  std::vector<std::string> out;
  const std::string w(base);
  out.push_back(w);
  if (w.size() < 2) return out;
  const char last = w.back();
  const char prev = w[w.size() - 2];
  const std::string stem_y = w.substr(0, w.size() - 1);

  if (w.ends_with('s') || w.ends_with('x') || w.ends_with('z') || w.ends_with("ch") || w.ends_with("sh")) {
    out.push_back(w + "es");
  } else if (last == 'y' && !is_vowel(prev)) {
    out.push_back(stem_y + "ies");
  } else {
    out.push_back(w + "s");
  }

  if (last == 'e') {
    for (const char* s : {"d", "r", "st"}) out.push_back(w + s);
    out.push_back(stem_y + "ing");
  } else if (last == 'y' && !is_vowel(prev)) {
    for (const char* s : {"ied", "ier", "iest", "ily"}) out.push_back(stem_y + s);
    out.push_back(w + "ing");
  } else {
    for (const char* s : {"ed", "er", "est", "ing"}) out.push_back(w + s);
    // consonant doubling after a short final syllable: stop -> stopped
    if (w.size() >= 3 && !is_vowel(last) && last != 'w' && last != 'x' && last != 'y' && is_vowel(prev) &&
        !is_vowel(w[w.size() - 3])) {
      for (const char* s : {"ed", "er", "est", "ing"}) out.push_back(w + last + s);
    }
  }

  if (w.ends_with("le")) {
    out.push_back(stem_y + "y");
  } else {
    out.push_back(w + "ly");
  }
  return out;
}

Lexicon Lexicon::from_words(const std::vector<std::string>& words, LexiconOptions options) {
  Lexicon lex;
  lex.words_.reserve(options.expand_inflections ? words.size() * 9 : words.size());
  for (const auto& raw : words) {
    std::string w = raw;
    std::transform(w.begin(), w.end(), w.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (w.empty()) continue;
    if (options.expand_inflections) {
      for (auto& form : inflections(w)) lex.words_.insert(std::move(form));
    } else {
      lex.words_.insert(std::move(w));
    }
  }
  if (lex.words_.empty()) throw ConfigError("lexicon is empty");
  return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& path, LexiconOptions options) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read lexicon file " + path.string());
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    words.push_back(line.substr(first, last - first + 1));
  }
  if (words.empty()) throw ConfigError("lexicon file " + path.string() + " holds no words");
  return from_words(words, options);
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t start = i;
    const std::uint32_t cp = next_codepoint(text, i);
    if (is_letter(cp)) {
      if (cp < 0x80) {
        current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(cp))));
      } else {
        current.append(text.substr(start, i - start));
      }
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<std::string> filter_english(const std::vector<std::string>& tokens, const Lexicon& lexicon) {
  if (lexicon.size() == 0) throw ConfigError("lexicon is empty");
  std::vector<std::string> kept;
  kept.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (lexicon.contains(t)) kept.push_back(t);
  }
  return kept;
}

TokenSequence stem(std::vector<std::string> tokens, std::string source_id) {
  for (auto& t : tokens) t = porter2::stem(t);
  return TokenSequence{std::move(source_id), std::move(tokens)};
}

TokenSequence preprocess(std::string_view text, const Lexicon& lexicon, std::string source_id) {
  return stem(filter_english(tokenize(text), lexicon), std::move(source_id));
}

}  // namespace safetriage
