#include "safetriage/stemmer.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <utility>

namespace safetriage::porter2 {
namespace {

// 'Y' marks a consonantal y and is deliberately not a vowel.
bool is_vowel(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
}

bool is_vowel_wxy(char c) { return is_vowel(c) || c == 'w' || c == 'x' || c == 'Y'; }

bool is_valid_li(char c) {
  switch (c) {
    case 'c': case 'd': case 'e': case 'g': case 'h':
    case 'k': case 'm': case 'n': case 'r': case 't':
      return true;
    default:
      return false;
  }
}

bool ends_with(const std::string& w, std::size_t end, std::string_view suffix) {
  return end >= suffix.size() && std::string_view(w).substr(end - suffix.size(), suffix.size()) == suffix;
}

struct Rule {
  std::string_view suffix;
  int action;
};

/// Longest suffix of w[0, end) found in `rules`.
template <std::size_t N>
std::optional<Rule> longest_suffix(const std::string& w, std::size_t end,
                                   const std::array<Rule, N>& rules) {
  std::optional<Rule> best;
  for (const auto& r : rules) {
    if (ends_with(w, end, r.suffix) && (!best || r.suffix.size() > best->suffix.size())) best = r;
  }
  return best;
}

class Stemmer {
 public:
  explicit Stemmer(std::string_view word) : w_(word) {}

  std::string run() {
    if (auto e = exception()) return std::string(*e);
    if (w_.size() < 3) return w_;
    prelude();
    mark_regions();
    step1a();
    step1b();
    step1c();
    step2();
    step3();
    step4();
    step5();
    for (auto& c : w_) {
      if (c == 'Y') c = 'y';
    }
    return w_;
  }

 private:
  std::optional<std::string_view> exception() const {
    static constexpr std::array<std::pair<std::string_view, std::string_view>, 15> table{{
        {"andes", "andes"}, {"atlas", "atlas"}, {"bias", "bias"}, {"cosmos", "cosmos"},
        {"early", "earli"}, {"gently", "gentl"}, {"howe", "howe"}, {"idly", "idl"},
        {"news", "news"}, {"only", "onli"}, {"singly", "singl"}, {"skies", "sky"},
        {"skis", "ski"}, {"sky", "sky"}, {"ugly", "ugli"},
    }};
    for (const auto& [from, to] : table) {
      if (w_ == from) return to;
    }
    return std::nullopt;
  }

  void prelude() {
    if (!w_.empty() && w_.front() == '\'') w_.erase(0, 1);
    if (!w_.empty() && w_.front() == 'y') w_.front() = 'Y';
    for (std::size_t i = 0; i + 1 < w_.size(); ++i) {
      if (is_vowel(w_[i]) && w_[i + 1] == 'y') w_[i + 1] = 'Y';
    }
  }

  // Position just past the first non-vowel that follows a vowel, scanning from
  // `from`; size() when there is none.
  std::size_t region_start(std::size_t from) const {
    std::size_t i = from;
    while (i < w_.size() && !is_vowel(w_[i])) ++i;
    while (i < w_.size() && is_vowel(w_[i])) ++i;
    return i < w_.size() ? i + 1 : w_.size();
  }

  void mark_regions() {
    static constexpr std::array<std::string_view, 9> prefixes{
        "arsen", "commun", "emerg", "gener", "inter", "later", "organ", "past", "univers"};
    bool prefixed = false;
    for (auto p : prefixes) {
      if (std::string_view(w_).starts_with(p)) {
        p1_ = p.size();
        prefixed = true;
        break;
      }
    }
    if (!prefixed) p1_ = region_start(0);
    p2_ = p1_ < w_.size() ? region_start(p1_) : w_.size();
  }

  // Ends (at `end`) in a short syllable.
  bool short_syllable(std::size_t end) const {
    if (end >= 3 && !is_vowel_wxy(w_[end - 1]) && is_vowel(w_[end - 2]) && !is_vowel(w_[end - 3]))
      return true;
    if (end == 2 && !is_vowel(w_[1]) && is_vowel(w_[0])) return true;
    return ends_with(w_, end, "past");
  }

  bool has_vowel(std::size_t begin, std::size_t end) const {
    for (std::size_t i = begin; i < end; ++i) {
      if (is_vowel(w_[i])) return true;
    }
    return false;
  }

  void replace_tail(std::size_t start, std::string_view with) {
    w_.resize(start);
    w_.append(with);
  }

  void step1a() {
    if (ends_with(w_, w_.size(), "'s'")) {
      w_.resize(w_.size() - 3);
    } else if (ends_with(w_, w_.size(), "'s")) {
      w_.resize(w_.size() - 2);
    } else if (ends_with(w_, w_.size(), "'")) {
      w_.resize(w_.size() - 1);
    }

    static constexpr std::array<Rule, 6> rules{{
        {"sses", 1}, {"ied", 2}, {"ies", 2}, {"ss", 0}, {"us", 0}, {"s", 3},
    }};
    const auto r = longest_suffix(w_, w_.size(), rules);
    if (!r) return;
    const std::size_t start = w_.size() - r->suffix.size();
    switch (r->action) {
      case 1:
        replace_tail(start, "ss");
        break;
      case 2:
        replace_tail(start, start >= 2 ? "i" : "ie");
        break;
      case 3:
        // Delete the s if a vowel occurs before the letter preceding it.
        if (start >= 1 && has_vowel(0, start - 1)) w_.resize(start);
        break;
      default:
        break;
    }
  }

  void step1b() {
    static constexpr std::array<Rule, 6> rules{{
        {"eedly", 1}, {"ingly", 2}, {"edly", 2}, {"eed", 1}, {"ing", 3}, {"ed", 2},
    }};
    const auto r = longest_suffix(w_, w_.size(), rules);
    if (!r) return;
    const std::size_t start = w_.size() - r->suffix.size();
    const std::string_view stem_part = std::string_view(w_).substr(0, start);

    if (r->action == 1) {
      if (start >= p1_ && stem_part != "succ" && stem_part != "proc" && stem_part != "exc") {
        replace_tail(start, "ee");
      }
      return;
    }

    if (r->action == 3) {
      static constexpr std::array<Rule, 7> ing_stems{{
          {"even", 2}, {"cann", 2}, {"inn", 2}, {"earr", 2}, {"herr", 2}, {"out", 2}, {"y", 1},
      }};
      if (const auto s = longest_suffix(w_, start, ing_stems)) {
        if (s->action == 2 && start == s->suffix.size()) return;
        if (s->action == 1 && start == 2 && !is_vowel(w_[0])) {
          replace_tail(1, "ie");
          return;
        }
      }
    }

    if (!has_vowel(0, start)) return;
    w_.resize(start);

    const std::size_t n = w_.size();
    if (ends_with(w_, n, "at") || ends_with(w_, n, "bl") || ends_with(w_, n, "iz")) {
      w_.push_back('e');
      return;
    }
    static constexpr std::array<std::string_view, 9> doubles{"bb", "dd", "ff", "gg", "mm",
                                                             "nn", "pp", "rr", "tt"};
    for (auto d : doubles) {
      if (ends_with(w_, n, d)) {
        const bool tiny = n == 3 && (w_[0] == 'a' || w_[0] == 'e' || w_[0] == 'o');
        if (!tiny) w_.pop_back();
        return;
      }
    }
    if (n == p1_ && short_syllable(n)) w_.push_back('e');
  }

  void step1c() {
    const std::size_t n = w_.size();
    if (n < 3) return;
    if ((w_[n - 1] == 'y' || w_[n - 1] == 'Y') && !is_vowel(w_[n - 2])) w_[n - 1] = 'i';
  }

  void step2() {
    static constexpr std::array<Rule, 25> rules{{
        {"anci", 3},     {"enci", 2},     {"ogi", 14},     {"li", 16},      {"bli", 12},
        {"abli", 4},     {"alli", 8},     {"fulli", 9},    {"lessli", 15},  {"ousli", 10},
        {"entli", 5},    {"aliti", 8},    {"biliti", 12},  {"iviti", 11},   {"tional", 1},
        {"ational", 7},  {"alism", 8},    {"ation", 7},    {"ization", 6},  {"izer", 6},
        {"ator", 7},     {"iveness", 11}, {"fulness", 9},  {"ousness", 10}, {"ogist", 13},
    }};
    static constexpr std::array<std::string_view, 16> replacement{
        "", "tion", "ence", "ance", "able", "ent", "ize", "ate",
        "al", "ful", "ous", "ive", "ble", "og", "og", "less"};
    const auto r = longest_suffix(w_, w_.size(), rules);
    if (!r) return;
    const std::size_t start = w_.size() - r->suffix.size();
    if (start < p1_) return;
    if (r->action == 14) {
      if (start >= 1 && w_[start - 1] == 'l') replace_tail(start, "og");
    } else if (r->action == 16) {
      if (start >= 1 && is_valid_li(w_[start - 1])) w_.resize(start);
    } else {
      replace_tail(start, replacement[static_cast<std::size_t>(r->action)]);
    }
  }

  void step3() {
    static constexpr std::array<Rule, 9> rules{{
        {"icate", 4}, {"ative", 6}, {"alize", 3}, {"iciti", 4}, {"ical", 4},
        {"tional", 1}, {"ational", 2}, {"ful", 5}, {"ness", 5},
    }};
    const auto r = longest_suffix(w_, w_.size(), rules);
    if (!r) return;
    const std::size_t start = w_.size() - r->suffix.size();
    if (start < p1_) return;
    switch (r->action) {
      case 1: replace_tail(start, "tion"); break;
      case 2: replace_tail(start, "ate"); break;
      case 3: replace_tail(start, "al"); break;
      case 4: replace_tail(start, "ic"); break;
      case 5: w_.resize(start); break;
      case 6:
        if (start >= p2_) w_.resize(start);
        break;
      default: break;
    }
  }

  void step4() {
    static constexpr std::array<Rule, 18> rules{{
        {"ic", 1},  {"ance", 1}, {"ence", 1}, {"able", 1}, {"ible", 1}, {"ate", 1},
        {"ive", 1}, {"ize", 1},  {"iti", 1},  {"al", 1},   {"ism", 1},  {"ion", 2},
        {"er", 1},  {"ous", 1},  {"ant", 1},  {"ent", 1},  {"ment", 1}, {"ement", 1},
    }};
    const auto r = longest_suffix(w_, w_.size(), rules);
    if (!r) return;
    const std::size_t start = w_.size() - r->suffix.size();
    if (start < p2_) return;
    if (r->action == 2 && !(start >= 1 && (w_[start - 1] == 's' || w_[start - 1] == 't'))) return;
    w_.resize(start);
  }

  void step5() {
    const std::size_t n = w_.size();
    if (n == 0) return;
    const std::size_t start = n - 1;
    if (w_[start] == 'e') {
      if (start >= p2_ || (start >= p1_ && !short_syllable(start))) w_.resize(start);
    } else if (w_[start] == 'l') {
      if (start >= p2_ && start >= 1 && w_[start - 1] == 'l') w_.resize(start);
    }
  }

  std::string w_;
  std::size_t p1_ = 0;
  std::size_t p2_ = 0;
};

}  // namespace

std::string stem(std::string_view word) { return Stemmer(word).run(); }

}  // namespace safetriage::porter2
