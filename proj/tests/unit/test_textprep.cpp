#include <doctest.h>

#include <algorithm>

#include "helpers.hpp"
#include "safetriage/error.hpp"
#include "safetriage/textprep.hpp"

using namespace safetriage;
using Words = std::vector<std::string>;

TEST_SUITE("textprep") {
  TEST_CASE("tokenize splits on non-letters") {
    CHECK(tokenize("fell out of the second-story window!") == Words{"fell", "out", "of", "the", "second", "story", "window"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("Note7 caught FIRE") == Words{"note", "caught", "fire"});
    CHECK(tokenize("  123 456 ").empty());
    CHECK(tokenize("it's") == Words{"it", "s"});
  }

  TEST_CASE("non-ascii letters stay inside the token") {
    const auto t = tokenize("caf\xc3\xa9 ok");
    REQUIRE(t.size() == 2);
    CHECK(t[0] == "caf\xc3\xa9");
    CHECK(t[1] == "ok");
  }

  TEST_CASE("filter keeps lexicon words in order") {
    const auto lex = Lexicon::from_words({"stroller", "broke"});
    CHECK(filter_english({"graco", "stroller", "broke"}, lex) == Words{"stroller", "broke"});
    CHECK(filter_english({"broke", "stroller"}, lex) == Words{"broke", "stroller"});
    CHECK(filter_english({"graco", "evenflo"}, lex).empty());
    CHECK_THROWS_AS(Lexicon::from_words({}), ConfigError);
  }

  TEST_CASE("filter output is a subsequence of lexicon words") {
    const auto& lex = *testing::bundled_lexicon();
    const auto tokens = tokenize("My Graco SnugRide fell apart and the buckle pinched her finger twice, zxqv!");
    const auto kept = filter_english(tokens, lex);
    CHECK(kept.size() <= tokens.size());
    for (const auto& t : kept) CHECK(lex.contains(t));
    CHECK(std::find(kept.begin(), kept.end(), "graco") == kept.end());
    CHECK(std::find(kept.begin(), kept.end(), "pinched") != kept.end());
  }

  TEST_CASE("inflection expansion") {
    const auto forms = inflections("pinch");
    CHECK(std::find(forms.begin(), forms.end(), "pinched") != forms.end());
    CHECK(std::find(forms.begin(), forms.end(), "pinches") != forms.end());
    CHECK(std::find(forms.begin(), forms.end(), "pinching") != forms.end());
    const auto plain = Lexicon::from_words({"pinch"});
    CHECK_FALSE(plain.contains("pinched"));
    const auto expanded = Lexicon::from_words({"pinch"}, {true});
    CHECK(expanded.contains("pinched"));
  }

  TEST_CASE("lexicon file with comments") {
    testing::TempDir dir;
    testing::write_file(dir / "lex.txt", "# words\nCrib\n\nstrap\n");
    const auto lex = Lexicon::load(dir / "lex.txt");
    CHECK(lex.size() == 2);
    CHECK(lex.contains("crib"));
    CHECK_THROWS_AS(Lexicon::load(dir / "none.txt"), ConfigError);
  }

  TEST_CASE("full pipeline is deterministic") {
    const auto& lex = *testing::bundled_lexicon();
    const std::string text = "The strap snapped and my son was choking; we rushed to the hospital.";
    const auto a = preprocess(text, lex, "x");
    const auto b = preprocess(text, lex, "x");
    CHECK(a == b);
    CHECK(a.source_id == "x");
    CHECK(std::find(a.tokens.begin(), a.tokens.end(), "choke") != a.tokens.end());
  }
}
