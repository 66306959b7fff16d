#include <doctest.h>

#include <fstream>
#include <sstream>

#include "safetriage/stemmer.hpp"
#include "safetriage/textprep.hpp"

using namespace safetriage;

TEST_SUITE("stemmer") {
  TEST_CASE("reference vocabulary matches exactly") {
    std::ifstream in(std::string(SAFETRIAGE_TEST_DATA) + "/snowball_english.txt");
    REQUIRE(in);
    std::string line;
    std::size_t total = 0, mismatches = 0;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::istringstream fields(line);
      std::string word, expected;
      fields >> word >> expected;
      ++total;
      const auto got = porter2::stem(word);
      if (got != expected) {
        if (++mismatches <= 10) MESSAGE(word << ": got " << got << ", expected " << expected);
      }
    }
    CHECK(total == 28151);
    CHECK(mismatches == 0);
  }

  TEST_CASE("hand-picked stems") {
    CHECK(porter2::stem("safely") == "safe");
    // R2 is empty in "safer", so the -er suffix stays
    CHECK(porter2::stem("safer") == "safer");
    CHECK(porter2::stem("run") == "run");
    CHECK(porter2::stem("screaming") == "scream");
    CHECK(porter2::stem("choking") == "choke");
    CHECK(porter2::stem("hazards") == "hazard");
    CHECK(porter2::stem("news") == "news");
    CHECK(porter2::stem("dying") == "die");
    CHECK(porter2::stem("generously") == "generous");
    CHECK(porter2::stem("is") == "is");
  }

  TEST_CASE("second pass is a no-op on review vocabulary") {
    const std::vector<std::string> words{"choking", "suffocation", "strangled", "burned", "screaming", "falling",
                                         "dangerous", "hazardous", "injured", "broken", "swallowed", "batteries",
                                         "magnets", "overheating", "exploded", "pinched", "tipped",
                                         "sharp", "emergency", "hospital", "crib", "stroller", "carseat"};
    for (const auto& w : words) {
      const auto once = porter2::stem(w);
      CHECK_MESSAGE(porter2::stem(once) == once, w);
    }
  }

  TEST_CASE("second pass can change some stems") {
    CHECK(porter2::stem("abase") == "abas");
    CHECK(porter2::stem("abas") == "aba");
  }

  TEST_CASE("stem replaces every token") {
    const auto seq = stem({"safely", "screaming", "run"}, "d1");
    CHECK(seq.source_id == "d1");
    CHECK(seq.tokens == std::vector<std::string>{"safe", "scream", "run"});
  }
}
