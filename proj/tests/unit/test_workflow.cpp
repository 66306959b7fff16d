#include <doctest.h>

#include <algorithm>
#include <omp.h>

#include "helpers.hpp"
#include "safetriage/error.hpp"
#include "safetriage/pipeline.hpp"
#include "safetriage/workflow.hpp"

using namespace safetriage;

namespace {

const ModelBundle& shared_bundle() {
  static const ModelBundle bundle = train_bundle(testing::labeled_corpus(400, 3), testing::quick_train_config(),
                                                 testing::bundled_lexicon(), testing::synthetic_smoke());
  return bundle;
}

std::vector<Document> unseen(std::size_t n) {
  SyntheticConfig sc;
  sc.documents = n;
  sc.seed = 99;
  sc.id_prefix = "pool";
  return generate_corpus(sc).docs;
}

}  // namespace

TEST_SUITE("workflow") {
  TEST_CASE("synthetic corpus shape") {
    SyntheticConfig sc;
    sc.documents = 1000;
    const auto c = generate_corpus(sc);
    REQUIRE(c.docs.size() == 1000);
    CHECK(std::count(c.truth.begin(), c.truth.end(), 1) == 100);
    std::size_t flipped = 0;
    for (std::size_t i = 0; i < 1000; ++i) flipped += label_value(c.docs[i]) != c.truth[i];
    CHECK(flipped == 200);
    CHECK(c.docs[0].id == "syn-000000");
    CHECK(generate_corpus(sc).docs == c.docs);
    sc.prevalence = 1.5;
    CHECK_THROWS_AS(generate_corpus(sc), ArgumentError);
  }

  TEST_CASE("labels must be present") {
    Document d;
    CHECK_THROWS_AS(label_value(d), DataError);
    d.label = Label::MentionsSafetyIssue;
    CHECK(label_value(d) == 1);
  }

  TEST_CASE("pipeline keeps the hand-made columns") {
    const auto& p = shared_bundle().pipeline;
    const auto layout = p.layout();
    const auto& kept = p.mask().kept;
    CHECK(std::binary_search(kept.begin(), kept.end(), layout.star_index()));
    CHECK(std::binary_search(kept.begin(), kept.end(), layout.smoke_index()));
    CHECK(p.width() <= 200);
    CHECK(p.width() == shared_bundle().model.width());
    const auto x = p.transform(unseen(20));
    CHECK(x.rows() == 20);
    CHECK(x.cols() == p.width());
  }

  TEST_CASE("features do not depend on batch position") {
    const auto& p = shared_bundle().pipeline;
    const auto docs = unseen(30);
    const auto all = p.transform(docs);
    std::vector<Document> reversed(docs.rbegin(), docs.rend());
    const auto back = p.transform(reversed);
    for (std::size_t i = 0; i < 30; ++i) {
      const auto a = all.row(i);
      const auto b = back.row(29 - i);
      CHECK(std::equal(a.begin(), a.end(), b.begin()));
    }
    const auto single = p.features(docs[4]);
    CHECK(single.dense() == p.features(docs, Execution::Serial)[4].dense());
  }

  TEST_CASE("serial and parallel transforms agree") {
    omp_set_num_threads(4);
    const auto& p = shared_bundle().pipeline;
    const auto docs = unseen(60);
    const auto a = p.transform(docs, Execution::Serial);
    const auto b = p.transform(docs, Execution::Parallel);
    CHECK(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
  }

  TEST_CASE("training is reproducible") {
    const auto again = train_bundle(testing::labeled_corpus(400, 3), testing::quick_train_config(),
                                    testing::bundled_lexicon(), testing::synthetic_smoke());
    const auto docs = unseen(40);
    CHECK(again.score(docs) == shared_bundle().score(docs));
  }

  TEST_CASE("bundle file round trip") {
    testing::TempDir dir;
    shared_bundle().save(dir / "model.json");
    const auto loaded = ModelBundle::load(dir / "model.json", testing::bundled_lexicon());
    const auto docs = unseen(40);
    CHECK(loaded.score(docs) == shared_bundle().score(docs));
    CHECK(loaded.master_seed == shared_bundle().master_seed);

    auto j = shared_bundle().to_json();
    j["format_version"] = 99;
    CHECK_THROWS_AS(ModelBundle::from_json(j, testing::bundled_lexicon()), FormatError);
    testing::write_file(dir / "bad.json", "{not json");
    CHECK_THROWS_AS(ModelBundle::load(dir / "bad.json", testing::bundled_lexicon()), FormatError);
  }

  TEST_CASE("scored documents carry ids and text") {
    const auto docs = unseen(10);
    const auto scored = shared_bundle().score_documents(docs);
    REQUIRE(scored.size() == 10);
    for (std::size_t i = 0; i < 10; ++i) {
      CHECK(scored[i].id == docs[i].id);
      CHECK(scored[i].text == docs[i].text);
      CHECK(scored[i].score >= 0.0);
      CHECK(scored[i].score <= 1.0);
    }
  }

  TEST_CASE("hazard text outranks praise") {
    std::vector<Document> docs(2);
    docs[0].id = "a";
    docs[0].text = "The strap snapped and my baby was choking, we rushed to the emergency room.";
    docs[1].id = "b";
    docs[1].text = "Lovely soft blanket, my daughter adores it and it washes well.";
    docs[1].star_rating = 5;
    const auto s = shared_bundle().score(docs);
    CHECK(s[0] > s[1]);
  }
}
