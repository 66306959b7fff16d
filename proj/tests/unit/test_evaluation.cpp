#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "helpers.hpp"
#include "safetriage/error.hpp"
#include "safetriage/evaluation.hpp"
#include "safetriage/synthetic.hpp"

using namespace safetriage;

namespace {

double fleiss_oracle(const std::vector<std::vector<std::size_t>>& r) {
  const double N = static_cast<double>(r.size());
  double n = 0;
  for (auto v : r[0]) n += static_cast<double>(v);
  double p_bar = 0;
  std::vector<double> p(r[0].size(), 0.0);
  for (const auto& item : r) {
    double sq = 0;
    for (std::size_t j = 0; j < item.size(); ++j) {
      const double c = static_cast<double>(item[j]);
      sq += c * c;
      p[j] += c / (N * n);
    }
    p_bar += (sq - n) / (n * (n - 1)) / N;
  }
  double p_e = 0;
  for (double v : p) p_e += v * v;
  return (p_bar - p_e) / (1 - p_e);
}

}  // namespace

TEST_SUITE("evaluation") {
  TEST_CASE("metrics on reference counts") {
    const auto ens = metrics({159, 166, 0, 165});
    CHECK(*ens.precision == doctest::Approx(159.0 / 325));
    CHECK(*ens.recall == doctest::Approx(159.0 / 324));
    CHECK(std::abs(ens.f1 - 0.491) <= 0.002);
    const auto lr = metrics({33, 17, 0, 0});
    CHECK(*lr.precision == 0.66);
  }

  TEST_CASE("undefined metrics") {
    const auto m = metrics({0, 0, 5, 3});
    CHECK_FALSE(m.precision);
    CHECK(*m.recall == 0.0);
    CHECK(m.f1 == 0.0);
    const auto none = metrics({});
    CHECK_FALSE(none.precision);
    CHECK_FALSE(none.recall);
    CHECK(none.f1 == 0.0);
    CHECK(metrics({}).to_json()["precision"].is_null());
  }

  TEST_CASE("metrics agree with raw predictions") {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t n = 1 + rng.below(300);
      std::vector<double> scores(n);
      Labels y(n);
      for (std::size_t i = 0; i < n; ++i) {
        scores[i] = rng.uniform();
        y[i] = rng.uniform() < 0.4;
      }
      const double t = rng.uniform();
      const auto cm = confusion(scores, y, t);
      CHECK(cm.total() == n);
      long tp = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const bool pred = scores[i] >= t;
        tp += pred && y[i];
        fp += pred && !y[i];
        fn += !pred && y[i];
      }
      const auto m = metrics(cm);
      if (tp + fp > 0) CHECK(*m.precision == doctest::Approx(double(tp) / (tp + fp)));
      if (tp + fn > 0) CHECK(*m.recall == doctest::Approx(double(tp) / (tp + fn)));
      if (tp > 0) CHECK(m.f1 == doctest::Approx(2.0 * tp / (2.0 * tp + fp + fn)));
      else CHECK(m.f1 == 0.0);
    }
  }

  TEST_CASE("precision at k") {
    const std::vector<double> s{0.9, 0.1, 0.8, 0.8, 0.3};
    const Labels y{1, 0, 0, 1, 1};
    CHECK(precision_at_k(s, y, 1) == 1.0);
    CHECK(precision_at_k(s, y, 2) == 0.5);
    CHECK(precision_at_k(s, y, 3) == doctest::Approx(2.0 / 3));
    CHECK_THROWS_AS(precision_at_k(s, y, 0), ArgumentError);
    CHECK_THROWS_AS(precision_at_k(s, y, 6), ArgumentError);
  }

  TEST_CASE("fold sizes over the amazon set") {
    Labels y(3773, 0);
    std::fill(y.begin(), y.begin() + 424, 1);
    const auto plan = make_fold_plan(y, 5, 1);
    std::multiset<std::size_t> sizes;
    for (std::size_t f = 0; f < 5; ++f) sizes.insert(plan.members(f).size());
    CHECK(sizes == std::multiset<std::size_t>{754, 754, 755, 755, 755});
  }

  TEST_CASE("fold plans partition and stratify") {
    Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t k = 2 + rng.below(9);
      const std::size_t n = k + rng.below(500);
      Labels y(n);
      const double prev = rng.uniform();
      for (auto& v : y) v = rng.uniform() < prev;
      const auto plan = make_fold_plan(y, k, rng.next());
      REQUIRE(plan.assignments.size() == n);
      std::vector<std::size_t> seen(n, 0);
      std::size_t min_size = n, max_size = 0, min_pos = n, max_pos = 0;
      for (std::size_t f = 0; f < k; ++f) {
        const auto m = plan.members(f);
        std::size_t pos = 0;
        for (auto i : m) {
          ++seen[i];
          pos += static_cast<std::size_t>(y[i]);
        }
        min_size = std::min(min_size, m.size());
        max_size = std::max(max_size, m.size());
        min_pos = std::min(min_pos, pos);
        max_pos = std::max(max_pos, pos);
      }
      CHECK(std::all_of(seen.begin(), seen.end(), [](std::size_t c) { return c == 1; }));
      CHECK(max_size - min_size <= 1);
      CHECK(max_pos - min_pos <= 1);
    }
    CHECK_THROWS_AS(make_fold_plan(Labels{0, 1}, 1, 1), PlanError);
    CHECK_THROWS_AS(make_fold_plan(Labels{0, 1, 1}, 5, 1), PlanError);
    CHECK(make_fold_plan(Labels(40, 0), 5, 9).assignments == make_fold_plan(Labels(40, 0), 5, 9).assignments);
  }

  TEST_CASE("cross validation on features keeps augmentation in training") {
    const auto data = testing::planted_dataset(150, 5, 3, 3, 2.5);
    std::vector<bool> eligible(150, true);
    Labels eligible_y;
    for (std::size_t i = 0; i < 150; ++i) {
      if (i % 5 == 0) eligible[i] = false;
      else eligible_y.push_back(data.y[i]);
    }
    const auto plan = make_fold_plan(eligible_y, 5, 2);
    const auto report = cross_validate({Family::LogisticRegression}, data.x, data.y, eligible, plan);
    REQUIRE(report.folds.size() == 5);
    std::size_t validated = 0;
    ConfusionMatrix pooled;
    for (const auto& f : report.folds) {
      validated += f.n_validation;
      CHECK(f.n_train + f.n_validation == 150);
      pooled += f.cm;
    }
    CHECK(validated == 120);
    CHECK(pooled == report.pooled);
    CHECK(report.pooled_metrics.f1 > 0.8);
    const auto j = report.to_json();
    CHECK(j["folds"].size() == 5);
  }

  TEST_CASE("document cross validation on a separable corpus") {
    SyntheticConfig sc;
    sc.documents = 500;
    sc.prevalence = 0.2;
    sc.label_noise = 0.0;
    sc.seed = 21;
    auto corpus = generate_corpus(sc).docs;
    std::vector<Document> amazon_only = corpus;
    for (int i = 0; i < 40; ++i) {
      Document d;
      d.id = "recall-" + std::to_string(i);
      d.text = "Recall: the crib rail can detach, posing a strangulation and fall hazard to infants.";
      d.source = Source::CpscRecall;
      d.label = Label::MentionsSafetyIssue;
      d.star_rating = 1;
      corpus.push_back(d);
    }
    PipelineConfig pc;
    pc.embedding.dimension = 8;
    pc.embedding.epochs = 3;
    pc.select_k = 150;
    const auto plan = make_fold_plan(label_values(amazon_only), 5, 4);
    const auto smoke = SmokeList::from_words(synthetic_smoke_words(), "synthetic");
    const auto report = cross_validate({Family::LogisticRegression}, corpus, plan, pc, testing::bundled_lexicon(), smoke);
    std::size_t validated = 0;
    for (const auto& f : report.folds) validated += f.n_validation;
    CHECK(validated == 500);
    CHECK(report.pooled.total() == 500);
    CHECK(report.pooled_metrics.f1 >= 0.95);

    FoldPlan broken = plan;
    for (auto& a : broken.assignments) {
      if (a == 3) a = 0;
    }
    CHECK_THROWS_AS(cross_validate({}, corpus, broken, pc, testing::bundled_lexicon(), smoke), PlanError);
    FoldPlan short_plan = plan;
    short_plan.assignments.pop_back();
    CHECK_THROWS_AS(cross_validate({}, corpus, short_plan, pc, testing::bundled_lexicon(), smoke), PlanError);
  }

  TEST_CASE("top and bottom sets") {
    std::vector<ScoredDocument> pool;
    Rng rng(6);
    for (int i = 0; i < 1000; ++i) {
      pool.push_back({"d" + std::to_string(1000 + i), "t", static_cast<double>(rng.below(50)) / 50});
    }
    const auto sets = top_bottom_review(pool, 50);
    REQUIRE(sets.top.size() == 50);
    REQUIRE(sets.bottom.size() == 50);
    std::set<std::string> top_ids;
    for (const auto& d : sets.top) top_ids.insert(d.id);
    double min_top = 1;
    for (const auto& d : sets.top) min_top = std::min(min_top, d.score);
    for (const auto& d : pool) {
      if (!top_ids.contains(d.id)) CHECK(d.score <= min_top);
    }
    for (std::size_t i = 1; i < 50; ++i) {
      CHECK(sets.top[i - 1].score >= sets.top[i].score);
      CHECK(sets.bottom[i - 1].score <= sets.bottom[i].score);
    }
    CHECK(top_bottom_review(pool, 50).top[7].id == sets.top[7].id);

    std::ostringstream sheet;
    write_worksheet(sheet, sets);
    std::istringstream in(sheet.str());
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) {
      const auto j = nlohmann::json::parse(line);
      CHECK(j["verdict"] == "");
      CHECK(j.contains("doc_id"));
      CHECK(j.contains("model_score"));
      ++lines;
    }
    CHECK(lines == 100);
  }

  TEST_CASE("top and bottom edge cases") {
    std::vector<ScoredDocument> pool{{"b", "", 0.5}, {"a", "", 0.5}, {"c", "", 0.9}, {"d", "", 0.1}};
    const auto sets = top_bottom_review(pool, 2);
    CHECK(sets.top[0].id == "c");
    CHECK(sets.top[1].id == "a");
    CHECK(sets.bottom[0].id == "d");
    CHECK(sets.bottom[1].id == "b");
    CHECK_THROWS_AS(top_bottom_review(pool, 3), ArgumentError);
  }

  TEST_CASE("fleiss kappa examples") {
    const auto perfect = fleiss_kappa({{2, 0}, {0, 2}, {2, 0}, {0, 2}});
    CHECK(perfect.kappa == 1.0);
    const auto worked = fleiss_kappa({{2, 0}, {0, 2}, {1, 1}, {1, 1}});
    CHECK(worked.p_bar == doctest::Approx(0.5));
    CHECK(worked.p_e == doctest::Approx(0.5));
    CHECK(std::abs(worked.kappa) <= 1e-12);
    CHECK(kappa_band(0.713) == "substantial agreement");
    CHECK(kappa_band(0.1) == "slight agreement");
    CHECK(kappa_band(-0.2) == "poor agreement");
    CHECK(kappa_band(0.9) == "almost perfect agreement");
    CHECK_THROWS_AS(fleiss_kappa({{2, 0}, {1, 0}}), InputError);
    CHECK_THROWS_AS(fleiss_kappa({{1, 0}, {0, 1}}), InputError);
    CHECK_THROWS_AS(fleiss_kappa({{3, 0}, {3, 0}}), StatTestError);
  }

  TEST_CASE("fleiss kappa matches the formula on random ratings") {
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t items = 1 + rng.below(20), cats = 2 + rng.below(4), raters = 2 + rng.below(6);
      std::vector<std::vector<std::size_t>> r(items, std::vector<std::size_t>(cats, 0));
      for (auto& item : r) {
        for (std::size_t k = 0; k < raters; ++k) ++item[rng.below(cats)];
      }
      double p_check = 0;
      std::vector<std::size_t> col(cats, 0);
      for (const auto& item : r) {
        for (std::size_t j = 0; j < cats; ++j) col[j] += item[j];
      }
      for (auto c : col) p_check = std::max(p_check, double(c));
      if (p_check == double(items * raters)) continue;  // one category only
      const auto res = fleiss_kappa(r);
      CHECK(std::abs(res.kappa - fleiss_oracle(r)) <= 1e-12);
      CHECK(res.kappa <= 1.0);
      CHECK(res.n_items == items);
      CHECK(res.n_raters == raters);
    }
  }

  TEST_CASE("chi-squared examples") {
    const auto lr = chi_squared_2x2({{{33, 17}, {8, 42}}});
    CHECK(std::abs(lr.statistic - 25.84) <= 0.01);
    CHECK(lr.p_value < 1e-4);
    const auto flat = chi_squared_2x2({{{10, 10}, {10, 10}}});
    CHECK(flat.statistic == 0.0);
    CHECK(flat.p_value == doctest::Approx(1.0));
    CHECK_THROWS_AS(chi_squared_2x2({{{0, 0}, {4, 5}}}), StatTestError);
    CHECK_THROWS_AS(chi_squared_2x2({{{0, 3}, {0, 5}}}), StatTestError);
    CHECK(chi_squared_2x2({{{500, 0}, {0, 500}}}).p_text == "< 1e-12");
  }

  TEST_CASE("chi-squared tail probabilities") {
    CHECK(std::abs(chi_squared_sf(3.841, 1) - 0.05) <= 1e-3);
    CHECK(std::abs(chi_squared_sf(15.137, 1) - 1e-4) <= 2e-5);
    for (double x : {0.01, 0.5, 1.0, 2.7, 6.63, 10.8, 30.0, 80.0}) {
      CHECK(chi_squared_sf(x, 1) == doctest::Approx(std::erfc(std::sqrt(x / 2))).epsilon(1e-10));
      CHECK(chi_squared_sf(x, 2) == doctest::Approx(std::exp(-x / 2)).epsilon(1e-10));
    }
    CHECK(gamma_q(3.0, 2.0) == doctest::Approx(std::exp(-2.0) * (1 + 2 + 2)).epsilon(1e-12));
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
      std::array<std::array<std::size_t, 2>, 2> t{};
      for (auto& row : t) {
        for (auto& c : row) c = 1 + rng.below(60);
      }
      const double a = t[0][0], b = t[0][1], c = t[1][0], d = t[1][1], n = a + b + c + d;
      const double expected = n * (a * d - b * c) * (a * d - b * c) / ((a + b) * (c + d) * (a + c) * (b + d));
      const auto res = chi_squared_2x2(t);
      CHECK(res.statistic >= 0.0);
      CHECK(res.statistic == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}
