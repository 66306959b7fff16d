// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "../unit/helpers.hpp"
#include "safetriage/classifiers.hpp"
#include "safetriage/evaluation.hpp"
#include "safetriage/selection.hpp"
#include "safetriage/service.hpp"
#include "safetriage/stemmer.hpp"
#include "safetriage/tfidf.hpp"

using namespace safetriage;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail, double seconds) {
  std::printf("%s  %-28s %s (%.2fs)\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str(), seconds);
  std::fflush(stdout);
  if (!ok) ++failures;
}

// Runs one check; the body fills `detail` and returns pass/fail.
void run(const std::string& name, const std::function<bool(std::ostringstream&)>& body,
         double time_limit = 0.0) {
  std::ostringstream detail;
  const auto t0 = Clock::now();
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail << "exception: " << e.what();
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (time_limit > 0 && secs >= time_limit) {
    ok = false;
    detail << "; over the " << time_limit << "s limit";
  }
  report(name, ok, detail.str(), secs);
}

bool metric_arithmetic(std::ostringstream& d) {
  const auto ens = metrics({159, 166, 0, 165});
  const auto lr = metrics({33, 17, 0, 0});
  d << "ensemble F1 " << ens.f1 << ", LR precision " << *lr.precision;
  return std::abs(ens.f1 - 0.491) <= 0.002 && *lr.precision == 0.66;
}

bool tfidf_oracle(std::ostringstream& d) {
  using Doc = std::vector<std::string>;
  const std::vector<std::vector<Doc>> corpora{
      {{"a", "b"}, {"a", "c"}},
      {{"crib", "strap", "broke"}, {"strap", "broke", "again"}, {"love", "crib"}, {}, {"broke", "broke", "broke"}},
      {{"x"}, {"x"}, {"x", "x"}, {"y", "x"}},
      {{"the", "gate", "fell"}, {"the", "gate", "held"}, {"gate", "the", "gate"}, {"fell", "fell", "the"},
       {"held", "gate"}, {"the"}, {"gate", "fell", "the", "gate", "fell"}},
      {{"choke", "hazard"}, {"small", "part", "choke", "hazard"}, {"cute", "toy"}, {"toy", "part"},
       {"part", "small"}, {"hazard", "cute"}, {"toy", "toy", "toy"}, {"small", "toy", "choke"},
       {"cute", "small", "part"}, {"hazard"}},
  };
  std::size_t checked = 0;
  double worst = 0;
  for (std::size_t c = 0; c < corpora.size(); ++c) {
    std::vector<TokenSequence> corpus;
    for (const auto& doc : corpora[c]) corpus.push_back({"", doc});
    const std::size_t min_df = 1 + c % 2;
    const auto vocab = fit_tfidf(corpus, min_df);
    // brute force: count grams per doc, document frequencies, weight, normalize
    auto grams = [](const Doc& doc) {
      Doc g = doc;
      for (std::size_t i = 0; i + 1 < doc.size(); ++i) g.push_back(doc[i] + "_" + doc[i + 1]);
      return g;
    };
    std::map<std::string, double> df;
    for (const auto& doc : corpora[c]) {
      const auto g = grams(doc);
      for (const auto& t : std::set<std::string>(g.begin(), g.end())) df[t] += 1;
    }
    const double n = static_cast<double>(corpora[c].size());
    for (const auto& doc : corpora[c]) {
      std::map<std::string, double> w;
      for (const auto& t : grams(doc)) {
        if (df[t] >= static_cast<double>(min_df)) w[t] += 1;
      }
      double norm = 0;
      for (auto& [t, v] : w) {
        v *= std::log((1 + n) / (1 + df[t])) + 1;
        norm += v * v;
      }
      norm = std::sqrt(norm);
      const auto got = transform_tfidf({"", doc}, vocab);
      if (got.size() != w.size()) {
        d << "corpus " << c << ": " << got.size() << " terms, expected " << w.size();
        return false;
      }
      for (const auto& e : got) {
        worst = std::max(worst, std::abs(e.value - w.at(vocab.term(e.index)) / norm));
        ++checked;
      }
    }
  }
  d << checked << " weights over 5 corpora, max error " << worst;
  return worst < 1e-9;
}

bool stemmer_conformance(std::ostringstream& d) {
  std::ifstream in(std::string(SAFETRIAGE_TEST_DATA) + "/snowball_english.txt");
  if (!in) {
    d << "vocabulary file missing";
    return false;
  }
  std::string line;
  std::size_t total = 0, bad = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream f(line);
    std::string word, stem;
    f >> word >> stem;
    ++total;
    bad += porter2::stem(word) != stem;
  }
  d << total << " words, " << bad << " mismatches";
  return total > 0 && bad == 0;
}

bool lr_gradient(std::ostringstream& d) {
  Rng rng(2718);
  double worst = 0;
  for (int point = 0; point < 20; ++point) {
    const std::size_t p = 1 + rng.below(20);
    const auto data = testing::planted_dataset(60, p, std::min<std::size_t>(3, p), 500 + point);
    std::vector<double> theta(p + 1);
    for (auto& t : theta) t = testing::gaussian(rng);
    const auto g = logistic_gradient(data.x, data.y, theta, 0.001);
    for (std::size_t i = 0; i <= p; ++i) {
      const double h = 1e-5, keep = theta[i];
      theta[i] = keep + h;
      const double up = logistic_loss(data.x, data.y, theta, 0.001);
      theta[i] = keep - h;
      const double down = logistic_loss(data.x, data.y, theta, 0.001);
      theta[i] = keep;
      const double numeric = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(numeric - g[i]) / std::max(1e-8, std::abs(numeric) + std::abs(g[i])));
    }
  }
  const auto data = testing::planted_dataset(300, 12, 4, 77, 1.0);
  const auto model = train({Family::LogisticRegression}, data.x, data.y);
  const auto& hist = model.meta().loss_history;
  std::size_t increases = 0;
  for (std::size_t i = 1; i < hist.size(); ++i) increases += hist[i] > hist[i - 1];
  d << "max relative error " << worst << ", " << hist.size() << " accepted steps, " << increases << " increases";
  return worst < 1e-4 && increases == 0 && hist.size() > 1;
}

bool threshold_oracle(std::ostringstream& d) {
  Rng rng(31337);
  int agree = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(200);
    std::vector<double> s(n);
    Labels y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = trial % 4 == 0 ? static_cast<double>(rng.below(8)) / 7 : rng.uniform();
      y[i] = rng.uniform() < 0.25;
    }
    y[rng.below(n)] = 1;
    std::vector<double> sorted = s;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<double> cands{0.0, 1.0};
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) cands.push_back((sorted[i] + sorted[i + 1]) / 2);
    std::sort(cands.begin(), cands.end());
    const double pos = static_cast<double>(std::count(y.begin(), y.end(), 1));
    double best = -1, best_t = 0;
    for (double t : cands) {
      double tp = 0, pred = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (s[i] >= t) {
          pred += 1;
          tp += y[i];
        }
      }
      const double f1 = 2 * tp / (pred + pos);
      if (f1 > best) {
        best = f1;
        best_t = t;
      }
    }
    agree += select_threshold(s, y) == best_t;
  }
  d << agree << "/100 sets agree";
  return agree == 100;
}

bool kappa_checks(std::ostringstream& d) {
  bool perfect = true;
  Rng rng(99);
  for (int t = 0; t < 20; ++t) {
    const std::size_t items = 2 + rng.below(15), cats = 2 + rng.below(3), raters = 2 + rng.below(5);
    std::vector<std::vector<std::size_t>> r(items, std::vector<std::size_t>(cats, 0));
    for (std::size_t i = 0; i < items; ++i) r[i][i % cats] = raters;
    perfect &= fleiss_kappa(r).kappa == 1.0;
  }
  const double worked = fleiss_kappa({{2, 0}, {0, 2}, {1, 1}, {1, 1}}).kappa;
  double worst = 0;
  int compared = 0;
  while (compared < 200) {
    const std::size_t items = 1 + rng.below(20), cats = 2 + rng.below(4), raters = 2 + rng.below(6);
    std::vector<std::vector<std::size_t>> r(items, std::vector<std::size_t>(cats, 0));
    for (auto& item : r) {
      for (std::size_t k = 0; k < raters; ++k) ++item[rng.below(cats)];
    }
    const double N = static_cast<double>(items), n = static_cast<double>(raters);
    std::vector<double> p(cats, 0.0);
    double p_bar = 0;
    for (const auto& item : r) {
      double sq = 0;
      for (std::size_t j = 0; j < cats; ++j) {
        sq += double(item[j]) * double(item[j]);
        p[j] += double(item[j]) / (N * n);
      }
      p_bar += (sq - n) / (n * (n - 1)) / N;
    }
    double p_e = 0;
    for (double v : p) p_e += v * v;
    if (p_e >= 1) continue;
    worst = std::max(worst, std::abs(fleiss_kappa(r).kappa - (p_bar - p_e) / (1 - p_e)));
    ++compared;
  }
  d << "perfect " << (perfect ? "1.0" : "not 1.0") << ", worked example " << worked << ", oracle max error "
    << worst;
  return perfect && std::abs(worked) <= 1e-12 && worst <= 1e-12;
}

bool chi_squared(std::ostringstream& d) {
  const auto r = chi_squared_2x2({{{33, 17}, {8, 42}}});
  const double crit = chi_squared_sf(3.841, 1);
  d << "statistic " << r.statistic << ", p " << r.p_text << ", sf(3.841) " << crit;
  return std::abs(r.statistic - 25.84) <= 0.01 && r.p_value < 1e-4 && std::abs(crit - 0.05) <= 1e-3;
}

bool fold_plans(std::ostringstream& d) {
  Rng rng(4242);
  int good = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 5;
    const std::size_t n = k + rng.below(2000);
    Labels y(n);
    const double prev = 0.02 + 0.5 * rng.uniform();
    for (auto& v : y) v = rng.uniform() < prev;
    const auto plan = make_fold_plan(y, k, rng.next());
    std::vector<int> seen(n, 0);
    std::size_t lo = n, hi = 0, plo = n, phi = 0;
    for (std::size_t f = 0; f < k; ++f) {
      const auto m = plan.members(f);
      std::size_t pos = 0;
      for (auto i : m) {
        ++seen[i];
        pos += static_cast<std::size_t>(y[i]);
      }
      lo = std::min(lo, m.size());
      hi = std::max(hi, m.size());
      plo = std::min(plo, pos);
      phi = std::max(phi, pos);
    }
    const bool partition = std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
    good += partition && hi - lo <= 1 && phi - plo <= 1;
  }
  d << good << "/200 plans valid";
  return good == 200;
}

bool selection_recovery(std::ostringstream& d) {
  std::vector<std::size_t> recovered;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto data = testing::planted_dataset(500, 200, 10, seed, 1.0);
    const auto imp = compute_importance(data.x, data.y, seed);
    std::vector<std::size_t> order(imp.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return imp[a] > imp[b]; });
    std::size_t found = 0;
    for (std::size_t r = 0; r < 20; ++r) {
      found += std::count(data.informative.begin(), data.informative.end(), order[r]);
    }
    recovered.push_back(found);
  }
  std::sort(recovered.begin(), recovered.end());
  const double median = (recovered[4] + recovered[5]) / 2.0;
  d << "median " << median << " of 10 planted in the top 20 (range " << recovered.front() << "-" << recovered.back()
    << ")";
  return median >= 8;
}

bool end_to_end(std::ostringstream& d) {
  SyntheticConfig sc;  // 10,000 documents, 10% positives, 20% flipped labels
  const auto corpus = generate_corpus(sc);
  // 7,000 labeled for training, 3,000 held out as the unlabeled pool
  std::vector<std::size_t> idx(corpus.docs.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(derive_seed(sc.seed, 1));
  rng.shuffle(std::span<std::size_t>(idx));
  std::vector<Document> training, pool;
  std::map<std::string, int> truth;
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto& doc = corpus.docs[idx[r]];
    if (r < 7000) {
      training.push_back(doc);
    } else {
      Document u = doc;
      u.label = Label::Unlabeled;
      pool.push_back(u);
      truth[u.id] = corpus.truth[idx[r]];
    }
  }
  TrainConfig cfg;  // default pipeline: 100-d embedding, 20 epochs, select 2,400
  cfg.spec.family = Family::LogisticRegression;
  const auto bundle = train_bundle(training, cfg, testing::bundled_lexicon(), testing::synthetic_smoke());
  const auto sets = top_bottom_review(bundle.score_documents(pool), 50);
  std::size_t hits = 0;
  for (const auto& doc : sets.top) hits += static_cast<std::size_t>(truth.at(doc.id));
  const double p50 = static_cast<double>(hits) / 50;
  // random surfacing at 10% prevalence finds 5 of 50
  const auto chi = chi_squared_2x2({{{hits, 50 - hits}, {5, 45}}});
  d << "precision@50 " << p50 << ", chi-squared " << chi.statistic << " (p " << chi.p_text << ")";
  return p50 >= 0.80 && chi.p_value < 0.01;
}

bool ensemble_exactness(std::ostringstream& d) {
  const auto data = testing::planted_dataset(200, 8, 4, 5, 1.0);
  ClassifierSpec spec;
  spec.family = Family::Ensemble;
  const auto ens = train(spec, data.x, data.y);
  const auto& bases = dynamic_cast<const EnsembleClassifier&>(ens.impl()).bases();
  Rng rng(8);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> x(8);
    const double scale = std::pow(10.0, static_cast<double>(rng.below(5)) - 2);
    for (auto& v : x) v = scale * testing::gaussian(rng);
    double mean = 0;
    for (const auto& b : bases) mean += b.score(x);
    mean /= static_cast<double>(bases.size());
    worst = std::max(worst, std::abs(ens.score(x) - mean));
  }
  d << bases.size() << " bases, max deviation " << worst << " over 1000 inputs";
  return bases.size() == 5 && worst <= 1e-12;
}

bool service_loop(std::ostringstream& d) {
  testing::TempDir dir;
  ServiceConfig cfg;
  cfg.train = testing::quick_train_config();
  cfg.base_training = testing::labeled_corpus(400, 5);
  cfg.lexicon = testing::bundled_lexicon();
  cfg.smoke = testing::synthetic_smoke();
  cfg.data_dir = dir.path();

  SyntheticConfig mc;
  mc.documents = 90;
  mc.prevalence = 0.0;
  mc.label_noise = 0.0;
  mc.seed = 12;
  mc.id_prefix = "mark";
  mc.marker_rate = 1.0;
  auto marked = generate_corpus(mc).docs;
  for (auto& doc : marked) doc.label = Label::Unlabeled;
  const std::vector<Document> feedback_docs(marked.begin(), marked.begin() + 60);
  const std::vector<Document> held_out(marked.begin() + 60, marked.end());

  VerdictState live;
  double before = 0, after = 0;
  {
    TriageService svc(cfg);
    svc.install_model(train_bundle(cfg.base_training, cfg.train, cfg.lexicon, *cfg.smoke));
    svc.add_documents(feedback_docs);
    auto mean = [&] {
      double s = 0;
      for (const auto& doc : held_out) s += svc.score_text(doc.text).score;
      return s / static_cast<double>(held_out.size());
    };
    before = mean();
    for (const auto& doc : feedback_docs) svc.submit_verdict(doc.id, Verdict::TruePositive, "investigator");
    if (!svc.retrain().trained) {
      d << "retrain did not run";
      return false;
    }
    after = mean();
    live = svc.verdict_state();
  }
  const bool replay_ok = FeedbackStore::replay(FeedbackStore::read_log(dir / "feedback.jsonl")) == live;
  TriageService restarted(cfg);
  const bool restart_ok = restarted.verdict_state() == live;
  d << "replay " << (replay_ok && restart_ok ? "exact" : "differs") << ", marked-token score " << before << " -> "
    << after << ", no UI build needed";
  return replay_ok && restart_ok && live.size() == 60 && after > before;
}

}  // namespace

int main() {
  run("metric-arithmetic", metric_arithmetic);
  run("tfidf-oracle", tfidf_oracle, 1.0);
  run("stemmer-conformance", stemmer_conformance);
  run("lr-gradient-check", lr_gradient);
  run("threshold-oracle", threshold_oracle);
  run("fleiss-kappa", kappa_checks);
  run("chi-squared", chi_squared);
  run("fold-plan-properties", fold_plans);
  run("feature-selection-recovery", selection_recovery, 30.0);
  run("synthetic-end-to-end", end_to_end, 300.0);
  run("ensemble-exactness", ensemble_exactness);
  run("service-loop", service_loop);
  std::printf("%d failed\n", failures);
  return failures == 0 ? 0 : 1;
}
