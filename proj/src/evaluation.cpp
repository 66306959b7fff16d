#include "safetriage/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "safetriage/error.hpp"
#include "safetriage/rng.hpp"

namespace safetriage {

void ConfusionMatrix::add(bool predicted, bool actual) {
  if (predicted) {
    ++(actual ? tp : fp);
  } else {
    ++(actual ? fn : tn);
  }
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

nlohmann::json ConfusionMatrix::to_json() const { return {{"tp", tp}, {"fp", fp}, {"tn", tn}, {"fn", fn}}; }

nlohmann::json Metrics::to_json() const {
  nlohmann::json j;
  j["precision"] = precision ? nlohmann::json(*precision) : nlohmann::json();
  j["recall"] = recall ? nlohmann::json(*recall) : nlohmann::json();
  j["f1"] = f1;
  return j;
}

Metrics metrics(const ConfusionMatrix& cm) {
  Metrics m;
  if (cm.tp + cm.fp > 0) m.precision = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
  if (cm.tp + cm.fn > 0) m.recall = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
  if (m.precision && m.recall && *m.precision > 0 && *m.recall > 0) {
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  }
  return m;
}

ConfusionMatrix confusion(std::span<const double> scores, const Labels& y, double threshold) {
  if (scores.size() != y.size()) throw ShapeError("confusion: scores and labels differ in count");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < scores.size(); ++i) cm.add(scores[i] >= threshold, y[i] == 1);
  return cm;
}

double precision_at_k(std::span<const double> scores, const Labels& y, std::size_t k) {
  if (scores.size() != y.size()) throw ShapeError("precision@k: scores and labels differ in count");
  if (k == 0 || k > scores.size()) throw ArgumentError("precision@k: k must be in [1, n]");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::size_t hits = 0;
  for (std::size_t i = 0; i < k; ++i) hits += y[order[i]] == 1 ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(k);
}

std::vector<std::size_t> FoldPlan::members(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == fold) out.push_back(i);
  }
  return out;
}

FoldPlan make_fold_plan(const Labels& y, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw PlanError("a fold plan needs at least 2 folds");
  if (y.size() < k) throw PlanError("fewer examples than folds");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < y.size(); ++i) (y[i] == 1 ? pos : neg).push_back(i);
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(pos));
  rng.shuffle(std::span<std::size_t>(neg));
  FoldPlan plan{k, std::vector<std::size_t>(y.size()), seed};
  std::size_t slot = 0;
  for (auto i : pos) plan.assignments[i] = slot++ % k;
  for (auto i : neg) plan.assignments[i] = slot++ % k;
  return plan;
}

nlohmann::json CvReport::to_json() const {
  nlohmann::json folds_json = nlohmann::json::array();
  for (const auto& f : folds) {
    folds_json.push_back({{"confusion", f.cm.to_json()}, {"metrics", f.metrics.to_json()}, {"threshold", f.threshold},
                          {"n_train", f.n_train}, {"n_validation", f.n_validation}});
  }
  return {{"folds", folds_json}, {"pooled", {{"confusion", pooled.to_json()}, {"metrics", pooled_metrics.to_json()}}},
          {"seed", seed}};
}

namespace {

// Validation rows of each fold, mapped back to dataset positions.
std::vector<std::vector<std::size_t>> validation_rows(const std::vector<std::size_t>& eligible_rows,
                                                      const FoldPlan& plan) {
  if (plan.assignments.size() != eligible_rows.size()) {
    throw PlanError("fold plan covers " + std::to_string(plan.assignments.size()) + " examples, dataset has " +
                    std::to_string(eligible_rows.size()) + " validation candidates");
  }
  std::vector<std::vector<std::size_t>> out(plan.k);
  for (std::size_t i = 0; i < eligible_rows.size(); ++i) {
    if (plan.assignments[i] >= plan.k) throw PlanError("fold index out of range");
    out[plan.assignments[i]].push_back(eligible_rows[i]);
  }
  for (std::size_t f = 0; f < plan.k; ++f) {
    if (out[f].empty()) throw PlanError("fold " + std::to_string(f) + " has no validation examples");
  }
  return out;
}

std::vector<std::size_t> complement(std::size_t n, const std::vector<std::size_t>& held) {
  std::vector<bool> out(n, false);
  for (auto i : held) out[i] = true;
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < n; ++i) {
    if (!out[i]) rest.push_back(i);
  }
  return rest;
}

template <typename T>
std::vector<T> pick(const std::vector<T>& v, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(v[i]);
  return out;
}

CvReport finish(std::vector<FoldResult> folds, std::uint64_t seed) {
  CvReport r;
  r.seed = seed;
  for (const auto& f : folds) r.pooled += f.cm;
  r.pooled_metrics = metrics(r.pooled);
  r.folds = std::move(folds);
  return r;
}

FoldResult evaluate_fold(const TrainedModel& model, const Matrix& xv, const Labels& yv, std::size_t n_train) {
  FoldResult f;
  f.threshold = model.threshold();
  f.cm = confusion(model.score_batch(xv), yv, f.threshold);
  f.metrics = metrics(f.cm);
  f.n_train = n_train;
  f.n_validation = yv.size();
  return f;
}

}  // namespace

CvReport cross_validate(const ClassifierSpec& spec, const Matrix& x, const Labels& y,
                        const std::vector<bool>& eligible, const FoldPlan& plan, Execution exec) {
  if (x.rows() != y.size() || eligible.size() != y.size()) throw ShapeError("cross_validate: row counts differ");
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < eligible.size(); ++i) {
    if (eligible[i]) rows.push_back(i);
  }
  const auto held = validation_rows(rows, plan);
  std::vector<FoldResult> folds;
  for (const auto& val : held) {
    const auto train_rows = complement(y.size(), val);
    const auto model = train(spec, x.take_rows(train_rows), pick(y, train_rows), exec);
    folds.push_back(evaluate_fold(model, x.take_rows(val), pick(y, val), train_rows.size()));
  }
  return finish(std::move(folds), plan.seed);
}

CvReport cross_validate(const ClassifierSpec& spec, const std::vector<Document>& dataset, const FoldPlan& plan,
                        const PipelineConfig& config, std::shared_ptr<const Lexicon> lexicon, const SmokeList& smoke,
                        Execution exec) {
  const auto y = label_values(dataset);
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset[i].source == Source::AmazonReview) rows.push_back(i);
  }
  const auto held = validation_rows(rows, plan);
  std::vector<FoldResult> folds;
  for (const auto& val : held) {
    const auto train_rows = complement(dataset.size(), val);
    const auto train_docs = pick(dataset, train_rows);
    Matrix xt;
    const auto pipeline = fit_pipeline(train_docs, config, lexicon, smoke, nullptr, exec, &xt);
    const auto model = train(spec, xt, pick(y, train_rows), exec);
    folds.push_back(evaluate_fold(model, pipeline.transform(pick(dataset, val), exec), pick(y, val), train_rows.size()));
  }
  return finish(std::move(folds), plan.seed);
}

ReviewSets top_bottom_review(std::vector<ScoredDocument> pool, std::size_t k) {
  if (k == 0) throw ArgumentError("review set size must be at least 1");
  if (pool.size() < 2 * k) {
    throw ArgumentError("pool of " + std::to_string(pool.size()) + " documents is smaller than 2k = " +
                        std::to_string(2 * k));
  }
  std::sort(pool.begin(), pool.end(), [](const ScoredDocument& a, const ScoredDocument& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  });
  ReviewSets sets;
  sets.top.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
  sets.bottom.assign(pool.rbegin(), pool.rbegin() + static_cast<std::ptrdiff_t>(k));
  return sets;
}

void write_worksheet(std::ostream& out, const ReviewSets& sets) {
  auto emit = [&out](const std::vector<ScoredDocument>& docs, const char* group) {
    for (const auto& d : docs) {
      out << nlohmann::json{{"doc_id", d.id}, {"text", d.text}, {"model_score", d.score}, {"verdict", ""},
                            {"group", group}}
                 .dump()
          << '\n';
    }
  };
  emit(sets.top, "top");
  emit(sets.bottom, "bottom");
}

void write_worksheet(const std::filesystem::path& path, const ReviewSets& sets) {
  std::ofstream out(path);
  if (!out) throw IngestError("cannot write worksheet " + path.string());
  write_worksheet(out, sets);
}

std::string kappa_band(double kappa) {
  if (kappa < 0.0) return "poor agreement";
  if (kappa <= 0.20) return "slight agreement";
  if (kappa <= 0.40) return "fair agreement";
  if (kappa <= 0.60) return "moderate agreement";
  if (kappa <= 0.80) return "substantial agreement";
  return "almost perfect agreement";
}

KappaResult fleiss_kappa(const std::vector<std::vector<std::size_t>>& ratings) {
  if (ratings.empty()) throw InputError("no rated items");
  const std::size_t categories = ratings.front().size();
  const std::size_t n = std::accumulate(ratings.front().begin(), ratings.front().end(), std::size_t{0});
  if (n < 2) throw InputError("every item needs at least two ratings");
  std::vector<double> col(categories, 0.0);
  double p_sum = 0.0;
  for (const auto& item : ratings) {
    if (item.size() != categories) throw InputError("items differ in category count");
    if (std::accumulate(item.begin(), item.end(), std::size_t{0}) != n) {
      throw InputError("items differ in number of raters");
    }
    double sq = 0.0;
    for (std::size_t j = 0; j < categories; ++j) {
      col[j] += static_cast<double>(item[j]);
      sq += static_cast<double>(item[j] * item[j]);
    }
    p_sum += (sq - static_cast<double>(n)) / static_cast<double>(n * (n - 1));
  }
  const double items = static_cast<double>(ratings.size());
  KappaResult r;
  r.n_items = ratings.size();
  r.n_raters = n;
  r.p_bar = p_sum / items;
  for (double c : col) {
    const double p = c / (items * static_cast<double>(n));
    r.p_e += p * p;
  }
  if (r.p_e >= 1.0) throw StatTestError("kappa is undefined when every rating falls in one category");
  r.kappa = (r.p_bar - r.p_e) / (1.0 - r.p_e);
  r.band = kappa_band(r.kappa);
  return r;
}

double gamma_q(double a, double x) {
  if (!(a > 0) || x < 0) throw StatTestError("gamma_q: need a > 0 and x >= 0");
  if (x == 0) return 1.0;
  const double log_prefix = a * std::log(x) - x - std::lgamma(a);
  constexpr double eps = 1e-15;
  if (x < a + 1.0) {
    // series for P(a, x)
    double term = 1.0 / a, sum = term;
    for (int n = 1; n < 10000; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::abs(term) < std::abs(sum) * eps) break;
    }
    return 1.0 - sum * std::exp(log_prefix);
  }
  // Lentz continued fraction for Q(a, x)
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < eps) break;
  }
  return std::exp(log_prefix) * h;
}

double chi_squared_sf(double x, double df) {
  if (x <= 0) return 1.0;
  return gamma_q(df / 2.0, x / 2.0);
}

ChiSquaredResult chi_squared_2x2(const std::array<std::array<std::size_t, 2>, 2>& t) {
  const double a = static_cast<double>(t[0][0]), b = static_cast<double>(t[0][1]);
  const double c = static_cast<double>(t[1][0]), d = static_cast<double>(t[1][1]);
  const double r1 = a + b, r2 = c + d, c1 = a + c, c2 = b + d;
  if (r1 == 0 || r2 == 0 || c1 == 0 || c2 == 0) throw StatTestError("chi-squared: table has a zero marginal");
  const double n = r1 + r2;
  const double cross = a * d - b * c;
  ChiSquaredResult r;
  r.statistic = n * cross * cross / (r1 * r2 * c1 * c2);
  r.p_value = chi_squared_sf(r.statistic, 1.0);
  if (r.p_value < 1e-12) {
    r.p_text = "< 1e-12";
  } else {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", r.p_value);
    r.p_text = buf;
  }
  return r;
}

}  // namespace safetriage
