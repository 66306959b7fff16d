#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "safetriage/classifiers.hpp"
#include "safetriage/pipeline.hpp"

namespace safetriage {

struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  void add(bool predicted, bool actual);
  ConfusionMatrix& operator+=(const ConfusionMatrix& o);
  std::size_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionMatrix&) const = default;
  nlohmann::json to_json() const;
};

/// Precision and recall are empty when their denominator is zero; F1 is 0
/// whenever either is empty or zero.
struct Metrics {
  std::optional<double> precision;
  std::optional<double> recall;
  double f1 = 0.0;
  nlohmann::json to_json() const;
};

Metrics metrics(const ConfusionMatrix& cm);

/// Counts with "positive" meaning score >= threshold.
ConfusionMatrix confusion(std::span<const double> scores, const Labels& y, double threshold);

/// Fraction of positives among the k highest scores (ties by lower index).
double precision_at_k(std::span<const double> scores, const Labels& y, std::size_t k);

struct FoldPlan {
  std::size_t k = 5;
  std::vector<std::size_t> assignments;  // fold of each example
  std::uint64_t seed = 0;

  std::vector<std::size_t> members(std::size_t fold) const;
};

/// Stratified plan: shuffled positives are dealt round-robin over the folds,
/// then shuffled negatives continue the same rotation, which balances both
/// fold sizes and positive counts to within one. Throws PlanError when
/// k < 2 or there are fewer examples than folds.
FoldPlan make_fold_plan(const Labels& y, std::size_t k, std::uint64_t seed);

struct FoldResult {
  ConfusionMatrix cm;
  Metrics metrics;
  double threshold = 0.0;
  std::size_t n_train = 0;
  std::size_t n_validation = 0;
};

struct CvReport {
  std::vector<FoldResult> folds;
  ConfusionMatrix pooled;
  Metrics pooled_metrics;
  std::uint64_t seed = 0;
  nlohmann::json to_json() const;
};

/// Cross-validation over precomputed features. Rows with `eligible[i]`
/// false (augmentation data) always train and are never validated; `plan`
/// covers the eligible rows in order.
CvReport cross_validate(const ClassifierSpec& spec, const Matrix& x, const Labels& y,
                        const std::vector<bool>& eligible, const FoldPlan& plan,
                        Execution exec = Execution::Parallel);

/// Leak-free cross-validation over documents: the feature pipeline,
/// selection included, is refit inside every fold. Only Amazon reviews are
/// validated; `plan` covers them in dataset order.
CvReport cross_validate(const ClassifierSpec& spec, const std::vector<Document>& dataset, const FoldPlan& plan,
                        const PipelineConfig& config, std::shared_ptr<const Lexicon> lexicon, const SmokeList& smoke,
                        Execution exec = Execution::Parallel);

struct ScoredDocument {
  std::string id;
  std::string text;
  double score = 0.0;
};

struct ReviewSets {
  std::vector<ScoredDocument> top;     // descending score
  std::vector<ScoredDocument> bottom;  // ascending score
};

/// Orders the pool by (score descending, id ascending); the top set is the
/// first k and the bottom set the last k. Throws ArgumentError when the pool
/// holds fewer than 2k documents.
ReviewSets top_bottom_review(std::vector<ScoredDocument> pool, std::size_t k);

/// One JSON line per surfaced document: {doc_id, text, model_score, verdict, group}.
void write_worksheet(std::ostream& out, const ReviewSets& sets);
void write_worksheet(const std::filesystem::path& path, const ReviewSets& sets);

struct KappaResult {
  double kappa = 0.0;
  double p_bar = 0.0;
  double p_e = 0.0;
  std::size_t n_items = 0;
  std::size_t n_raters = 0;
  std::string band;
};

/// Landis and Koch interpretation of a kappa value.
std::string kappa_band(double kappa);

/// Fleiss' kappa over an items x categories count matrix. Throws InputError
/// when items have different rater counts or fewer than two raters, and
/// StatTestError when chance agreement is 1.
KappaResult fleiss_kappa(const std::vector<std::vector<std::size_t>>& ratings);

/// Regularized upper incomplete gamma Q(a, x).
double gamma_q(double a, double x);

/// Survival function of chi-square with `df` degrees of freedom.
double chi_squared_sf(double x, double df);

struct ChiSquaredResult {
  double statistic = 0.0;
  double p_value = 1.0;
  /// "< 1e-12" below that bound, otherwise three significant digits.
  std::string p_text;
};

/// Pearson chi-squared for [[a, b], [c, d]] with one degree of freedom, no
/// continuity correction. Throws StatTestError on a zero marginal.
ChiSquaredResult chi_squared_2x2(const std::array<std::array<std::size_t, 2>, 2>& table);

}  // namespace safetriage
