#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "safetriage/kernels.hpp"
#include "safetriage/matrix.hpp"

namespace safetriage {

enum class Family { LogisticRegression, LinearSVM, NaiveBayes, RandomForest, KNN, Ensemble };

std::string_view to_string(Family f);
/// Accepts lr, svm, nb, rf, knn, ensemble. Throws ArgumentError otherwise.
Family parse_family(std::string_view name);

struct ClassifierSpec {
  Family family = Family::LogisticRegression;
  double lambda = 0.001;          // L2 strength, logistic regression
  double svm_lambda = 0.001;      // L2 strength, linear SVM
  std::size_t max_iterations = 5000;
  double tolerance = 1e-6;        // gradient infinity norm
  std::size_t svm_iterations = 1000;
  std::size_t trees = 10;
  std::size_t max_features = 0;   // 0 = floor(sqrt(p))
  std::size_t k = 5;
  std::uint64_t seed = 1;

  nlohmann::json to_json() const;
  static ClassifierSpec from_json(const nlohmann::json& j);
};

/// Learned state of one family. `raw` is the score before calibration.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual std::size_t width() const = 0;
  virtual double raw(std::span<const double> x) const = 0;
  virtual std::vector<double> raw_batch(const Matrix& x, Execution exec) const;
  virtual nlohmann::json to_json() const = 0;
};

/// Platt sigmoid: p = 1 / (1 + exp(a * margin + b)).
struct PlattCalibration {
  double a = 0.0;
  double b = 0.0;
  double operator()(double margin) const;
};

/// Fits (a, b) by Newton's method with backtracking on smoothed targets.
PlattCalibration fit_platt(std::span<const double> margins, const Labels& y);

struct TrainingMeta {
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::size_t feature_width = 0;
  std::vector<double> loss_history;  // accepted-step losses (LR, SVM)
  std::size_t iterations = 0;
};

class TrainedModel {
 public:
  TrainedModel() = default;
  TrainedModel(ClassifierSpec spec, std::shared_ptr<const Classifier> impl, std::optional<PlattCalibration> cal,
               double threshold, TrainingMeta meta);

  /// Model score in [0, 1]. Throws ShapeError on a width mismatch.
  double score(std::span<const double> x) const;
  std::vector<double> score_batch(const Matrix& x, Execution exec = Execution::Parallel) const;
  bool predict(std::span<const double> x) const { return score(x) >= threshold_; }

  const ClassifierSpec& spec() const { return spec_; }
  const Classifier& impl() const { return *impl_; }
  const std::optional<PlattCalibration>& calibration() const { return calibration_; }
  double threshold() const { return threshold_; }
  void set_threshold(double t);
  const TrainingMeta& meta() const { return meta_; }
  std::size_t width() const { return meta_.feature_width; }

  nlohmann::json to_json() const;
  static TrainedModel from_json(const nlohmann::json& j);

 private:
  ClassifierSpec spec_;
  std::shared_ptr<const Classifier> impl_;
  std::optional<PlattCalibration> calibration_;
  double threshold_ = 0.5;
  TrainingMeta meta_;
};

/// Trains one family and picks its threshold at peak training F1. The
/// Ensemble family trains the five base families first. Throws
/// TrainingError for fewer than 10 rows or a single class, DataError for
/// non-finite values.
TrainedModel train(const ClassifierSpec& spec, const Matrix& x, const Labels& y,
                   Execution exec = Execution::Parallel);

/// Averages already-trained base models; the threshold is chosen on the
/// averaged training scores.
TrainedModel train_ensemble(std::vector<TrainedModel> bases, const Matrix& x, const Labels& y,
                            std::uint64_t seed = 1, Execution exec = Execution::Parallel);

/// Mean score of the base models of an ensemble.
class EnsembleClassifier final : public Classifier {
 public:
  explicit EnsembleClassifier(std::vector<TrainedModel> bases);
  std::size_t width() const override;
  double raw(std::span<const double> x) const override;
  std::vector<double> raw_batch(const Matrix& x, Execution exec) const override;
  nlohmann::json to_json() const override;
  const std::vector<TrainedModel>& bases() const { return bases_; }

 private:
  std::vector<TrainedModel> bases_;
};

// Logistic regression objective over theta = [w_0 .. w_{p-1}, b]:
// mean log-loss + lambda * |w|^2 (bias not penalized).
double logistic_loss(const Matrix& x, const Labels& y, std::span<const double> theta, double lambda,
                     Execution exec = Execution::Parallel);
std::vector<double> logistic_gradient(const Matrix& x, const Labels& y, std::span<const double> theta,
                                      double lambda, Execution exec = Execution::Parallel);

/// F1 when predicting positive for score >= threshold. Zero when undefined.
double f1_at(std::span<const double> scores, const Labels& y, double threshold);

/// Candidate thresholds: 0, 1 and every midpoint between adjacent distinct
/// scores, ascending.
std::vector<double> candidate_thresholds(std::span<const double> scores);

/// Candidate with the highest F1; ties go to the smallest threshold. Throws
/// ThresholdError when there is no positive label.
double select_threshold(std::span<const double> scores, const Labels& y);

}  // namespace safetriage
