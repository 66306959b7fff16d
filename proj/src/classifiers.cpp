#include "safetriage/classifiers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "safetriage/error.hpp"
#include "safetriage/forest.hpp"

namespace safetriage {
namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void check_width(std::size_t got, std::size_t want) {
  if (got != want) {
    throw ShapeError("input has " + std::to_string(got) + " features, model expects " + std::to_string(want));
  }
}

std::vector<double> doubles(const nlohmann::json& j) { return j.get<std::vector<double>>(); }

class LinearModel final : public Classifier {
 public:
  LinearModel(Family family, std::vector<double> w, double b) : family_(family), w_(std::move(w)), b_(b) {}
  std::size_t width() const override { return w_.size(); }
  double raw(std::span<const double> x) const override {
    const double m = dot(w_, x) + b_;
    return family_ == Family::LogisticRegression ? sigmoid(m) : m;
  }
  nlohmann::json to_json() const override { return {{"weights", w_}, {"bias", b_}}; }
  const std::vector<double>& weights() const { return w_; }
  double bias() const { return b_; }

 private:
  Family family_;
  std::vector<double> w_;
  double b_;
};

class GaussianNb final : public Classifier {
 public:
  GaussianNb(std::array<double, 2> log_prior, std::array<std::vector<double>, 2> mean,
             std::array<std::vector<double>, 2> var)
      : log_prior_(log_prior), mean_(std::move(mean)), var_(std::move(var)) {}
  std::size_t width() const override { return mean_[0].size(); }
  double raw(std::span<const double> x) const override {
    std::array<double, 2> lp{};
    for (int c = 0; c < 2; ++c) {
      double s = log_prior_[c];
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double d = x[j] - mean_[c][j];
        s -= 0.5 * (std::log(2.0 * M_PI * var_[c][j]) + d * d / var_[c][j]);
      }
      lp[c] = s;
    }
    return sigmoid(lp[1] - lp[0]);
  }
  nlohmann::json to_json() const override {
    return {{"log_prior", log_prior_}, {"mean", mean_}, {"var", var_}};
  }

 private:
  std::array<double, 2> log_prior_;
  std::array<std::vector<double>, 2> mean_;
  std::array<std::vector<double>, 2> var_;
};

class ForestClassifier final : public Classifier {
 public:
  explicit ForestClassifier(RandomForest f) : forest_(std::move(f)) {}
  std::size_t width() const override { return forest_.width(); }
  double raw(std::span<const double> x) const override { return forest_.score(x); }
  std::vector<double> raw_batch(const Matrix& x, Execution exec) const override { return forest_.score_batch(x, exec); }
  nlohmann::json to_json() const override { return forest_.to_json(); }

 private:
  RandomForest forest_;
};

class KnnClassifier final : public Classifier {
 public:
  KnnClassifier(Matrix train, Labels y, std::size_t k) : train_(std::move(train)), y_(std::move(y)), k_(k) {}
  std::size_t width() const override { return train_.cols(); }
  double raw(std::span<const double> x) const override {
    Matrix q(1, x.size());
    std::copy(x.begin(), x.end(), q.row(0).begin());
    return serial::knn_vote_fractions(train_, y_, q, k_)[0];
  }
  std::vector<double> raw_batch(const Matrix& x, Execution exec) const override {
    return knn_vote_fractions(train_, y_, x, k_, exec);
  }
  nlohmann::json to_json() const override {
    return {{"k", k_}, {"rows", train_.rows()}, {"cols", train_.cols()},
            {"data", std::vector<double>(train_.data().begin(), train_.data().end())}, {"labels", y_}};
  }

 private:
  Matrix train_;
  Labels y_;
  std::size_t k_;
};

struct LabelCounts {
  std::size_t pos = 0, neg = 0;
};

LabelCounts validate(const Matrix& x, const Labels& y) {
  if (x.rows() != y.size()) throw ShapeError("training rows and labels differ in count");
  if (x.rows() < 10) throw TrainingError("training needs at least 10 examples");
  LabelCounts c;
  for (int v : y) {
    if (v == 1) ++c.pos;
    else if (v == 0) ++c.neg;
    else throw DataError("labels must be 0 or 1");
  }
  if (c.pos == 0 || c.neg == 0) throw TrainingError("training labels contain a single class");
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw DataError("feature matrix holds a non-finite value");
  }
  return c;
}

struct LinearFit {
  std::vector<double> theta;
  std::vector<double> history;
  std::size_t iterations = 0;
};

LinearFit fit_logistic(const Matrix& x, const Labels& y, const ClassifierSpec& spec, Execution exec) {
  const std::size_t p = x.cols();
  LinearFit fit;
  fit.theta.assign(p + 1, 0.0);
  double f = logistic_loss(x, y, fit.theta, spec.lambda, exec);
  auto g = logistic_gradient(x, y, fit.theta, spec.lambda, exec);
  fit.history.push_back(f);
  double step = 1.0;
  std::vector<double> trial(p + 1);
  for (; fit.iterations < spec.max_iterations; ++fit.iterations) {
    double gmax = 0.0, gg = 0.0;
    for (double v : g) {
      gmax = std::max(gmax, std::abs(v));
      gg += v * v;
    }
    if (gmax < spec.tolerance) break;
    double ft = 0.0;
    bool accepted = false;
    while (step > 1e-20) {
      for (std::size_t i = 0; i <= p; ++i) trial[i] = fit.theta[i] - step * g[i];
      ft = logistic_loss(x, y, trial, spec.lambda, exec);
      if (ft <= f - 1e-4 * step * gg) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    auto gt = logistic_gradient(x, y, trial, spec.lambda, exec);
    // Barzilai-Borwein guess for the next trial step.
    double ss = 0.0, sy = 0.0;
    for (std::size_t i = 0; i <= p; ++i) {
      const double s = trial[i] - fit.theta[i];
      ss += s * s;
      sy += s * (gt[i] - g[i]);
    }
    step = sy > 0 ? ss / sy : step * 2.0;
    fit.theta.swap(trial);
    g.swap(gt);
    f = ft;
    fit.history.push_back(f);
  }
  return fit;
}

double svm_objective(const Matrix& x, std::span<const double> ypm, std::span<const double> theta, double lambda,
                     std::vector<double>& margin, Execution exec) {
  const std::size_t p = x.cols();
  matvec(x, theta.first(p), margin, exec);
  double hinge = 0.0;
  for (std::size_t i = 0; i < margin.size(); ++i) {
    margin[i] = ypm[i] * (margin[i] + theta[p]);
    hinge += std::max(0.0, 1.0 - margin[i]);
  }
  return 0.5 * lambda * dot(theta, theta) + hinge / static_cast<double>(margin.size());
}

// Full-batch Pegasos on [w, b] with the bias as a regularized extra column,
// projection onto the 1/sqrt(lambda) ball and suffix averaging.
LinearFit fit_svm(const Matrix& x, const Labels& y, const ClassifierSpec& spec, Execution exec) {
  const std::size_t n = x.rows(), p = x.cols();
  const double lambda = spec.svm_lambda;
  if (!(lambda > 0)) throw TrainingError("svm: lambda must be positive");
  std::vector<double> ypm(n);
  for (std::size_t i = 0; i < n; ++i) ypm[i] = y[i] == 1 ? 1.0 : -1.0;
  std::vector<double> theta(p + 1, 0.0), avg(p + 1, 0.0), margin(n), r(n), g(p);
  const double radius = 1.0 / std::sqrt(lambda);
  const std::size_t iters = std::max<std::size_t>(spec.svm_iterations, 2);
  const std::size_t avg_from = iters / 2;
  LinearFit fit;
  for (std::size_t t = 1; t <= iters; ++t) {
    fit.history.push_back(svm_objective(x, ypm, theta, lambda, margin, exec));
    for (std::size_t i = 0; i < n; ++i) r[i] = margin[i] < 1.0 ? ypm[i] / static_cast<double>(n) : 0.0;
    matvec_transposed(x, r, g, exec);
    const double gb = std::accumulate(r.begin(), r.end(), 0.0);
    const double eta = 1.0 / (lambda * static_cast<double>(t));
    for (std::size_t j = 0; j < p; ++j) theta[j] -= eta * (lambda * theta[j] - g[j]);
    theta[p] -= eta * (lambda * theta[p] - gb);
    const double norm = std::sqrt(dot(theta, theta));
    if (norm > radius) {
      for (auto& v : theta) v *= radius / norm;
    }
    if (t > avg_from) {
      for (std::size_t j = 0; j <= p; ++j) avg[j] += theta[j];
    }
  }
  for (auto& v : avg) v /= static_cast<double>(iters - avg_from);
  fit.theta = std::move(avg);
  fit.iterations = iters;
  return fit;
}

std::shared_ptr<const Classifier> fit_nb(const Matrix& x, const Labels& y, const LabelCounts& c) {
  const std::size_t p = x.cols();
  std::array<std::vector<double>, 2> mean{std::vector<double>(p, 0.0), std::vector<double>(p, 0.0)};
  std::array<std::vector<double>, 2> var = mean;
  const std::array<double, 2> count{static_cast<double>(c.neg), static_cast<double>(c.pos)};
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto row = x.row(i);
    for (std::size_t j = 0; j < p; ++j) mean[y[i]][j] += row[j];
  }
  for (int k = 0; k < 2; ++k) {
    for (auto& m : mean[k]) m /= count[k];
  }
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto row = x.row(i);
    for (std::size_t j = 0; j < p; ++j) {
      const double d = row[j] - mean[y[i]][j];
      var[y[i]][j] += d * d;
    }
  }
  for (int k = 0; k < 2; ++k) {
    for (auto& v : var[k]) v = std::max(v / count[k], 1e-9);
  }
  const double n = count[0] + count[1];
  return std::make_shared<GaussianNb>(std::array<double, 2>{std::log(count[0] / n), std::log(count[1] / n)},
                                      std::move(mean), std::move(var));
}

std::shared_ptr<const Classifier> classifier_from_json(Family family, const nlohmann::json& j) {
  switch (family) {
    case Family::LogisticRegression:
    case Family::LinearSVM:
      return std::make_shared<LinearModel>(family, doubles(j.at("weights")), j.at("bias").get<double>());
    case Family::NaiveBayes: {
      auto lp = j.at("log_prior").get<std::array<double, 2>>();
      auto mean = j.at("mean").get<std::array<std::vector<double>, 2>>();
      auto var = j.at("var").get<std::array<std::vector<double>, 2>>();
      if (mean[0].size() != mean[1].size() || var[0].size() != mean[0].size() || var[1].size() != mean[0].size()) {
        throw FormatError("naive bayes: inconsistent widths");
      }
      return std::make_shared<GaussianNb>(lp, std::move(mean), std::move(var));
    }
    case Family::RandomForest:
      return std::make_shared<ForestClassifier>(RandomForest::from_json(j));
    case Family::KNN: {
      const std::size_t rows = j.at("rows"), cols = j.at("cols");
      const auto data = doubles(j.at("data"));
      if (data.size() != rows * cols) throw FormatError("knn: data size mismatch");
      Matrix m(rows, cols);
      for (std::size_t i = 0; i < rows; ++i) {
        std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(i * cols), cols, m.row(i).begin());
      }
      return std::make_shared<KnnClassifier>(std::move(m), j.at("labels").get<Labels>(), j.at("k").get<std::size_t>());
    }
    case Family::Ensemble: {
      std::vector<TrainedModel> bases;
      for (const auto& b : j.at("bases")) bases.push_back(TrainedModel::from_json(b));
      return std::make_shared<EnsembleClassifier>(std::move(bases));
    }
  }
  throw FormatError("unknown classifier family");
}

constexpr Family kBaseFamilies[] = {Family::LogisticRegression, Family::LinearSVM, Family::NaiveBayes,
                                    Family::RandomForest, Family::KNN};

}  // namespace

std::string_view to_string(Family f) {
  switch (f) {
    case Family::LogisticRegression: return "lr";
    case Family::LinearSVM: return "svm";
    case Family::NaiveBayes: return "nb";
    case Family::RandomForest: return "rf";
    case Family::KNN: return "knn";
    case Family::Ensemble: return "ensemble";
  }
  return "?";
}

Family parse_family(std::string_view name) {
  for (auto f : {Family::LogisticRegression, Family::LinearSVM, Family::NaiveBayes, Family::RandomForest, Family::KNN,
                 Family::Ensemble}) {
    if (to_string(f) == name) return f;
  }
  throw ArgumentError("unknown model family '" + std::string(name) + "'");
}

nlohmann::json ClassifierSpec::to_json() const {
  return {{"family", to_string(family)}, {"lambda", lambda}, {"svm_lambda", svm_lambda},
          {"max_iterations", max_iterations}, {"tolerance", tolerance}, {"svm_iterations", svm_iterations},
          {"trees", trees}, {"max_features", max_features}, {"k", k}, {"seed", seed}};
}

ClassifierSpec ClassifierSpec::from_json(const nlohmann::json& j) {
  ClassifierSpec s;
  s.family = parse_family(j.at("family").get<std::string>());
  s.lambda = j.at("lambda");
  s.svm_lambda = j.at("svm_lambda");
  s.max_iterations = j.at("max_iterations");
  s.tolerance = j.at("tolerance");
  s.svm_iterations = j.at("svm_iterations");
  s.trees = j.at("trees");
  s.max_features = j.at("max_features");
  s.k = j.at("k");
  s.seed = j.at("seed");
  return s;
}

std::vector<double> Classifier::raw_batch(const Matrix& x, Execution exec) const {
  check_width(x.cols(), width());
  std::vector<double> out(x.rows());
  const auto n = static_cast<std::ptrdiff_t>(x.rows());
  if (exec == Execution::Serial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = raw(x.row(static_cast<std::size_t>(i)));
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = raw(x.row(static_cast<std::size_t>(i)));
  }
  return out;
}

double PlattCalibration::operator()(double margin) const {
  const double z = a * margin + b;
  return sigmoid(-z);
}

PlattCalibration fit_platt(std::span<const double> margins, const Labels& y) {
  const std::size_t n = margins.size();
  if (y.size() != n) throw ShapeError("platt: margins and labels differ in count");
  const double prior1 = static_cast<double>(std::count(y.begin(), y.end(), 1));
  const double prior0 = static_cast<double>(n) - prior1;
  const double hi = (prior1 + 1.0) / (prior1 + 2.0);
  const double lo = 1.0 / (prior0 + 2.0);
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = y[i] == 1 ? hi : lo;

  auto objective = [&](double a, double b) {
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = margins[i] * a + b;
      f += z >= 0 ? t[i] * z + std::log1p(std::exp(-z)) : (t[i] - 1.0) * z + std::log1p(std::exp(z));
    }
    return f;
  };
  PlattCalibration c{0.0, std::log((prior0 + 1.0) / (prior1 + 1.0))};
  double f = objective(c.a, c.b);
  for (int iter = 0; iter < 100; ++iter) {
    double h11 = 1e-12, h22 = 1e-12, h21 = 0.0, g1 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = margins[i] * c.a + c.b;
      const double p = sigmoid(-z);
      const double q = 1.0 - p;
      const double d2 = p * q;
      h11 += margins[i] * margins[i] * d2;
      h22 += d2;
      h21 += margins[i] * d2;
      const double d1 = t[i] - p;
      g1 += margins[i] * d1;
      g2 += d1;
    }
    if (std::abs(g1) < 1e-5 && std::abs(g2) < 1e-5) break;
    const double det = h11 * h22 - h21 * h21;
    const double da = -(h22 * g1 - h21 * g2) / det;
    const double db = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * da + g2 * db;
    double step = 1.0;
    while (step >= 1e-10) {
      const double fa = objective(c.a + step * da, c.b + step * db);
      if (fa < f + 1e-4 * step * gd) {
        c.a += step * da;
        c.b += step * db;
        f = fa;
        break;
      }
      step /= 2.0;
    }
    if (step < 1e-10) break;
  }
  return c;
}

TrainedModel::TrainedModel(ClassifierSpec spec, std::shared_ptr<const Classifier> impl,
                           std::optional<PlattCalibration> cal, double threshold, TrainingMeta meta)
    : spec_(std::move(spec)), impl_(std::move(impl)), calibration_(cal), meta_(std::move(meta)) {
  set_threshold(threshold);
}

void TrainedModel::set_threshold(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw ThresholdError("threshold must lie in [0, 1]");
  threshold_ = t;
}

double TrainedModel::score(std::span<const double> x) const {
  check_width(x.size(), width());
  const double r = impl_->raw(x);
  return std::clamp(calibration_ ? (*calibration_)(r) : r, 0.0, 1.0);
}

std::vector<double> TrainedModel::score_batch(const Matrix& x, Execution exec) const {
  if (x.rows() == 0) return {};
  check_width(x.cols(), width());
  auto out = impl_->raw_batch(x, exec);
  for (auto& v : out) v = std::clamp(calibration_ ? (*calibration_)(v) : v, 0.0, 1.0);
  return out;
}

nlohmann::json TrainedModel::to_json() const {
  nlohmann::json j = {
      {"spec", spec_.to_json()},
      {"parameters", impl_->to_json()},
      {"threshold", threshold_},
      {"training_meta",
       {{"n_pos", meta_.n_pos}, {"n_neg", meta_.n_neg}, {"feature_width", meta_.feature_width},
        {"iterations", meta_.iterations}, {"loss_history", meta_.loss_history}}},
  };
  j["calibration"] = calibration_ ? nlohmann::json{{"a", calibration_->a}, {"b", calibration_->b}} : nlohmann::json();
  return j;
}

TrainedModel TrainedModel::from_json(const nlohmann::json& j) {
  auto spec = ClassifierSpec::from_json(j.at("spec"));
  auto impl = classifier_from_json(spec.family, j.at("parameters"));
  std::optional<PlattCalibration> cal;
  if (const auto& c = j.at("calibration"); !c.is_null()) cal = PlattCalibration{c.at("a"), c.at("b")};
  const auto& m = j.at("training_meta");
  TrainingMeta meta{m.at("n_pos"), m.at("n_neg"), m.at("feature_width"),
                    m.at("loss_history").get<std::vector<double>>(), m.at("iterations")};
  if (meta.feature_width != impl->width()) throw FormatError("model width disagrees with its parameters");
  return TrainedModel(std::move(spec), std::move(impl), cal, j.at("threshold").get<double>(), std::move(meta));
}

EnsembleClassifier::EnsembleClassifier(std::vector<TrainedModel> bases) : bases_(std::move(bases)) {
  if (bases_.empty()) throw TrainingError("ensemble needs base models");
  for (const auto& b : bases_) {
    if (b.width() != bases_.front().width()) throw ShapeError("ensemble base models differ in width");
  }
}

std::size_t EnsembleClassifier::width() const { return bases_.front().width(); }

double EnsembleClassifier::raw(std::span<const double> x) const {
  double s = 0.0;
  for (const auto& b : bases_) s += b.score(x);
  return s / static_cast<double>(bases_.size());
}

std::vector<double> EnsembleClassifier::raw_batch(const Matrix& x, Execution exec) const {
  std::vector<double> sum(x.rows(), 0.0);
  for (const auto& b : bases_) {
    const auto s = b.score_batch(x, exec);
    for (std::size_t i = 0; i < s.size(); ++i) sum[i] += s[i];
  }
  for (auto& v : sum) v /= static_cast<double>(bases_.size());
  return sum;
}

nlohmann::json EnsembleClassifier::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& b : bases_) arr.push_back(b.to_json());
  return {{"bases", std::move(arr)}};
}

double logistic_loss(const Matrix& x, const Labels& y, std::span<const double> theta, double lambda,
                     Execution exec) {
  const std::size_t n = x.rows(), p = x.cols();
  check_width(theta.size(), p + 1);
  std::vector<double> z(n);
  matvec(x, theta.first(p), z, exec);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double zi = z[i] + theta[p];
    loss += softplus(zi) - (y[i] == 1 ? zi : 0.0);
  }
  const auto w = theta.first(p);
  return loss / static_cast<double>(n) + lambda * dot(w, w);
}

std::vector<double> logistic_gradient(const Matrix& x, const Labels& y, std::span<const double> theta,
                                      double lambda, Execution exec) {
  const std::size_t n = x.rows(), p = x.cols();
  check_width(theta.size(), p + 1);
  std::vector<double> r(n);
  matvec(x, theta.first(p), r, exec);
  for (std::size_t i = 0; i < n; ++i) r[i] = (sigmoid(r[i] + theta[p]) - (y[i] == 1 ? 1.0 : 0.0)) / static_cast<double>(n);
  std::vector<double> g(p + 1);
  matvec_transposed(x, r, std::span<double>(g).first(p), exec);
  for (std::size_t j = 0; j < p; ++j) g[j] += 2.0 * lambda * theta[j];
  g[p] = std::accumulate(r.begin(), r.end(), 0.0);
  return g;
}

double f1_at(std::span<const double> scores, const Labels& y, double threshold) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    if (pred && y[i] == 1) ++tp;
    else if (pred) ++fp;
    else if (y[i] == 1) ++fn;
  }
  return tp == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

std::vector<double> candidate_thresholds(std::span<const double> scores) {
  std::vector<double> s(scores.begin(), scores.end());
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  std::vector<double> c{0.0, 1.0};
  for (std::size_t i = 0; i + 1 < s.size(); ++i) c.push_back(s[i] + (s[i + 1] - s[i]) / 2.0);
  std::sort(c.begin(), c.end());
  c.erase(std::unique(c.begin(), c.end()), c.end());
  return c;
}

double select_threshold(std::span<const double> scores, const Labels& y) {
  if (scores.size() != y.size()) throw ShapeError("threshold: scores and labels differ in count");
  const auto positives = static_cast<std::uint64_t>(std::count(y.begin(), y.end(), 1));
  if (positives == 0) throw ThresholdError("threshold selection needs at least one positive label");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> sorted(order.size());
  std::vector<std::uint64_t> pos_suffix(order.size() + 1, 0);  // positives among sorted[i..]
  for (std::size_t i = 0; i < order.size(); ++i) sorted[i] = scores[order[i]];
  for (std::size_t i = order.size(); i-- > 0;) pos_suffix[i] = pos_suffix[i + 1] + (y[order[i]] == 1 ? 1 : 0);

  // F1 = 2 tp / (predicted + positives); compared by cross-multiplication.
  double best_t = 0.0;
  std::uint64_t best_tp = 0, best_den = 1;
  bool first = true;
  for (double t : candidate_thresholds(scores)) {
    const auto at = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
    const std::uint64_t tp = pos_suffix[at];
    const std::uint64_t den = (sorted.size() - at) + positives;
    if (first || tp * best_den > best_tp * den) {
      best_t = t;
      best_tp = tp;
      best_den = den;
      first = false;
    }
  }
  return best_t;
}

TrainedModel train_ensemble(std::vector<TrainedModel> bases, const Matrix& x, const Labels& y, std::uint64_t seed,
                            Execution exec) {
  const auto counts = validate(x, y);
  auto impl = std::make_shared<EnsembleClassifier>(std::move(bases));
  check_width(x.cols(), impl->width());
  ClassifierSpec spec;
  spec.family = Family::Ensemble;
  spec.seed = seed;
  const auto scores = impl->raw_batch(x, exec);
  TrainingMeta meta{counts.pos, counts.neg, x.cols(), {}, 0};
  return TrainedModel(spec, impl, std::nullopt, select_threshold(scores, y), std::move(meta));
}

TrainedModel train(const ClassifierSpec& spec, const Matrix& x, const Labels& y, Execution exec) {
  const auto counts = validate(x, y);
  if (spec.family == Family::Ensemble) {
    std::vector<TrainedModel> bases;
    for (auto f : kBaseFamilies) {
      ClassifierSpec s = spec;
      s.family = f;
      bases.push_back(train(s, x, y, exec));
    }
    return train_ensemble(std::move(bases), x, y, spec.seed, exec);
  }

  TrainingMeta meta{counts.pos, counts.neg, x.cols(), {}, 0};
  std::shared_ptr<const Classifier> impl;
  std::optional<PlattCalibration> cal;
  switch (spec.family) {
    case Family::LogisticRegression: {
      auto fit = fit_logistic(x, y, spec, exec);
      meta.loss_history = std::move(fit.history);
      meta.iterations = fit.iterations;
      const double b = fit.theta.back();
      fit.theta.pop_back();
      impl = std::make_shared<LinearModel>(spec.family, std::move(fit.theta), b);
      break;
    }
    case Family::LinearSVM: {
      auto fit = fit_svm(x, y, spec, exec);
      meta.loss_history = std::move(fit.history);
      meta.iterations = fit.iterations;
      const double b = fit.theta.back();
      fit.theta.pop_back();
      impl = std::make_shared<LinearModel>(spec.family, std::move(fit.theta), b);
      const auto margins = impl->raw_batch(x, exec);
      cal = fit_platt(margins, y);
      break;
    }
    case Family::NaiveBayes:
      impl = fit_nb(x, y, counts);
      break;
    case Family::RandomForest: {
      const DenseColumns src(x);
      impl = std::make_shared<ForestClassifier>(train_forest(src, y, {spec.trees, spec.max_features, spec.seed}, exec));
      break;
    }
    case Family::KNN:
      if (spec.k == 0) throw TrainingError("knn: k must be at least 1");
      impl = std::make_shared<KnnClassifier>(x, y, spec.k);
      break;
    case Family::Ensemble:
      break;
  }
  TrainedModel model(spec, impl, cal, 0.5, std::move(meta));
  model.set_threshold(select_threshold(model.score_batch(x, exec), y));
  return model;
}

}  // namespace safetriage
