#include "safetriage/kernels.hpp"

#include <algorithm>
#include <utility>

namespace safetriage {
namespace {

void check_matvec(const Matrix& a, std::size_t in, std::size_t out, std::size_t want_in, std::size_t want_out) {
  if (in != want_in || out != want_out) throw ShapeError("matvec: dimension mismatch");
  (void)a;
}

double row_dot(std::span<const double> row, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) s += row[j] * x[j];
  return s;
}

// Columns [lo, hi) of A^T r.
void transposed_block(const Matrix& a, std::span<const double> r, std::span<double> g, std::size_t lo,
                      std::size_t hi) {
  std::fill(g.begin() + static_cast<std::ptrdiff_t>(lo), g.begin() + static_cast<std::ptrdiff_t>(hi), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double ri = r[i];
    const auto row = a.row(i);
    for (std::size_t j = lo; j < hi; ++j) g[j] += row[j] * ri;
  }
}

double knn_one(const Matrix& train, const Labels& labels, std::span<const double> q, std::size_t k,
               std::vector<std::pair<double, std::size_t>>& scratch) {
  scratch.resize(train.rows());
  for (std::size_t i = 0; i < train.rows(); ++i) {
    const auto row = train.row(i);
    double d = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double t = row[j] - q[j];
      d += t * t;
    }
    scratch[i] = {d, i};
  }
  const std::size_t kk = std::min(k, scratch.size());
  std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(kk), scratch.end());
  std::size_t pos = 0;
  for (std::size_t i = 0; i < kk; ++i) pos += labels[scratch[i].second] == 1 ? 1 : 0;
  return static_cast<double>(pos) / static_cast<double>(kk);
}

void check_knn(const Matrix& train, const Labels& labels, const Matrix& queries, std::size_t k) {
  if (train.rows() != labels.size()) throw ShapeError("knn: label count differs from training rows");
  if (train.rows() == 0 || k == 0) throw ArgumentError("knn: need k >= 1 and a non-empty training set");
  if (queries.rows() > 0 && queries.cols() != train.cols()) throw ShapeError("knn: query width mismatch");
}

constexpr std::size_t kColumnBlock = 256;

}  // namespace

namespace serial {

void matvec(const Matrix& a, std::span<const double> x, std::span<double> y) {
  check_matvec(a, x.size(), y.size(), a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = row_dot(a.row(i), x);
}

void matvec_transposed(const Matrix& a, std::span<const double> r, std::span<double> g) {
  check_matvec(a, r.size(), g.size(), a.rows(), a.cols());
  transposed_block(a, r, g, 0, a.cols());
}

std::vector<double> knn_vote_fractions(const Matrix& train, const Labels& labels, const Matrix& queries,
                                       std::size_t k) {
  check_knn(train, labels, queries, k);
  std::vector<double> out(queries.rows());
  std::vector<std::pair<double, std::size_t>> scratch;
  for (std::size_t q = 0; q < queries.rows(); ++q) out[q] = knn_one(train, labels, queries.row(q), k, scratch);
  return out;
}

}  // namespace serial

namespace parallel {

void matvec(const Matrix& a, std::span<const double> x, std::span<double> y) {
  check_matvec(a, x.size(), y.size(), a.cols(), a.rows());
  const auto n = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = row_dot(a.row(static_cast<std::size_t>(i)), x);
}

void matvec_transposed(const Matrix& a, std::span<const double> r, std::span<double> g) {
  check_matvec(a, r.size(), g.size(), a.rows(), a.cols());
  // Column blocks keep every output's summation order equal to the serial loop.
  const auto blocks = static_cast<std::ptrdiff_t>((a.cols() + kColumnBlock - 1) / kColumnBlock);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < blocks; ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kColumnBlock;
    transposed_block(a, r, g, lo, std::min(lo + kColumnBlock, a.cols()));
  }
}

std::vector<double> knn_vote_fractions(const Matrix& train, const Labels& labels, const Matrix& queries,
                                       std::size_t k) {
  check_knn(train, labels, queries, k);
  std::vector<double> out(queries.rows());
  const auto n = static_cast<std::ptrdiff_t>(queries.rows());
#pragma omp parallel
  {
    std::vector<std::pair<double, std::size_t>> scratch;
#pragma omp for schedule(dynamic, 16)
    for (std::ptrdiff_t q = 0; q < n; ++q) {
      const auto qi = static_cast<std::size_t>(q);
      out[qi] = knn_one(train, labels, queries.row(qi), k, scratch);
    }
  }
  return out;
}

}  // namespace parallel

void matvec(const Matrix& a, std::span<const double> x, std::span<double> y, Execution exec) {
  exec == Execution::Serial ? serial::matvec(a, x, y) : parallel::matvec(a, x, y);
}

void matvec_transposed(const Matrix& a, std::span<const double> r, std::span<double> g, Execution exec) {
  exec == Execution::Serial ? serial::matvec_transposed(a, r, g) : parallel::matvec_transposed(a, r, g);
}

std::vector<double> knn_vote_fractions(const Matrix& train, const Labels& labels, const Matrix& queries,
                                       std::size_t k, Execution exec) {
  return exec == Execution::Serial ? serial::knn_vote_fractions(train, labels, queries, k)
                                   : parallel::knn_vote_fractions(train, labels, queries, k);
}

}  // namespace safetriage
