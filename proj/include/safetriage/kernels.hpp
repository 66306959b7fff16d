#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "safetriage/matrix.hpp"

namespace safetriage {

/// Which implementation of a hot loop to run. Both produce bit-identical
/// results; the serial one is kept as the reference for tests.
enum class Execution { Serial, Parallel };

namespace serial {

/// y = A x
void matvec(const Matrix& a, std::span<const double> x, std::span<double> y);
/// g = A^T r, each component summed in increasing row order.
void matvec_transposed(const Matrix& a, std::span<const double> r, std::span<double> g);
/// For every query row: fraction of positives among the k nearest training
/// rows (Euclidean; equal distances prefer the lower training index).
std::vector<double> knn_vote_fractions(const Matrix& train, const Labels& labels, const Matrix& queries,
                                       std::size_t k);

}  // namespace serial

namespace parallel {

void matvec(const Matrix& a, std::span<const double> x, std::span<double> y);
void matvec_transposed(const Matrix& a, std::span<const double> r, std::span<double> g);
std::vector<double> knn_vote_fractions(const Matrix& train, const Labels& labels, const Matrix& queries,
                                       std::size_t k);

}  // namespace parallel

void matvec(const Matrix& a, std::span<const double> x, std::span<double> y, Execution exec);
void matvec_transposed(const Matrix& a, std::span<const double> r, std::span<double> g, Execution exec);
std::vector<double> knn_vote_fractions(const Matrix& train, const Labels& labels, const Matrix& queries,
                                       std::size_t k, Execution exec);

}  // namespace safetriage
