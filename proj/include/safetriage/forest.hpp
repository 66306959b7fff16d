#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "safetriage/kernels.hpp"
#include "safetriage/matrix.hpp"
#include "safetriage/tfidf.hpp"

namespace safetriage {

/// Read access to training rows for tree growing, dense or sparse.
class ColumnSource {
 public:
  virtual ~ColumnSource() = default;
  virtual std::size_t rows() const = 0;
  virtual std::size_t cols() const = 0;
  /// Values of column `col` at `rows`, written to `out` in the same order.
  virtual void gather(std::size_t col, std::span<const std::size_t> rows, std::span<double> out) const = 0;
  /// Columns that may vary over `rows`. Columns left out are constant there.
  virtual std::vector<std::size_t> candidate_columns(std::span<const std::size_t> rows) const = 0;
  /// Strict lexicographic order on row contents.
  virtual bool row_less(std::size_t a, std::size_t b) const = 0;
  /// Called before the gathers of one node; sources may index `rows` for
  /// the calling thread.
  virtual void begin_node(std::span<const std::size_t> rows) const { (void)rows; }
};

class DenseColumns final : public ColumnSource {
 public:
  explicit DenseColumns(const Matrix& m) : m_(m) {}
  std::size_t rows() const override { return m_.rows(); }
  std::size_t cols() const override { return m_.cols(); }
  void gather(std::size_t col, std::span<const std::size_t> rows, std::span<double> out) const override;
  std::vector<std::size_t> candidate_columns(std::span<const std::size_t> rows) const override;
  bool row_less(std::size_t a, std::size_t b) const override;

 private:
  const Matrix& m_;
};

/// Rows whose leading `sparse_width` columns are stored sparsely (strictly
/// increasing indices) and whose remaining columns, if any, come from a
/// dense matrix with one row per example.
class SparseRows final : public ColumnSource {
 public:
  SparseRows(const std::vector<SparseVector>& rows, std::size_t sparse_width, const Matrix* dense_tail = nullptr);
  std::size_t rows() const override { return rows_.size(); }
  std::size_t cols() const override { return width_; }
  void gather(std::size_t col, std::span<const std::size_t> rows, std::span<double> out) const override;
  std::vector<std::size_t> candidate_columns(std::span<const std::size_t> rows) const override;
  bool row_less(std::size_t a, std::size_t b) const override;
  void begin_node(std::span<const std::size_t> rows) const override;

 private:
  const std::vector<SparseVector>& rows_;
  std::vector<std::vector<std::pair<std::uint32_t, double>>> by_column_;
  const Matrix* tail_;
  std::size_t sparse_width_;
  std::size_t width_;
};

/// Binary entropy (bits) of a node holding `pos` positives out of `n`.
double entropy_bits(std::size_t pos, std::size_t n);

/// Entropy reduction (bits) of splitting a node into two children.
double entropy_gain(std::size_t pos_left, std::size_t n_left, std::size_t pos_right, std::size_t n_right);

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // x[feature] <= threshold goes left
  std::int32_t left = -1;
  std::int32_t right = -1;
  double positive_fraction = 0.0;
};

class DecisionTree {
 public:
  DecisionTree() = default;
  explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  /// Leaf positive fraction for a row given by a column accessor.
  double leaf_fraction(const std::function<double(std::size_t)>& value) const;
  double leaf_fraction(std::span<const double> x) const;
  double leaf_fraction(const SparseVector& x) const;
  /// Votes positive when the leaf's positive fraction exceeds one half.
  bool vote(std::span<const double> x) const { return leaf_fraction(x) > 0.5; }
  bool vote(const SparseVector& x) const { return leaf_fraction(x) > 0.5; }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t depth() const;

 private:
  std::vector<TreeNode> nodes_;
};

struct ForestConfig {
  std::size_t trees = 10;
  std::size_t max_features = 0;  // 0 = floor(sqrt(width))
  std::uint64_t seed = 1;
};

class RandomForest {
 public:
  /// Fraction of trees voting positive.
  double score(std::span<const double> x) const;
  double score(const SparseVector& x) const;
  std::vector<double> score_batch(const Matrix& x, Execution exec = Execution::Parallel) const;

  /// Per-column sum of node fraction x entropy gain over all trees, scaled to
  /// sum to 1 (all zero when no tree split).
  const std::vector<double>& importances() const { return importances_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }
  std::size_t width() const { return width_; }
  const ForestConfig& config() const { return config_; }

  nlohmann::json to_json() const;
  static RandomForest from_json(const nlohmann::json& j);

  friend RandomForest train_forest(const ColumnSource& x, const Labels& y, const ForestConfig& config,
                                   Execution exec);

 private:
  std::vector<DecisionTree> trees_;
  std::vector<double> importances_;
  std::size_t width_ = 0;
  ForestConfig config_;
};

/// Bootstrap-sampled entropy trees grown until pure or fewer than 2 samples.
/// Tree t draws from derive_seed(config.seed, t), so the serial and parallel
/// paths return identical forests, and rows are put in canonical order first
/// so training-set order does not matter.
RandomForest train_forest(const ColumnSource& x, const Labels& y, const ForestConfig& config,
                          Execution exec = Execution::Parallel);

}  // namespace safetriage
