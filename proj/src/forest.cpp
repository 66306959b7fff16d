#include "safetriage/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "safetriage/error.hpp"
#include "safetriage/rng.hpp"

namespace safetriage {
namespace {

double sparse_value(const SparseVector& v, std::size_t col) {
  auto it = std::lower_bound(v.begin(), v.end(), col, [](const SparseEntry& e, std::size_t c) { return e.index < c; });
  return it != v.end() && it->index == col ? it->value : 0.0;
}

struct Split {
  std::int32_t feature = -1;
  double threshold = 0.0;
  double gain = -1.0;
};

struct Grower {
  const ColumnSource& src;
  const Labels& y;
  std::size_t mtry;
  Rng rng;
  std::vector<double>& importance;
  double n_total;

  struct Run {
    double value;
    std::size_t n, pos;
  };
  std::vector<std::pair<double, int>> pairs;
  std::vector<Run> runs;
  std::vector<double> values;

  // Best threshold on one column; gain < 0 means the column is constant here.
  // Values are scanned as runs of equal value; zeros form one run so sparse
  // columns only sort their nonzero entries.
  Split best_on(std::size_t col, std::span<const std::size_t> rows, std::size_t pos_total) {
    values.resize(rows.size());
    src.gather(col, rows, values);
    pairs.clear();
    std::size_t zeros = 0, zero_pos = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (values[i] == 0.0) {
        ++zeros;
        zero_pos += y[rows[i]] == 1 ? 1 : 0;
      } else {
        pairs.emplace_back(values[i], y[rows[i]]);
      }
    }
    std::sort(pairs.begin(), pairs.end());
    runs.clear();
    bool zero_done = zeros == 0;
    for (std::size_t i = 0; i < pairs.size();) {
      const double v = pairs[i].first;
      if (!zero_done && v > 0.0) {
        runs.push_back({0.0, zeros, zero_pos});
        zero_done = true;
      }
      Run r{v, 0, 0};
      for (; i < pairs.size() && pairs[i].first == v; ++i) {
        ++r.n;
        r.pos += pairs[i].second == 1 ? 1 : 0;
      }
      runs.push_back(r);
    }
    if (!zero_done) runs.push_back({0.0, zeros, zero_pos});

    Split best;
    if (runs.size() < 2) return best;
    const std::size_t n = rows.size();
    std::size_t n_left = 0, pos_left = 0;
    for (std::size_t i = 0; i + 1 < runs.size(); ++i) {
      n_left += runs[i].n;
      pos_left += runs[i].pos;
      const double g = entropy_gain(pos_left, n_left, pos_total - pos_left, n - n_left);
      if (g > best.gain) {
        const double a = runs[i].value, b = runs[i + 1].value;
        double t = a + (b - a) / 2.0;
        if (!(t < b)) t = a;
        best = {static_cast<std::int32_t>(col), t, g};
      }
    }
    return best;
  }

  DecisionTree grow(std::vector<std::size_t> idx) {
    std::vector<TreeNode> nodes;
    struct Pending {
      std::size_t node, begin, end;
    };
    std::vector<Pending> stack;
    nodes.emplace_back();
    stack.push_back({0, 0, idx.size()});
    while (!stack.empty()) {
      const auto [node, begin, end] = stack.back();
      stack.pop_back();
      const std::span<const std::size_t> rows(idx.data() + begin, end - begin);
      const std::size_t n = rows.size();
      std::size_t pos = 0;
      for (auto r : rows) pos += y[r] == 1 ? 1 : 0;
      nodes[node].positive_fraction = static_cast<double>(pos) / static_cast<double>(n);
      if (pos == 0 || pos == n || n < 2) continue;

      src.begin_node(rows);
      auto candidates = src.candidate_columns(rows);
      Split best;
      std::size_t tried = 0;
      for (std::size_t k = 0; k < candidates.size() && tried < mtry; ++k) {
        const auto j = k + static_cast<std::size_t>(rng.below(candidates.size() - k));
        std::swap(candidates[k], candidates[j]);
        const Split s = best_on(candidates[k], rows, pos);
        if (s.gain < 0) continue;  // constant columns do not use up the quota
        ++tried;
        if (s.gain > best.gain) best = s;
      }
      if (best.feature < 0) continue;

      importance[static_cast<std::size_t>(best.feature)] += static_cast<double>(n) / n_total * best.gain;
      values.resize(n);
      src.gather(static_cast<std::size_t>(best.feature), rows, values);
      std::vector<std::size_t> left, right;
      for (std::size_t i = 0; i < n; ++i) (values[i] <= best.threshold ? left : right).push_back(rows[i]);
      std::copy(left.begin(), left.end(), idx.begin() + static_cast<std::ptrdiff_t>(begin));
      std::copy(right.begin(), right.end(), idx.begin() + static_cast<std::ptrdiff_t>(begin + left.size()));

      const auto l = nodes.size();
      nodes.emplace_back();
      nodes.emplace_back();
      nodes[node].feature = best.feature;
      nodes[node].threshold = best.threshold;
      nodes[node].left = static_cast<std::int32_t>(l);
      nodes[node].right = static_cast<std::int32_t>(l + 1);
      stack.push_back({l + 1, begin + left.size(), end});
      stack.push_back({l, begin, begin + left.size()});
    }
    return DecisionTree(std::move(nodes));
  }
};

}  // namespace

void DenseColumns::gather(std::size_t col, std::span<const std::size_t> rows, std::span<double> out) const {
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = m_(rows[i], col);
}

std::vector<std::size_t> DenseColumns::candidate_columns(std::span<const std::size_t>) const {
  std::vector<std::size_t> all(m_.cols());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return all;
}

bool DenseColumns::row_less(std::size_t a, std::size_t b) const {
  const auto ra = m_.row(a);
  const auto rb = m_.row(b);
  return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
}

SparseRows::SparseRows(const std::vector<SparseVector>& rows, std::size_t sparse_width, const Matrix* dense_tail)
    : rows_(rows),
      tail_(dense_tail),
      sparse_width_(sparse_width),
      width_(sparse_width + (dense_tail ? dense_tail->cols() : 0)) {
  if (tail_ && tail_->rows() != rows_.size()) throw ShapeError("dense tail row count differs from sparse rows");
  for (const auto& r : rows_) {
    if (!r.empty() && r.back().index >= sparse_width_) throw ShapeError("sparse row index beyond width");
  }
  by_column_.resize(sparse_width_);
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    for (const auto& e : rows_[i]) by_column_[e.index].emplace_back(static_cast<std::uint32_t>(i), e.value);
  }
}

namespace {

// Positions of each row inside the current node, per thread: head[row] is
// the first position, next[pos] chains duplicates from bootstrapping.
struct NodeIndex {
  std::vector<std::int32_t> head;
  std::vector<std::int32_t> next;
  std::vector<std::size_t> touched;
  const void* owner = nullptr;
  const std::size_t* data = nullptr;
  std::size_t size = 0;
};
thread_local NodeIndex node_index;

}  // namespace

void SparseRows::begin_node(std::span<const std::size_t> rows) const {
  auto& ix = node_index;
  if (ix.head.size() < rows_.size()) ix.head.assign(rows_.size(), -1);
  for (auto r : ix.touched) ix.head[r] = -1;
  ix.touched.clear();
  ix.next.assign(rows.size(), -1);
  ix.owner = this;
  ix.data = rows.data();
  ix.size = rows.size();
  for (std::size_t p = 0; p < rows.size(); ++p) {
    const auto r = rows[p];
    if (ix.head[r] < 0) ix.touched.push_back(r);
    ix.next[p] = ix.head[r];
    ix.head[r] = static_cast<std::int32_t>(p);
  }
}

void SparseRows::gather(std::size_t col, std::span<const std::size_t> rows, std::span<double> out) const {
  if (col >= sparse_width_) {
    const std::size_t c = col - sparse_width_;
    for (std::size_t i = 0; i < rows.size(); ++i) out[i] = (*tail_)(rows[i], c);
    return;
  }
  const auto& column = by_column_[col];
  const auto& ix = node_index;
  const bool indexed = ix.owner == this && ix.data == rows.data() && ix.size == rows.size();
  if (!indexed || column.size() > 8 * rows.size()) {
    for (std::size_t i = 0; i < rows.size(); ++i) out[i] = sparse_value(rows_[rows[i]], col);
    return;
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& [r, v] : column) {
    for (auto p = ix.head[r]; p >= 0; p = ix.next[static_cast<std::size_t>(p)]) out[static_cast<std::size_t>(p)] = v;
  }
}

std::vector<std::size_t> SparseRows::candidate_columns(std::span<const std::size_t> rows) const {
  thread_local std::vector<std::uint32_t> stamp;
  thread_local std::uint32_t epoch = 0;
  if (stamp.size() < sparse_width_) stamp.assign(sparse_width_, 0);
  if (++epoch == 0) {
    std::fill(stamp.begin(), stamp.end(), 0);
    epoch = 1;
  }
  std::vector<std::size_t> cols;
  for (auto r : rows) {
    for (const auto& e : rows_[r]) {
      if (stamp[e.index] != epoch) {
        stamp[e.index] = epoch;
        cols.push_back(e.index);
      }
    }
  }
  std::sort(cols.begin(), cols.end());
  for (std::size_t c = sparse_width_; c < width_; ++c) cols.push_back(c);
  return cols;
}

bool SparseRows::row_less(std::size_t a, std::size_t b) const {
  const auto& ra = rows_[a];
  const auto& rb = rows_[b];
  std::size_t i = 0, j = 0;
  while (i < ra.size() || j < rb.size()) {
    const auto ci = i < ra.size() ? ra[i].index : sparse_width_;
    const auto cj = j < rb.size() ? rb[j].index : sparse_width_;
    double va = 0.0, vb = 0.0;
    if (ci <= cj) va = ra[i].value;
    if (cj <= ci) vb = rb[j].value;
    if (va != vb) return va < vb;
    if (ci <= cj) ++i;
    if (cj <= ci) ++j;
  }
  if (!tail_) return false;
  const auto ta = tail_->row(a);
  const auto tb = tail_->row(b);
  return std::lexicographical_compare(ta.begin(), ta.end(), tb.begin(), tb.end());
}

double entropy_bits(std::size_t pos, std::size_t n) {
  if (n == 0 || pos == 0 || pos == n) return 0.0;
  const double p = static_cast<double>(pos) / static_cast<double>(n);
  return -(p * std::log2(p) + (1.0 - p) * std::log2(1.0 - p));
}

double entropy_gain(std::size_t pos_left, std::size_t n_left, std::size_t pos_right, std::size_t n_right) {
  const std::size_t n = n_left + n_right;
  if (n == 0) return 0.0;
  const double wl = static_cast<double>(n_left) / static_cast<double>(n);
  const double wr = static_cast<double>(n_right) / static_cast<double>(n);
  return entropy_bits(pos_left + pos_right, n) - wl * entropy_bits(pos_left, n_left) -
         wr * entropy_bits(pos_right, n_right);
}

double DecisionTree::leaf_fraction(const std::function<double(std::size_t)>& value) const {
  std::size_t i = 0;
  while (nodes_[i].feature >= 0) {
    const auto& n = nodes_[i];
    i = static_cast<std::size_t>(value(static_cast<std::size_t>(n.feature)) <= n.threshold ? n.left : n.right);
  }
  return nodes_[i].positive_fraction;
}

double DecisionTree::leaf_fraction(std::span<const double> x) const {
  std::size_t i = 0;
  while (nodes_[i].feature >= 0) {
    const auto& n = nodes_[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes_[i].positive_fraction;
}

double DecisionTree::leaf_fraction(const SparseVector& x) const {
  return leaf_fraction([&x](std::size_t c) { return sparse_value(x, c); });
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes_[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return best;
}

double RandomForest::score(std::span<const double> x) const {
  if (x.size() != width_) throw ShapeError("forest: input width mismatch");
  std::size_t votes = 0;
  for (const auto& t : trees_) votes += t.vote(x) ? 1 : 0;
  return static_cast<double>(votes) / static_cast<double>(trees_.size());
}

double RandomForest::score(const SparseVector& x) const {
  std::size_t votes = 0;
  for (const auto& t : trees_) votes += t.vote(x) ? 1 : 0;
  return static_cast<double>(votes) / static_cast<double>(trees_.size());
}

std::vector<double> RandomForest::score_batch(const Matrix& x, Execution exec) const {
  std::vector<double> out(x.rows());
  const auto n = static_cast<std::ptrdiff_t>(x.rows());
  if (exec == Execution::Serial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = score(x.row(static_cast<std::size_t>(i)));
    return out;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = score(x.row(static_cast<std::size_t>(i)));
  return out;
}

RandomForest train_forest(const ColumnSource& x, const Labels& y, const ForestConfig& config, Execution exec) {
  const std::size_t n = x.rows();
  if (y.size() != n) throw ShapeError("forest: label count differs from rows");
  if (n < 2) throw TrainingError("forest: need at least 2 rows");
  if (config.trees == 0) throw TrainingError("forest: need at least one tree");
  const auto pos = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
  if (pos == 0 || pos == n) throw TrainingError("forest: labels contain a single class");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (x.row_less(a, b)) return true;
    if (x.row_less(b, a)) return false;
    return y[a] < y[b];
  });

  RandomForest forest;
  forest.config_ = config;
  forest.width_ = x.cols();
  const std::size_t mtry = config.max_features > 0
                               ? config.max_features
                               : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(x.cols()))));
  forest.trees_.resize(config.trees);
  std::vector<std::vector<double>> per_tree(config.trees, std::vector<double>(x.cols(), 0.0));

  auto build = [&](std::size_t t) {
    Grower g{x, y, mtry, Rng(derive_seed(config.seed, t)), per_tree[t], static_cast<double>(n), {}, {}, {}};
    std::vector<std::size_t> boot(n);
    for (auto& b : boot) b = order[static_cast<std::size_t>(g.rng.below(n))];
    forest.trees_[t] = g.grow(std::move(boot));
  };
  const auto trees = static_cast<std::ptrdiff_t>(config.trees);
  if (exec == Execution::Serial) {
    for (std::ptrdiff_t t = 0; t < trees; ++t) build(static_cast<std::size_t>(t));
  } else {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t t = 0; t < trees; ++t) build(static_cast<std::size_t>(t));
  }

  forest.importances_.assign(x.cols(), 0.0);
  for (const auto& imp : per_tree) {
    for (std::size_t j = 0; j < imp.size(); ++j) forest.importances_[j] += imp[j];
  }
  const double total = std::accumulate(forest.importances_.begin(), forest.importances_.end(), 0.0);
  if (total > 0) {
    for (auto& v : forest.importances_) v /= total;
  }
  return forest;
}

nlohmann::json RandomForest::to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : trees_) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes()) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.positive_fraction});
    trees.push_back(std::move(nodes));
  }
  return {{"width", width_},
          {"config", {{"trees", config_.trees}, {"max_features", config_.max_features}, {"seed", config_.seed}}},
          {"trees", std::move(trees)}};
}

RandomForest RandomForest::from_json(const nlohmann::json& j) {
  RandomForest f;
  f.width_ = j.at("width");
  const auto& c = j.at("config");
  f.config_ = {c.at("trees"), c.at("max_features"), c.at("seed")};
  for (const auto& t : j.at("trees")) {
    std::vector<TreeNode> nodes;
    for (const auto& n : t) nodes.push_back({n.at(0), n.at(1), n.at(2), n.at(3), n.at(4)});
    if (nodes.empty()) throw FormatError("forest: empty tree");
    for (const auto& n : nodes) {
      if (n.feature >= 0 && (static_cast<std::size_t>(n.feature) >= f.width_ || n.left < 0 || n.right < 0 ||
                             static_cast<std::size_t>(std::max(n.left, n.right)) >= nodes.size())) {
        throw FormatError("forest: malformed node");
      }
    }
    f.trees_.emplace_back(std::move(nodes));
  }
  if (f.trees_.empty()) throw FormatError("forest: no trees");
  return f;
}

}  // namespace safetriage
