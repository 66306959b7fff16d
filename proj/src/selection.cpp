#include "safetriage/selection.hpp"

#include <algorithm>
#include <numeric>

#include "safetriage/error.hpp"

namespace safetriage {
namespace {

void require_two_classes(const Labels& y, std::size_t rows) {
  if (y.size() != rows) throw ShapeError("selection: label count differs from rows");
  if (rows < 2) throw SelectionError("selection needs at least 2 examples");
  const auto pos = std::count(y.begin(), y.end(), 1);
  if (pos == 0 || static_cast<std::size_t>(pos) == y.size()) {
    throw SelectionError("selection needs both classes in the labels");
  }
}

}  // namespace

std::vector<double> compute_importance(const std::vector<FeatureVector>& x, const Labels& y, std::uint64_t seed,
                                       Execution exec) {
  require_two_classes(y, x.size());
  const auto layout = x.front().layout;
  const std::size_t tail_width = layout.width() - layout.tfidf_width;
  std::vector<SparseVector> rows(x.size());
  Matrix tail(x.size(), tail_width);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].layout != layout) throw ShapeError("selection: rows differ in layout");
    rows[i] = x[i].tfidf;
    auto t = tail.row(i);
    std::copy(x[i].embedding.begin(), x[i].embedding.end(), t.begin());
    t[tail_width - 2] = x[i].star;
    t[tail_width - 1] = x[i].smoke_count;
  }
  const SparseRows src(rows, layout.tfidf_width, &tail);
  return train_forest(src, y, ForestConfig{10, 0, seed}, exec).importances();
}

std::vector<double> compute_importance(const Matrix& x, const Labels& y, std::uint64_t seed, Execution exec) {
  require_two_classes(y, x.rows());
  const DenseColumns src(x);
  return train_forest(src, y, ForestConfig{10, 0, seed}, exec).importances();
}

SelectionMask select(std::span<const double> importances, std::size_t target_k,
                     std::span<const std::size_t> always_keep) {
  if (target_k == 0) throw ArgumentError("select: target_k must be at least 1");
  SelectionMask mask;
  mask.importances.assign(importances.begin(), importances.end());
  mask.target_k = target_k;
  mask.original_width = importances.size();

  std::vector<bool> taken(importances.size(), false);
  for (auto c : always_keep) {
    if (c >= importances.size()) throw ShapeError("select: pinned column beyond width");
    if (!taken[c] && mask.kept.size() < target_k) {
      taken[c] = true;
      mask.kept.push_back(c);
    }
  }
  std::vector<std::size_t> order;
  for (std::size_t j = 0; j < importances.size(); ++j) {
    if (!taken[j] && importances[j] > 0) order.push_back(j);
  }
  const std::size_t room = target_k - mask.kept.size();
  const std::size_t take = std::min(room, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return importances[a] != importances[b] ? importances[a] > importances[b] : a < b;
                    });
  mask.kept.insert(mask.kept.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take));
  std::sort(mask.kept.begin(), mask.kept.end());
  return mask;
}

std::vector<double> apply(const SelectionMask& mask, std::span<const double> v) {
  if (v.size() != mask.original_width) throw ShapeError("apply: vector width differs from mask");
  std::vector<double> out(mask.kept.size());
  for (std::size_t i = 0; i < mask.kept.size(); ++i) out[i] = v[mask.kept[i]];
  return out;
}

std::vector<double> apply(const SelectionMask& mask, const FeatureVector& v) {
  if (v.width() != mask.original_width) throw ShapeError("apply: vector width differs from mask");
  std::vector<double> out(mask.kept.size());
  for (std::size_t i = 0; i < mask.kept.size(); ++i) out[i] = v.at(mask.kept[i]);
  return out;
}

nlohmann::json SelectionMask::to_json() const {
  return {{"kept", kept}, {"importances", importances}, {"target_k", target_k},
          {"original_width", original_width}, {"seed", seed}};
}

SelectionMask SelectionMask::from_json(const nlohmann::json& j) {
  SelectionMask m;
  m.kept = j.at("kept").get<std::vector<std::size_t>>();
  m.importances = j.at("importances").get<std::vector<double>>();
  m.target_k = j.at("target_k");
  m.original_width = j.at("original_width");
  m.seed = j.at("seed");
  for (auto c : m.kept) {
    if (c >= m.original_width) throw FormatError("selection mask index beyond width");
  }
  return m;
}

}  // namespace safetriage
