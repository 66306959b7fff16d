#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "safetriage/features.hpp"
#include "safetriage/forest.hpp"

namespace safetriage {

struct SelectionMask {
  std::vector<std::size_t> kept;  // sorted original column indices
  std::vector<double> importances;
  std::size_t target_k = 0;
  std::size_t original_width = 0;
  std::uint64_t seed = 0;

  std::size_t width() const { return kept.size(); }

  nlohmann::json to_json() const;
  static SelectionMask from_json(const nlohmann::json& j);
};

/// Forest importances over the assembled feature space. Uses the classifier
/// forest configuration. Throws SelectionError when y holds a single class.
std::vector<double> compute_importance(const std::vector<FeatureVector>& x, const Labels& y, std::uint64_t seed,
                                       Execution exec = Execution::Parallel);
/// Same on a dense matrix.
std::vector<double> compute_importance(const Matrix& x, const Labels& y, std::uint64_t seed,
                                       Execution exec = Execution::Parallel);

/// Keeps the `target_k` columns of highest importance, lower index first on
/// ties. Columns with zero importance are never kept. Columns listed in
/// `always_keep` are kept regardless and use up slots.
SelectionMask select(std::span<const double> importances, std::size_t target_k,
                     std::span<const std::size_t> always_keep = {});

/// Projection onto the kept columns. Throws ShapeError on a width mismatch.
std::vector<double> apply(const SelectionMask& mask, std::span<const double> v);
std::vector<double> apply(const SelectionMask& mask, const FeatureVector& v);

}  // namespace safetriage
