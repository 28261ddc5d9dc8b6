#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "regimecast/types.hpp"

namespace regimecast {

/// Whether smaller or larger raw values are preferable for a criterion.
enum class Direction { Minimize, Maximize };

/// Parses "minimize"/"maximize" (case-sensitive, also accepts "min"/"max").
/// Throws std::invalid_argument on anything else.
Direction direction_from_string(std::string_view text);

/// Inverse of direction_from_string; returns "minimize" or "maximize".
std::string direction_name(Direction d);

/// Alternatives-by-criteria matrix for multi-criteria ranking.  Rows are the
/// competing alternatives, columns the criteria; each column carries an
/// optimization direction and a positive weight, with weights on the simplex.
struct DecisionMatrix {
  std::vector<std::string> alternatives;  ///< row labels, size m
  std::vector<std::string> criteria;      ///< column labels, size n
  Matrix values;                          ///< m x n raw scores
  std::vector<Direction> directions;      ///< per-column preference, size n
  Vector weights;                         ///< positive, sums to 1, size n

  /// Throws std::invalid_argument if shapes disagree, a column is all zero
  /// (vector normalization undefined), or the weights are not a positive
  /// simplex vector.
  void validate() const;
};

/// Relative-closeness ranking.  closeness[i] in [0, 1] is alternative i's
/// similarity to the ideal solution; order lists row indices from best to
/// worst, breaking exact closeness ties by alternative name.
struct TopsisResult {
  Vector closeness;
  std::vector<Index> order;
};

/// Ranks alternatives by similarity to the ideal solution:
///   1. normalize each column to unit Euclidean norm,
///   2. scale columns by their weights,
///   3. take the per-column best (ideal) and worst (anti-ideal) value
///      according to the column direction,
///   4. compute each row's Euclidean distance to ideal (S+) and anti-ideal
///      (S-),
///   5. closeness = S- / (S+ + S-), defined as 0.5 when both distances are
///      zero (all alternatives identical),
///   6. order rows by descending closeness, ties broken by name.
/// Multiplying any column by a positive constant leaves the result unchanged.
TopsisResult rank(const DecisionMatrix& dm);

}  // namespace regimecast
