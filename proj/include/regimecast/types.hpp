#pragma once

#include <Eigen/Core>

namespace regimecast {

/// Scalar type used throughout the library.
using Scalar = double;

/// Index type matching Eigen's.
using Index = Eigen::Index;

/// Dense dynamic-size types templated on the scalar.
template <typename T>
using VectorXT = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using RowVectorXT = Eigen::Matrix<T, 1, Eigen::Dynamic>;
template <typename T>
using MatrixXT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T, int N>
using VectorNT = Eigen::Matrix<T, N, 1>;

/// Default-scalar aliases.
using Vector = VectorXT<Scalar>;
using RowVector = RowVectorXT<Scalar>;
using Matrix = MatrixXT<Scalar>;
using IntVector = VectorXT<int>;

/// Number of hours in one delivery day.
inline constexpr Index kHoursPerDay = 24;

/// Width of the full model input vector:
/// day index (1) + four price-lag days (4*24) + three load days (3*24)
/// + three renewable days (3*24) + day-of-week indicators (7).
inline constexpr Index kFeatureDim = 1 + 4 * 24 + 3 * 24 + 3 * 24 + 7;
static_assert(kFeatureDim == 248);

/// Width of the lasso-autoregression design (no day index).
inline constexpr Index kLassoFeatureDim = kFeatureDim - 1;

}  // namespace regimecast
