#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "regimecast/ingest.hpp"
#include "regimecast/nn.hpp"
#include "regimecast/types.hpp"

namespace regimecast {

/// Lasso solution of
///   min_theta (1/2m) ||y - X theta||^2 + lambda ||theta||_1
/// by cyclic coordinate descent with soft-thresholding, converged when the
/// largest single-coefficient change in a sweep falls below 1e-8.  The
/// optional warm start seeds the sweep (defaults to zero).
Vector fit_lasso(const Matrix& X, const Vector& y, Scalar lambda);
Vector fit_lasso(const Matrix& X, const Vector& y, Scalar lambda,
                 Vector theta0);

/// Largest Karush-Kuhn-Tucker violation of `theta` for the same objective:
/// on zero coordinates the excess of |X_j^T r / m| over lambda, on active
/// coordinates the distance of X_j^T r / m from lambda * sign(theta_j).
/// Zero (up to tolerance) iff theta is optimal.
Scalar lasso_kkt_violation(const Matrix& X, const Vector& y,
                           const Vector& theta, Scalar lambda);

/// Log-spaced regularization grid, ascending from floor*lambda_max to
/// lambda_max.  A nonpositive lambda_max collapses the grid to zeros.
Vector lambda_grid(Scalar lambda_max, Index size = 20, Scalar floor = 1e-4);

/// Per-hour day-ahead autoregression: 24 independent lasso fits over the
/// 247-column design (the model feature vector without its day index).
struct LearModel {
  Matrix coefficients;  ///< 24 x 247, standardized space
  Vector intercept;     ///< 24, prediction at x = feature_mean
  Vector lambdas;       ///< 24, per-hour regularization
  Vector feature_mean;  ///< 247
  Vector feature_std;   ///< 247, zero-variance columns pinned to 1
  Vector target_std;    ///< 24, zero-variance hours pinned to 1

  Index hours() const { return coefficients.rows(); }
  Index features() const { return coefficients.cols(); }
};

/// Fitting protocol for the per-hour lasso baseline.
struct LearConfig {
  Index window = 1460;       ///< training-day lookback
  Index holdout_days = 91;   ///< trailing validation block for lambda choice
  Index grid_size = 20;      ///< log-spaced lambda grid points
  Scalar grid_floor = 1e-4;  ///< lower grid edge as a fraction of lambda_max
  Index jobs = 1;            ///< per-hour fits run on this many threads
};

/// Day-ahead feature row for the lasso design: the model feature vector for
/// day `i` with the day-index entry dropped (247 values).
Vector lear_features(const MarketView& view, Index i);

/// Fits the 24 per-hour lasso regressions on the window before `target_day`.
/// Each hour standardizes the design and its own target, picks lambda by
/// mean absolute error on the trailing `holdout_days` block of the window
/// over a log-spaced grid below lambda_max, then refits on the full window.
/// Throws std::invalid_argument when the window yields fewer than
/// holdout_days + 2 training pairs.
LearModel lear_fit(const MarketView& view, Index target_day,
                   const LearConfig& config = {});
LearModel lear_fit(const MarketTable& table, Index target_day,
                   const LearConfig& config = {});

/// Applies the fitted model to one raw 247-feature row:
///   yhat_h = intercept_h + target_std_h * theta_h . ((x - mean) / std).
Vector lear_predict(const LearModel& model, const Vector& features);

/// Convenience: fit on the window before `target_day` and forecast that day.
Vector lear_fit_predict(const MarketView& view, Index target_day,
                        const LearConfig& config = {});
Vector lear_fit_predict(const MarketTable& table, Index target_day,
                        const LearConfig& config = {});

/// Multivariate regression baseline: one network mapping a feature row to
/// all 24 hourly prices at once.
struct DnnConfig {
  std::array<Index, 4> hidden = {64, 64, 64, 64};
  Index epochs = 200;
  Index batch_size = 32;
  Scalar learning_rate = 1e-3;
  std::uint64_t seed = 1;
};

struct DnnModel {
  Mlp network;  ///< input features -> 4 ReLU hidden layers -> hourly outputs
  Vector feature_mean;
  Vector feature_std;
  Vector target_mean;
  Vector target_std;
};

/// Trains the regression network on row-major samples (X: m x p, Y: m x H)
/// with mean-squared-error loss and Adam updates on shuffled minibatches,
/// all standardized; seeded and deterministic.  Requires m >= 32.
DnnModel dnn_fit(const Matrix& X, const Matrix& Y, const DnnConfig& config = {});

/// Applies the network to one raw feature row.
Vector dnn_predict(const DnnModel& model, const Vector& x);

/// Convenience: fit, then forecast the query row.
Vector dnn_fit_predict(const Matrix& X, const Matrix& Y, const Vector& x_star,
                       const DnnConfig& config = {});

/// One evaluated configuration of the seeded random search.
struct DnnTrial {
  DnnConfig config;
  Scalar val_mae = 0.0;
};

struct DnnSearch {
  DnnConfig best;        ///< lowest validation MAE; refit this on all rows
  Scalar val_mae = 0.0;  ///< its holdout score
  std::vector<DnnTrial> trials;
};

/// Seeded random search over hidden width {64, 128} (shared by all four
/// layers) and learning rate {1e-3, 3e-4}.  Each trial trains on the leading
/// rows and scores mean absolute error on the trailing `val_fraction` block;
/// draws and trial seeds derive from base.seed, so the search is
/// deterministic.
DnnSearch dnn_random_search(const Matrix& X, const Matrix& Y,
                            const DnnConfig& base = {}, Index trials = 4,
                            Scalar val_fraction = 0.2);

}  // namespace regimecast
