#include "regimecast/bench.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>
#include <vector>

#include "regimecast/rng.hpp"

namespace regimecast {

namespace {

constexpr Scalar kCoordTol = 1e-8;
constexpr long kMaxSweeps = 20000;

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

Scalar soft_threshold(Scalar value, Scalar threshold) {
  if (value > threshold) return value - threshold;
  if (value < -threshold) return value + threshold;
  return 0.0;
}

/// Penalized objective in covariance form, up to the constant y.y/2m:
/// f(theta) = theta.linear/2 - corr.theta + lambda |theta|_1 with
/// linear = gram theta.
Scalar lasso_value(const Vector& corr, Scalar lambda, const Vector& theta,
                   const Vector& linear) {
  return 0.5 * theta.dot(linear) - corr.dot(theta) +
         lambda * theta.cwiseAbs().sum();
}

/// Cyclic coordinate descent on the covariance form of the lasso, with
/// gram = X^T X / m and corr = X^T y / m.  Sweeps over all coordinates
/// alternate with bursts over the active set; between bursts the stationarity
/// system on the current face is solved directly (tiny ridge, LDLT) and the
/// solution kept when it lowers the objective, which cuts through the slow
/// tail on collinear designs.  Converged when a full sweep moves no
/// coefficient by 1e-8.
Vector solve_lasso(const Matrix& gram, const Vector& corr, Scalar lambda,
                   Vector theta) {
  const Index p = corr.size();
  for (Index j = 0; j < p; ++j) {
    if (gram(j, j) <= 0.0) theta[j] = 0.0;
  }
  Vector linear = gram * theta;  // gram . theta, kept incrementally
  std::vector<Index> active;
  long sweeps = 0;

  auto update = [&](Index j, Scalar& max_delta) {
    const Scalar curvature = gram(j, j);
    if (curvature <= 0.0) return;
    const Scalar rho = corr[j] - linear[j] + curvature * theta[j];
    const Scalar updated = soft_threshold(rho, lambda) / curvature;
    const Scalar delta = updated - theta[j];
    if (delta != 0.0) {
      linear += gram.col(j) * delta;
      theta[j] = updated;
      max_delta = std::max(max_delta, std::abs(delta));
    }
  };

  while (sweeps < kMaxSweeps) {
    Scalar full_delta = 0.0;
    for (Index j = 0; j < p; ++j) update(j, full_delta);
    ++sweeps;
    if (full_delta < kCoordTol) break;

    active.clear();
    for (Index j = 0; j < p; ++j) {
      if (theta[j] != 0.0) active.push_back(j);
    }
    constexpr long kBurst = 30;
    for (long burst = 0; burst < kBurst && sweeps < kMaxSweeps; ++burst) {
      Scalar delta = 0.0;
      for (Index j : active) update(j, delta);
      ++sweeps;
      if (delta < kCoordTol) break;
    }

    // Direct solve of gram_AA x = corr_A - lambda sign(theta_A) on the
    // current face; acceptance is by objective value, so a wrong face or a
    // degenerate system is simply rejected and descent continues.
    active.clear();
    for (Index j = 0; j < p; ++j) {
      if (theta[j] != 0.0) active.push_back(j);
    }
    if (!active.empty()) {
      const auto k = static_cast<Index>(active.size());
      Matrix face = gram(active, active);
      face.diagonal().array() += 1e-12;
      Vector rhs(k);
      for (Index a = 0; a < k; ++a) {
        const Index j = active[static_cast<std::size_t>(a)];
        rhs[a] = corr[j] - lambda * (theta[j] > 0.0 ? 1.0 : -1.0);
      }
      const Eigen::LDLT<Matrix> solver(face);
      if (solver.info() == Eigen::Success) {
        const Vector x = solver.solve(rhs);
        Vector candidate = theta;
        for (Index a = 0; a < k; ++a) {
          candidate[active[static_cast<std::size_t>(a)]] = x[a];
        }
        const Vector candidate_linear = gram * candidate;
        if (lasso_value(corr, lambda, candidate, candidate_linear) <=
            lasso_value(corr, lambda, theta, linear)) {
          theta = candidate;
          linear = candidate_linear;
        }
      }
    }
  }
  return theta;
}

/// Column means and standard deviations of a row-major sample block;
/// zero-variance columns get unit scale so centering maps them to zero.
void column_moments(const Matrix& X, Vector& mean, Vector& std_dev) {
  const auto m = static_cast<Scalar>(X.rows());
  mean = X.colwise().mean();
  std_dev = Vector::Ones(X.cols());
  for (Index j = 0; j < X.cols(); ++j) {
    const Scalar var = (X.col(j).array() - mean[j]).square().sum() / m;
    if (var > 0.0) std_dev[j] = std::sqrt(var);
  }
}

Matrix standardize_rows(const Matrix& X, const Vector& mean,
                        const Vector& std_dev) {
  return (X.rowwise() - mean.transpose()).array().rowwise() /
         std_dev.transpose().array();
}

/// Shared read-only inputs for the per-hour lasso fits.  The design blocks
/// and their gram matrices do not depend on the hour, so they are built once.
struct LearProblem {
  const Matrix& targets;  // m x 24 raw
  const LearConfig& config;
  Matrix fit_std;    // leading block, standardized by its own moments
  Matrix val_std;    // holdout block, standardized by the fit moments
  Matrix gram_fit;   // fit_std^T fit_std / fit_rows
  Matrix full_std;   // whole window, standardized by full moments
  Matrix gram_full;  // full_std^T full_std / m
  Index fit_rows = 0;
};

/// Lambda selection and final refit for one hour; writes one model row.
void fit_hour(const LearProblem& prob, Index hour, LearModel& model) {
  const Index m = prob.targets.rows();
  const Vector y = prob.targets.col(hour);

  // Selection phase: fit on the leading block, score each lambda by
  // raw-price MAE on the trailing holdout block.
  const Vector y_fit = y.head(prob.fit_rows);
  const Scalar y_fit_mean = y_fit.mean();
  Scalar y_fit_scale = 1.0;
  {
    const Scalar var = (y_fit.array() - y_fit_mean).square().sum() /
                       static_cast<Scalar>(prob.fit_rows);
    if (var > 0.0) y_fit_scale = std::sqrt(var);
  }
  const Vector y_fit_std = (y_fit.array() - y_fit_mean) / y_fit_scale;
  const Vector corr_fit = prob.fit_std.transpose() * y_fit_std /
                          static_cast<Scalar>(prob.fit_rows);
  const Scalar lambda_max = corr_fit.cwiseAbs().maxCoeff();
  const Vector grid =
      lambda_grid(lambda_max, prob.config.grid_size, prob.config.grid_floor);
  const Vector y_val = y.tail(m - prob.fit_rows);

  Scalar best_mae = std::numeric_limits<Scalar>::infinity();
  Scalar best_lambda = grid[0];
  Vector warm = Vector::Zero(corr_fit.size());
  for (Index g = 0; g < grid.size(); ++g) {
    warm = solve_lasso(prob.gram_fit, corr_fit, grid[g], warm);
    const Vector pred =
        (prob.val_std * warm).array() * y_fit_scale + y_fit_mean;
    const Scalar mae = (pred - y_val).cwiseAbs().mean();
    if (mae < best_mae) {
      best_mae = mae;
      best_lambda = grid[g];
    }
  }

  // Final refit on the whole window, cold-started so the stored row equals
  // an independent fit_lasso call on the same standardized problem.
  const Scalar y_mean = y.mean();
  Scalar y_scale = 1.0;
  {
    const Scalar var =
        (y.array() - y_mean).square().sum() / static_cast<Scalar>(m);
    if (var > 0.0) y_scale = std::sqrt(var);
  }
  const Vector y_std = (y.array() - y_mean) / y_scale;
  const Vector corr_full =
      prob.full_std.transpose() * y_std / static_cast<Scalar>(m);
  model.coefficients.row(hour) =
      solve_lasso(prob.gram_full, corr_full, best_lambda,
                  Vector::Zero(corr_full.size()))
          .transpose();
  model.intercept[hour] = y_mean;
  model.lambdas[hour] = best_lambda;
  model.target_std[hour] = y_scale;
}

}  // namespace

Vector fit_lasso(const Matrix& X, const Vector& y, Scalar lambda) {
  return fit_lasso(X, y, lambda, Vector::Zero(X.cols()));
}

Vector fit_lasso(const Matrix& X, const Vector& y, Scalar lambda,
                 Vector theta0) {
  const Index m = X.rows();
  require(m >= 2, "lasso needs at least two rows");
  require(y.size() == m, "one response per row required");
  require(lambda >= 0.0, "lambda must be nonnegative");
  require(theta0.size() == X.cols(), "warm start width must match the design");
  const Matrix gram = X.transpose() * X / static_cast<Scalar>(m);
  const Vector corr = X.transpose() * y / static_cast<Scalar>(m);
  return solve_lasso(gram, corr, lambda, std::move(theta0));
}

Scalar lasso_kkt_violation(const Matrix& X, const Vector& y,
                           const Vector& theta, Scalar lambda) {
  require(X.rows() == y.size() && X.cols() == theta.size(),
          "shape mismatch in KKT check");
  const Vector gradient =
      X.transpose() * (y - X * theta) / static_cast<Scalar>(X.rows());
  Scalar violation = 0.0;
  for (Index j = 0; j < theta.size(); ++j) {
    if (theta[j] == 0.0) {
      violation = std::max(violation, std::abs(gradient[j]) - lambda);
    } else {
      const Scalar sign = theta[j] > 0.0 ? 1.0 : -1.0;
      violation = std::max(violation, std::abs(gradient[j] - lambda * sign));
    }
  }
  return std::max(violation, Scalar(0.0));
}

Vector lambda_grid(Scalar lambda_max, Index size, Scalar floor) {
  require(size >= 2, "grid needs at least two points");
  require(floor > 0.0 && floor < 1.0, "grid floor must lie in (0, 1)");
  if (lambda_max <= 0.0) return Vector::Zero(size);
  Vector grid(size);
  for (Index i = 0; i < size; ++i) {
    const Scalar t =
        1.0 - static_cast<Scalar>(i) / static_cast<Scalar>(size - 1);
    grid[i] = lambda_max * std::pow(floor, t);
  }
  return grid;
}

Vector lear_features(const MarketView& view, Index i) {
  const Vector full = build_features(view, i);
  return full.tail(full.size() - 1);
}

LearModel lear_fit(const MarketView& view, Index target_day,
                   const LearConfig& config) {
  require(config.holdout_days >= 1, "holdout must be at least one day");
  require(config.jobs >= 1, "jobs must be positive");
  const TrainingSet ts = build_training_set(view, target_day, config.window);
  const Index m = ts.inputs.rows();
  require(m >= config.holdout_days + 2,
          "insufficient history for lambda selection");
  const Matrix design = ts.inputs.rightCols(ts.inputs.cols() - 1);
  const Index hours = ts.targets.cols();

  LearModel model;
  model.coefficients.resize(hours, design.cols());
  model.intercept.resize(hours);
  model.lambdas.resize(hours);
  model.target_std.resize(hours);
  column_moments(design, model.feature_mean, model.feature_std);

  LearProblem prob{ts.targets, config};
  prob.fit_rows = m - config.holdout_days;
  prob.full_std =
      standardize_rows(design, model.feature_mean, model.feature_std);
  prob.gram_full =
      prob.full_std.transpose() * prob.full_std / static_cast<Scalar>(m);
  const Matrix fit_design = design.topRows(prob.fit_rows);
  Vector fit_mean;
  Vector fit_scale;
  column_moments(fit_design, fit_mean, fit_scale);
  prob.fit_std = standardize_rows(fit_design, fit_mean, fit_scale);
  prob.gram_fit = prob.fit_std.transpose() * prob.fit_std /
                  static_cast<Scalar>(prob.fit_rows);
  prob.val_std = standardize_rows(design.bottomRows(m - prob.fit_rows),
                                  fit_mean, fit_scale);
  const Index jobs = std::min<Index>(config.jobs, hours);
  if (jobs <= 1) {
    for (Index h = 0; h < hours; ++h) fit_hour(prob, h, model);
  } else {
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(jobs));
    for (Index w = 0; w < jobs; ++w) {
      workers.emplace_back([&prob, &model, w, jobs, hours] {
        for (Index h = w; h < hours; h += jobs) fit_hour(prob, h, model);
      });
    }
    for (auto& worker : workers) worker.join();
  }
  return model;
}

LearModel lear_fit(const MarketTable& table, Index target_day,
                   const LearConfig& config) {
  return lear_fit(MarketView::for_target(table, target_day), target_day,
                  config);
}

Vector lear_predict(const LearModel& model, const Vector& features) {
  require(features.size() == model.features(),
          "feature width does not match the fitted model");
  const Vector standardized =
      (features - model.feature_mean).cwiseQuotient(model.feature_std);
  return model.intercept.array() +
         model.target_std.array() *
             (model.coefficients * standardized).array();
}

Vector lear_fit_predict(const MarketView& view, Index target_day,
                        const LearConfig& config) {
  const LearModel model = lear_fit(view, target_day, config);
  return lear_predict(model, lear_features(view, target_day));
}

Vector lear_fit_predict(const MarketTable& table, Index target_day,
                        const LearConfig& config) {
  return lear_fit_predict(MarketView::for_target(table, target_day),
                          target_day, config);
}

DnnModel dnn_fit(const Matrix& X, const Matrix& Y, const DnnConfig& config) {
  const Index m = X.rows();
  require(m >= 32, "network baseline needs at least 32 training rows");
  require(Y.rows() == m, "one target row per feature row required");
  require(config.epochs >= 1 && config.batch_size >= 1 &&
              config.learning_rate > 0.0,
          "invalid training configuration");

  DnnModel model;
  column_moments(X, model.feature_mean, model.feature_std);
  column_moments(Y, model.target_mean, model.target_std);
  // Samples as columns for the network.
  const Matrix inputs =
      standardize_rows(X, model.feature_mean, model.feature_std).transpose();
  const Matrix targets =
      standardize_rows(Y, model.target_mean, model.target_std).transpose();

  RandomSource rng(config.seed);
  RandomSource init_rng = rng.substream("init");
  const std::vector<Index> hidden(config.hidden.begin(), config.hidden.end());
  model.network =
      Mlp::create(X.cols(), hidden, Y.cols(), Activation::ReLU, init_rng);
  AdamConfig adam;
  adam.learning_rate = config.learning_rate;
  Adam optimizer(model.network, adam);
  RandomSource shuffle_rng = rng.substream("shuffle");

  MlpTrace trace;
  auto grads = MlpGrads::zeros_like(model.network);
  for (Index epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = shuffle_rng.permutation(m);
    for (Index start = 0; start < m; start += config.batch_size) {
      const Index count = std::min(config.batch_size, m - start);
      Matrix batch(inputs.rows(), count);
      Matrix batch_targets(targets.rows(), count);
      for (Index j = 0; j < count; ++j) {
        const Index src = order[static_cast<std::size_t>(start + j)];
        batch.col(j) = inputs.col(src);
        batch_targets.col(j) = targets.col(src);
      }
      grads.set_zero();
      Matrix grad_pred;
      const Matrix pred = forward(model.network, batch, trace);
      mse_loss(pred, batch_targets, &grad_pred);
      backward(model.network, trace, grad_pred, grads);
      optimizer.step(model.network, grads);
    }
  }
  return model;
}

Vector dnn_predict(const DnnModel& model, const Vector& x) {
  require(x.size() == model.feature_mean.size(),
          "feature width does not match the fitted model");
  const Vector standardized =
      (x - model.feature_mean).cwiseQuotient(model.feature_std);
  const Vector out = forward(model.network, standardized);
  return model.target_mean.array() + model.target_std.array() * out.array();
}

Vector dnn_fit_predict(const Matrix& X, const Matrix& Y, const Vector& x_star,
                       const DnnConfig& config) {
  return dnn_predict(dnn_fit(X, Y, config), x_star);
}

DnnSearch dnn_random_search(const Matrix& X, const Matrix& Y,
                            const DnnConfig& base, Index trials,
                            Scalar val_fraction) {
  require(trials >= 1, "search needs at least one trial");
  require(val_fraction > 0.0 && val_fraction < 1.0,
          "val_fraction must lie in (0, 1)");
  const Index m = X.rows();
  require(Y.rows() == m, "one target row per feature row required");
  const Index val_count = std::max<Index>(
      1, static_cast<Index>(val_fraction * static_cast<Scalar>(m)));
  const Index fit_count = m - val_count;

  RandomSource rng(base.seed);
  RandomSource draw = rng.substream("search");

  DnnSearch search;
  search.val_mae = std::numeric_limits<Scalar>::infinity();
  for (Index t = 0; t < trials; ++t) {
    DnnTrial trial;
    trial.config = base;
    const Index width = draw.integer(2) == 0 ? 64 : 128;
    trial.config.hidden = {width, width, width, width};
    trial.config.learning_rate = draw.integer(2) == 0 ? 1e-3 : 3e-4;
    trial.config.seed = base.seed + 1 + static_cast<std::uint64_t>(t);

    const DnnModel model =
        dnn_fit(X.topRows(fit_count), Y.topRows(fit_count), trial.config);
    Scalar abs_err = 0.0;
    for (Index i = 0; i < val_count; ++i) {
      const Vector pred = dnn_predict(model, X.row(fit_count + i).transpose());
      abs_err += (pred - Y.row(fit_count + i).transpose()).cwiseAbs().sum();
    }
    trial.val_mae = abs_err / static_cast<Scalar>(val_count * Y.cols());
    if (trial.val_mae < search.val_mae) {
      search.val_mae = trial.val_mae;
      search.best = trial.config;
    }
    search.trials.push_back(trial);
  }
  return search;
}

}  // namespace regimecast
