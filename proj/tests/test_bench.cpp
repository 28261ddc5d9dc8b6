#include "regimecast/bench.hpp"

#include <Eigen/QR>

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "regimecast/dates.hpp"
#include "regimecast/ingest.hpp"
#include "regimecast/rng.hpp"
#include "regimecast/synth.hpp"
#include "regimecast/types.hpp"

namespace rc = regimecast;

namespace {

rc::Matrix random_matrix(rc::Index rows, rc::Index cols,
                         rc::RandomSource& rng) {
  rc::Matrix X(rows, cols);
  for (rc::Index i = 0; i < rows; ++i) {
    for (rc::Index j = 0; j < cols; ++j) X(i, j) = rng.normal();
  }
  return X;
}

/// Center and scale to exact zero mean and unit (1/m)-variance per column.
void standardize_columns(rc::Matrix& X) {
  for (rc::Index j = 0; j < X.cols(); ++j) {
    const rc::Scalar mean = X.col(j).mean();
    X.col(j).array() -= mean;
    const rc::Scalar scale =
        std::sqrt(X.col(j).squaredNorm() / static_cast<rc::Scalar>(X.rows()));
    if (scale > 0.0) X.col(j) /= scale;
  }
}

rc::Scalar lasso_objective(const rc::Matrix& X, const rc::Vector& y,
                           const rc::Vector& theta, rc::Scalar lambda) {
  const rc::Scalar fit = (y - X * theta).squaredNorm() /
                         (2.0 * static_cast<rc::Scalar>(X.rows()));
  return fit + lambda * theta.cwiseAbs().sum();
}

/// Market table whose cells come from per-series generators.
template <typename PriceFn, typename LoadFn, typename RenewFn>
rc::MarketTable make_table(rc::Index n_days, PriceFn price, LoadFn load,
                           RenewFn renew) {
  rc::MarketTable table;
  const rc::Date start = rc::make_date(2020, 1, 6);  // a Monday
  table.days.resize(static_cast<std::size_t>(n_days));
  table.price.resize(n_days, rc::kHoursPerDay);
  table.load.resize(n_days, rc::kHoursPerDay);
  table.renew.resize(n_days, rc::kHoursPerDay);
  for (rc::Index i = 0; i < n_days; ++i) {
    table.days[static_cast<std::size_t>(i)] = start + std::chrono::days(i);
    for (rc::Index h = 0; h < rc::kHoursPerDay; ++h) {
      table.price(i, h) = price(i, h);
      table.load(i, h) = load(i, h);
      table.renew(i, h) = renew(i, h);
    }
  }
  return table;
}

rc::Scalar wavy_load(rc::Index i, rc::Index h) {
  return 100.0 + 12.0 * std::sin(0.41 * static_cast<rc::Scalar>(i)) +
         8.0 * std::cos(0.26 * static_cast<rc::Scalar>(h + 1));
}

rc::Scalar wavy_renew(rc::Index i, rc::Index h) {
  return 40.0 + 9.0 * std::cos(0.23 * static_cast<rc::Scalar>(i)) +
         5.0 * std::sin(0.31 * static_cast<rc::Scalar>(h + 2));
}

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("lambda zero matches the normal equations") {
  rc::RandomSource rng(301);
  auto stream = rng.substream("ls");
  const rc::Matrix X = random_matrix(60, 5, stream);
  rc::Vector y(60);
  for (rc::Index i = 0; i < 60; ++i) y[i] = stream.normal() * 2.0;
  const rc::Vector theta = rc::fit_lasso(X, y, 0.0);
  const rc::Vector oracle = X.colPivHouseholderQr().solve(y);
  for (rc::Index j = 0; j < 5; ++j) {
    CHECK(std::abs(theta[j] - oracle[j]) < 1e-6);
  }
  CHECK(rc::lasso_kkt_violation(X, y, theta, 0.0) < 1e-6);
}

TEST_CASE("one-dimensional solution is the soft threshold of the correlation") {
  rc::RandomSource rng(302);
  auto stream = rng.substream("one");
  const rc::Index m = 50;
  rc::Matrix X = random_matrix(m, 1, stream);
  standardize_columns(X);
  rc::Matrix y_mat = random_matrix(m, 1, stream);
  y_mat.col(0) += 0.8 * X.col(0);
  standardize_columns(y_mat);
  const rc::Vector y = y_mat.col(0);
  const rc::Scalar c = X.col(0).dot(y) / static_cast<rc::Scalar>(m);
  const rc::Scalar magnitude = std::abs(c);
  for (rc::Scalar lambda :
       {0.0, 0.25 * magnitude, 0.5 * magnitude, 0.9 * magnitude, magnitude,
        1.5 * magnitude}) {
    const rc::Vector theta = rc::fit_lasso(X, y, lambda);
    const rc::Scalar expected =
        (magnitude > lambda ? (c > 0 ? 1.0 : -1.0) * (magnitude - lambda)
                            : 0.0);
    CHECK(theta[0] == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("lambda at or above lambda_max zeroes every coefficient") {
  rc::RandomSource rng(303);
  auto stream = rng.substream("max");
  rc::Matrix X = random_matrix(40, 6, stream);
  standardize_columns(X);
  rc::Vector y(40);
  for (rc::Index i = 0; i < 40; ++i) y[i] = stream.normal();
  y.array() -= y.mean();
  const rc::Scalar lambda_max =
      (X.transpose() * y).cwiseAbs().maxCoeff() / 40.0;
  for (rc::Scalar lambda : {lambda_max, 1.5 * lambda_max, 10.0 * lambda_max}) {
    const rc::Vector theta = rc::fit_lasso(X, y, lambda);
    CHECK(theta.cwiseAbs().maxCoeff() == 0.0);
  }
  // Just below lambda_max at least one coefficient activates.
  const rc::Vector active = rc::fit_lasso(X, y, 0.99 * lambda_max);
  CHECK(active.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("every returned solution satisfies the KKT conditions") {
  rc::RandomSource rng(304);
  auto stream = rng.substream("kkt");
  for (int rep = 0; rep < 8; ++rep) {
    const rc::Index m = 30 + static_cast<rc::Index>(stream.integer(40));
    const rc::Index p = 2 + static_cast<rc::Index>(stream.integer(10));
    rc::Matrix X = random_matrix(m, p, stream);
    // Correlated columns to stress the cyclic updates.
    if (p >= 2) X.col(1) = 0.7 * X.col(0) + 0.3 * X.col(1);
    rc::Vector y(m);
    for (rc::Index i = 0; i < m; ++i) y[i] = stream.normal() * 3.0;
    const rc::Scalar lambda_max =
        (X.transpose() * y).cwiseAbs().maxCoeff() / static_cast<rc::Scalar>(m);
    for (rc::Scalar frac : {0.0, 0.05, 0.3, 0.8}) {
      const rc::Vector theta = rc::fit_lasso(X, y, frac * lambda_max);
      CHECK(rc::lasso_kkt_violation(X, y, theta, frac * lambda_max) < 1e-6);
    }
  }
}

TEST_CASE("larger-lambda solutions win their own objective") {
  rc::RandomSource rng(305);
  auto stream = rng.substream("obj");
  const rc::Matrix X = random_matrix(50, 8, stream);
  rc::Vector y(50);
  for (rc::Index i = 0; i < 50; ++i) y[i] = stream.normal();
  const rc::Scalar lambda_max =
      (X.transpose() * y).cwiseAbs().maxCoeff() / 50.0;
  const rc::Vector grid = rc::lambda_grid(lambda_max, 10, 1e-3);
  rc::Vector previous = rc::fit_lasso(X, y, grid[0]);
  for (rc::Index g = 1; g < grid.size(); ++g) {
    const rc::Vector current = rc::fit_lasso(X, y, grid[g]);
    CHECK(lasso_objective(X, y, current, grid[g]) <=
          lasso_objective(X, y, previous, grid[g]) + 1e-9);
    previous = current;
  }
}

TEST_CASE("lambda grid is log-spaced and validated") {
  const rc::Vector grid = rc::lambda_grid(2.0, 20, 1e-4);
  CHECK(grid.size() == 20);
  CHECK(grid[0] == doctest::Approx(2e-4).epsilon(1e-12));
  CHECK(grid[19] == doctest::Approx(2.0).epsilon(1e-12));
  for (rc::Index i = 1; i < 20; ++i) {
    CHECK(grid[i] > grid[i - 1]);
    if (i >= 2) {
      CHECK(grid[i] / grid[i - 1] ==
            doctest::Approx(grid[i - 1] / grid[i - 2]).epsilon(1e-9));
    }
  }
  CHECK(rc::lambda_grid(0.0).isZero());
  CHECK(rc::lambda_grid(-1.0).isZero());
  CHECK_THROWS_AS(rc::lambda_grid(1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(rc::lambda_grid(1.0, 20, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(rc::lambda_grid(1.0, 20, 1.0), std::invalid_argument);
}

TEST_CASE("constant-price table forecasts the constant") {
  const auto table = make_table(
      160, [](rc::Index, rc::Index) { return 42.0; }, wavy_load, wavy_renew);
  rc::LearConfig config;
  config.window = 152;
  const rc::Vector forecast = rc::lear_fit_predict(table, 159, config);
  REQUIRE(forecast.size() == rc::kHoursPerDay);
  for (rc::Index h = 0; h < rc::kHoursPerDay; ++h) {
    CHECK(forecast[h] == doctest::Approx(42.0).epsilon(1e-6));
  }
}

TEST_CASE("weekly cycle is forecast to under one percent of its amplitude") {
  const rc::Scalar amplitude = 10.0;
  auto cycle = [&](rc::Index i, rc::Index h) {
    const rc::Scalar dows[7] = {0.0, 0.15, 0.35, 0.5, 0.65, 0.85, 1.0};
    const int dow = static_cast<int>(i % 7);  // day 0 is a Monday
    return 50.0 + amplitude * dows[dow] +
           2.0 * std::sin(0.26 * static_cast<rc::Scalar>(h));
  };
  const auto table = make_table(300, cycle, wavy_load, wavy_renew);
  const rc::Index target = 299;
  rc::LearConfig config;
  config.window = 292;
  const rc::Vector forecast = rc::lear_fit_predict(table, target, config);
  rc::Scalar mae = 0.0;
  for (rc::Index h = 0; h < rc::kHoursPerDay; ++h) {
    mae += std::abs(forecast[h] - table.price(target, h));
  }
  mae /= static_cast<rc::Scalar>(rc::kHoursPerDay);
  CHECK(mae < 0.01 * amplitude);
}

TEST_CASE("per-hour coefficients equal independent single-hour fits") {
  rc::SynthConfig synth;
  synth.n_days = 500;
  synth.seed = 17;
  const auto table = rc::generate_synthetic_market(synth);
  const rc::Index target = 499;
  const auto view = rc::MarketView::for_target(table, target);
  rc::LearConfig config;
  config.window = 492;
  const rc::LearModel model = rc::lear_fit(view, target, config);
  CHECK(model.features() == rc::kLassoFeatureDim);
  CHECK(model.hours() == rc::kHoursPerDay);

  const rc::TrainingSet ts = rc::build_training_set(view, target, config.window);
  const rc::Matrix design = ts.inputs.rightCols(ts.inputs.cols() - 1);
  rc::Matrix standardized = design;
  for (rc::Index j = 0; j < standardized.cols(); ++j) {
    standardized.col(j) =
        (design.col(j).array() - model.feature_mean[j]) / model.feature_std[j];
  }
  for (rc::Index h : {rc::Index(0), rc::Index(13), rc::Index(23)}) {
    const rc::Vector y =
        (ts.targets.col(h).array() - model.intercept[h]) / model.target_std[h];
    const rc::Vector direct =
        rc::fit_lasso(standardized, y, model.lambdas[h]);
    CHECK((direct.transpose() - model.coefficients.row(h))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    CHECK(rc::lasso_kkt_violation(standardized, y,
                                  model.coefficients.row(h).transpose(),
                                  model.lambdas[h]) < 1e-6);
  }

  // Threaded per-hour fitting reproduces the serial model exactly.
  rc::LearConfig threaded = config;
  threaded.jobs = 3;
  const rc::LearModel parallel = rc::lear_fit(view, target, threaded);
  CHECK((parallel.coefficients - model.coefficients).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK((parallel.lambdas - model.lambdas).cwiseAbs().maxCoeff() == 0.0);
  const rc::Vector x = rc::lear_features(view, target);
  CHECK(x.size() == rc::kLassoFeatureDim);
  CHECK((rc::lear_predict(parallel, x) - rc::lear_predict(model, x))
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("lear validates history and feature widths") {
  const auto table = make_table(
      60, [](rc::Index i, rc::Index) { return 30.0 + rc::Scalar(i % 5); },
      wavy_load, wavy_renew);
  rc::LearConfig short_window;
  short_window.window = 52;
  CHECK_THROWS_AS(rc::lear_fit_predict(table, 59, short_window),
                  std::invalid_argument);
  CHECK_THROWS_AS(rc::lear_fit_predict(table, 59), std::invalid_argument);

  const auto longer = make_table(
      120, [](rc::Index i, rc::Index) { return 30.0 + rc::Scalar(i % 5); },
      wavy_load, wavy_renew);
  rc::LearConfig fits;
  fits.window = 112;
  const rc::LearModel model = rc::lear_fit(longer, 119, fits);
  CHECK_THROWS_AS(rc::lear_predict(model, rc::Vector::Zero(10)),
                  std::invalid_argument);
  rc::LearConfig bad = fits;
  bad.holdout_days = 0;
  CHECK_THROWS_AS(rc::lear_fit(longer, 119, bad), std::invalid_argument);
}

TEST_CASE("network baseline recovers constant targets") {
  rc::RandomSource rng(306);
  auto stream = rng.substream("const");
  const rc::Matrix X = random_matrix(200, 6, stream);
  const rc::Matrix Y = rc::Matrix::Constant(200, 5, 7.5);
  rc::DnnConfig config;
  config.hidden = {8, 8, 8, 8};
  config.epochs = 250;
  config.learning_rate = 1e-2;
  config.seed = 5;
  const rc::DnnModel model = rc::dnn_fit(X, Y, config);
  for (int rep = 0; rep < 5; ++rep) {
    rc::Vector x(6);
    for (rc::Index j = 0; j < 6; ++j) x[j] = stream.normal();
    const rc::Vector pred = rc::dnn_predict(model, x);
    for (rc::Index h = 0; h < pred.size(); ++h) {
      CHECK(std::abs(pred[h] - 7.5) < 0.1);
    }
  }
}

TEST_CASE("same seed and configuration reproduce the forecast exactly") {
  rc::RandomSource rng(307);
  auto stream = rng.substream("det");
  const rc::Matrix X = random_matrix(64, 5, stream);
  rc::Matrix Y = random_matrix(64, 4, stream);
  rc::Vector x_star(5);
  for (rc::Index j = 0; j < 5; ++j) x_star[j] = stream.normal();
  rc::DnnConfig config;
  config.hidden = {8, 8, 8, 8};
  config.epochs = 20;
  config.seed = 11;
  const rc::Vector a = rc::dnn_fit_predict(X, Y, x_star, config);
  const rc::Vector b = rc::dnn_fit_predict(X, Y, x_star, config);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  config.seed = 12;
  const rc::Vector c = rc::dnn_fit_predict(X, Y, x_star, config);
  CHECK((a - c).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("linear map is learned to a tenth of the output spread") {
  rc::RandomSource rng(308);
  auto stream = rng.substream("linear");
  const rc::Index m = 400;
  const rc::Index held = 80;
  const rc::Index p = 8;
  const rc::Index outputs = 6;
  const rc::Matrix A = random_matrix(p, outputs, stream);
  rc::Vector b(outputs);
  for (rc::Index j = 0; j < outputs; ++j) b[j] = stream.normal();
  const rc::Matrix X = random_matrix(m + held, p, stream);
  rc::Matrix Y = X * A;
  Y.rowwise() += b.transpose();

  rc::DnnConfig config;
  config.hidden = {32, 32, 32, 32};
  config.epochs = 400;
  config.learning_rate = 3e-3;
  config.seed = 21;
  const rc::DnnModel model =
      rc::dnn_fit(X.topRows(m), Y.topRows(m), config);
  rc::Scalar abs_err = 0.0;
  for (rc::Index i = 0; i < held; ++i) {
    const rc::Vector pred = rc::dnn_predict(model, X.row(m + i).transpose());
    abs_err += (pred - Y.row(m + i).transpose()).cwiseAbs().sum();
  }
  const rc::Scalar mae =
      abs_err / static_cast<rc::Scalar>(held * outputs);
  const rc::Scalar spread = std::sqrt(
      (Y.array() - Y.mean()).square().sum() / static_cast<rc::Scalar>(Y.size()));
  CHECK(mae < 0.1 * spread);
}

TEST_CASE("network baseline validates its inputs") {
  rc::RandomSource rng(309);
  auto stream = rng.substream("val");
  const rc::Matrix X = random_matrix(31, 4, stream);
  const rc::Matrix Y = random_matrix(31, 3, stream);
  CHECK_THROWS_AS(rc::dnn_fit(X, Y), std::invalid_argument);
  const rc::Matrix X2 = random_matrix(40, 4, stream);
  const rc::Matrix Y2 = random_matrix(39, 3, stream);
  CHECK_THROWS_AS(rc::dnn_fit(X2, Y2), std::invalid_argument);
  rc::DnnConfig bad;
  bad.epochs = 0;
  CHECK_THROWS_AS(rc::dnn_fit(random_matrix(40, 4, stream),
                              random_matrix(40, 3, stream), bad),
                  std::invalid_argument);
}

TEST_CASE("forward pass stays finite for finite inputs") {
  rc::RandomSource rng(310);
  auto stream = rng.substream("finite");
  const rc::Matrix X = random_matrix(40, 4, stream);
  const rc::Matrix Y = random_matrix(40, 3, stream);
  rc::DnnConfig config;
  config.hidden = {8, 8, 8, 8};
  config.epochs = 10;
  const rc::DnnModel model = rc::dnn_fit(X, Y, config);
  rc::Vector huge(4);
  huge << 1e6, -1e6, 1e5, -1e5;
  const rc::Vector pred = rc::dnn_predict(model, huge);
  for (rc::Index h = 0; h < pred.size(); ++h) CHECK(std::isfinite(pred[h]));
}

TEST_CASE("random search draws from the declared sets and picks the minimum") {
  rc::RandomSource rng(311);
  auto stream = rng.substream("search");
  const rc::Index m = 60;
  const rc::Matrix X = random_matrix(m, 5, stream);
  const rc::Matrix A = random_matrix(5, 3, stream);
  const rc::Matrix Y = X * A;
  rc::DnnConfig base;
  base.epochs = 30;
  base.seed = 41;
  const rc::DnnSearch search = rc::dnn_random_search(X, Y, base, 4, 0.2);
  REQUIRE(search.trials.size() == 4);
  rc::Scalar best = std::numeric_limits<rc::Scalar>::infinity();
  for (std::size_t t = 0; t < search.trials.size(); ++t) {
    const auto& trial = search.trials[t];
    CHECK((trial.config.hidden[0] == 64 || trial.config.hidden[0] == 128));
    for (int l = 1; l < 4; ++l) {
      CHECK(trial.config.hidden[static_cast<std::size_t>(l)] ==
            trial.config.hidden[0]);
    }
    CHECK((trial.config.learning_rate == 1e-3 ||
           trial.config.learning_rate == 3e-4));
    CHECK(trial.config.seed == base.seed + 1 + t);
    CHECK(std::isfinite(trial.val_mae));
    best = std::min(best, trial.val_mae);
  }
  CHECK(search.val_mae == best);

  const rc::DnnSearch again = rc::dnn_random_search(X, Y, base, 4, 0.2);
  CHECK(again.val_mae == search.val_mae);
  CHECK(again.best.seed == search.best.seed);
  CHECK(again.best.hidden == search.best.hidden);
  CHECK(again.best.learning_rate == search.best.learning_rate);

  CHECK_THROWS_AS(rc::dnn_random_search(X, Y, base, 0, 0.2),
                  std::invalid_argument);
  CHECK_THROWS_AS(rc::dnn_random_search(X, Y, base, 4, 0.0),
                  std::invalid_argument);
}

}  // TEST_SUITE
