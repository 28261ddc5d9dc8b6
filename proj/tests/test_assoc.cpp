#include "regimecast/assoc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "regimecast/nn.hpp"
#include "regimecast/rng.hpp"
#include "regimecast/types.hpp"

namespace rc = regimecast;

namespace {

// Two well-separated Gaussian classes: rows 0..n-1 have mean +mu on every
// coordinate, rows n..2n-1 have mean -mu.
struct SeparableData {
  rc::Matrix X;
  std::vector<int> z;
};

SeparableData separable_classes(rc::RandomSource& rng, rc::Index per_class,
                                rc::Index dim, rc::Scalar mu) {
  SeparableData data;
  data.X.resize(2 * per_class, dim);
  for (rc::Index i = 0; i < 2 * per_class; ++i) {
    const rc::Scalar center = i < per_class ? mu : -mu;
    data.z.push_back(i < per_class ? 0 : 1);
    for (rc::Index j = 0; j < dim; ++j) {
      data.X(i, j) = center + rng.normal();
    }
  }
  return data;
}

rc::ClassifierConfig small_config() {
  rc::ClassifierConfig config;
  config.hidden = {16};
  config.epochs = 40;
  config.val_fraction = 0.2;
  config.seed = 71;
  return config;
}

// Classifier that ignores its input and always scores class 0 highest.
rc::Classifier constant_class0_classifier(rc::Index dim) {
  rc::Classifier clf;
  clf.regimes = 2;
  clf.feature_mean = rc::Vector::Zero(dim);
  clf.feature_std = rc::Vector::Ones(dim);
  clf.network.activation = rc::Activation::Identity;
  clf.network.weights.push_back(rc::Matrix::Zero(2, dim));
  rc::Vector bias(2);
  bias << 1.0, 0.0;
  clf.network.biases.push_back(bias);
  return clf;
}

}  // namespace

TEST_SUITE("assoc") {

TEST_CASE("separable classes reach near-perfect held-out accuracy") {
  rc::RandomSource rng(300);
  const auto data = separable_classes(rng, 500, 10, 5.0);
  const auto fit = rc::fit_regime_classifier(data.X, data.z, small_config());

  REQUIRE(!fit.val_indices.empty());
  CHECK(fit.train_indices.size() + fit.val_indices.size() == 1000);
  rc::Matrix val_x(static_cast<rc::Index>(fit.val_indices.size()), 10);
  std::vector<int> val_z;
  for (std::size_t i = 0; i < fit.val_indices.size(); ++i) {
    val_x.row(static_cast<rc::Index>(i)) = data.X.row(fit.val_indices[i]);
    val_z.push_back(
        data.z[static_cast<std::size_t>(fit.val_indices[i])]);
  }
  const auto report = rc::classification_report(fit.model, val_x, val_z);
  CHECK(report.accuracy >= 0.99);
  // Training loss fell over the run.
  CHECK(fit.epoch_loss.back() < fit.epoch_loss.front());
}

TEST_CASE("training is deterministic in the seed") {
  rc::RandomSource rng(301);
  const auto data = separable_classes(rng, 30, 4, 3.0);
  auto config = small_config();
  config.epochs = 10;
  const auto fit1 = rc::fit_regime_classifier(data.X, data.z, config);
  const auto fit2 = rc::fit_regime_classifier(data.X, data.z, config);
  CHECK(rc::flatten_parameters(fit1.model.network) ==
        rc::flatten_parameters(fit2.model.network));
  CHECK(fit1.train_indices == fit2.train_indices);
  config.seed = 72;
  const auto fit3 = rc::fit_regime_classifier(data.X, data.z, config);
  CHECK(rc::flatten_parameters(fit1.model.network) !=
        rc::flatten_parameters(fit3.model.network));
}

TEST_CASE("fit rejects degenerate label sets") {
  rc::Matrix X = rc::Matrix::Zero(20, 3);
  SUBCASE("absent class") {
    std::vector<int> z(20, 0);
    z[3] = 2;  // class 1 missing
    CHECK_THROWS_AS(rc::fit_regime_classifier(X, z), std::invalid_argument);
  }
  SUBCASE("single-class degenerate input trains to the trivial posterior") {
    std::vector<int> z(20, 0);
    auto config = small_config();
    config.epochs = 2;
    const auto fit = rc::fit_regime_classifier(X, z, config);
    const rc::Vector w =
        rc::predict_weights(fit.model, rc::Vector::Zero(3));
    REQUIRE(w.size() == 1);
    CHECK(w[0] == 1.0);
  }
  SUBCASE("too few samples") {
    std::vector<int> z;
    for (int i = 0; i < 8; ++i) z.push_back(i % 2);
    CHECK_THROWS_AS(
        rc::fit_regime_classifier(rc::Matrix::Zero(8, 3), z),
        std::invalid_argument);
  }
  SUBCASE("label count mismatch") {
    std::vector<int> z(19, 0);
    CHECK_THROWS_AS(rc::fit_regime_classifier(X, z), std::invalid_argument);
  }
}

TEST_CASE("predicted weights form a simplex with the score argmax") {
  rc::RandomSource rng(302);
  const auto data = separable_classes(rng, 40, 6, 2.0);
  auto config = small_config();
  config.epochs = 60;
  const auto fit = rc::fit_regime_classifier(data.X, data.z, config);
  for (int rep = 0; rep < 50; ++rep) {
    rc::Vector x(6);
    for (rc::Index j = 0; j < 6; ++j) x[j] = rng.uniform(-8.0, 8.0);
    const rc::Vector w = rc::predict_weights(fit.model, x);
    CHECK(w.minCoeff() >= 0.0);
    CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-9));
    rc::Index weight_arg = 0;
    w.maxCoeff(&weight_arg);
    CHECK(static_cast<int>(weight_arg) == rc::predict_regime(fit.model, x));
    // Argmax is unchanged by strictly monotone transforms of the scores.
    const rc::Vector scores = rc::regime_scores(fit.model, x);
    rc::Index score_arg = 0;
    scores.maxCoeff(&score_arg);
    const rc::Vector warped =
        (3.0 * scores.array() + 1.0).tanh().matrix();
    rc::Index warped_arg = 0;
    warped.maxCoeff(&warped_arg);
    CHECK(score_arg == weight_arg);
    CHECK(warped_arg == weight_arg);
  }
  // Deep inside a class the posterior saturates.
  const rc::Vector deep = rc::Vector::Constant(6, 5.0);
  CHECK(rc::predict_weights(fit.model, deep).maxCoeff() >= 0.99);
  rc::Vector wrong(5);
  CHECK_THROWS_AS(rc::predict_weights(fit.model, wrong),
                  std::invalid_argument);
}

TEST_CASE("balanced class weights lift minority recall on skewed data") {
  rc::RandomSource rng(303);
  // 300 easy majority samples vs 15 minority samples with mild overlap.
  const rc::Index dim = 3;
  rc::Matrix X(315, dim);
  std::vector<int> z;
  for (rc::Index i = 0; i < 315; ++i) {
    const bool minority = i >= 300;
    z.push_back(minority ? 1 : 0);
    for (rc::Index j = 0; j < dim; ++j) {
      X(i, j) = (minority ? 1.2 : -1.2) + rng.normal();
    }
  }
  auto config = small_config();
  config.epochs = 30;
  config.balanced_class_weights = true;
  const auto fit = rc::fit_regime_classifier(X, z, config);
  const auto report = rc::classification_report(fit.model, X, z);
  CHECK(report.per_class[1].recall >= 0.8);
}

TEST_CASE("classification report matches hand-counted confusion") {
  // Always-predict-0 on balanced data: recall(0)=1, precision(0)=0.5,
  // class 1 all zero, weighted F1 = 1/3.
  const auto clf = constant_class0_classifier(2);
  rc::Matrix X = rc::Matrix::Random(40, 2);
  std::vector<int> z;
  for (int i = 0; i < 40; ++i) z.push_back(i % 2);
  const auto report = rc::classification_report(clf, X, z);
  REQUIRE(report.per_class.size() == 2);
  CHECK(report.per_class[0].recall == 1.0);
  CHECK(report.per_class[0].precision == 0.5);
  CHECK(report.per_class[0].support == 20);
  CHECK(report.per_class[1].recall == 0.0);
  CHECK(report.per_class[1].precision == 0.0);
  CHECK(report.per_class[1].f1 == 0.0);
  CHECK(report.accuracy == 0.5);
  CHECK(report.weighted_f1 ==
        doctest::Approx(0.5 * (2.0 * 0.5 / 1.5)).epsilon(1e-12));
  // Weighted F1 sits between the per-class extremes.
  CHECK(report.weighted_f1 >= report.per_class[1].f1);
  CHECK(report.weighted_f1 <= report.per_class[0].f1);
}

TEST_CASE("perfect predictions give unit scores and four-row reports") {
  // Four linearly separated regimes with skewed supports.
  rc::RandomSource rng(304);
  const std::vector<rc::Index> supports{200, 62, 24, 5};
  rc::Index total = 0;
  for (auto s : supports) total += s;
  rc::Matrix X(total, 2);
  std::vector<int> z;
  rc::Index row = 0;
  for (std::size_t k = 0; k < supports.size(); ++k) {
    for (rc::Index i = 0; i < supports[k]; ++i, ++row) {
      X(row, 0) = 10.0 * static_cast<rc::Scalar>(k) + rng.normal();
      X(row, 1) = rng.normal();
      z.push_back(static_cast<int>(k));
    }
  }
  // Hand-built nearest-center discriminant: score_k = 10k*x0 - 50k^2 picks
  // the band around 10k, so predictions are exact and the report must be all
  // ones.
  rc::Classifier clf;
  clf.regimes = 4;
  clf.feature_mean = rc::Vector::Zero(2);
  clf.feature_std = rc::Vector::Ones(2);
  clf.network.activation = rc::Activation::Identity;
  rc::Matrix w = rc::Matrix::Zero(4, 2);
  rc::Vector bias(4);
  for (rc::Index k = 0; k < 4; ++k) {
    w(k, 0) = 10.0 * static_cast<rc::Scalar>(k);
    bias[k] = -50.0 * static_cast<rc::Scalar>(k * k);
  }
  clf.network.weights.push_back(w);
  clf.network.biases.push_back(bias);
  const auto report = rc::classification_report(clf, X, z);
  REQUIRE(report.per_class.size() == 4);
  CHECK(report.per_class[0].support == 200);
  CHECK(report.per_class[3].support == 5);
  CHECK(report.accuracy == 1.0);
  for (const auto& cm : report.per_class) {
    CHECK(cm.precision == 1.0);
    CHECK(cm.recall == 1.0);
    CHECK(cm.f1 == 1.0);
  }
  CHECK(report.weighted_f1 == 1.0);
}

TEST_CASE("mutual information recovers label entropy and vanishes off it") {
  rc::RandomSource rng(305);
  const rc::Index m = 10000;
  rc::Matrix X(m, 3);
  std::vector<int> z;
  for (rc::Index i = 0; i < m; ++i) {
    const int label = static_cast<int>(i % 2);
    z.push_back(label);
    X(i, 0) = static_cast<rc::Scalar>(label);  // identical to the label
    X(i, 1) = rng.normal();                    // independent
    X(i, 2) = 7.25;                            // constant
  }
  const auto report = rc::feature_dependence(X, z);
  CHECK(report.mutual_information[0] ==
        doctest::Approx(std::log(2.0)).epsilon(0.01));
  CHECK(report.mutual_information[1] < 0.02);
  CHECK(report.mutual_information[1] >= 0.0);
  CHECK(report.anova_p[1] > 0.01);
  CHECK(report.mutual_information[2] == 0.0);
  CHECK(report.anova_f[2] == 0.0);
  CHECK(report.anova_p[2] == 1.0);
  // Perfectly separated feature: infinite F, zero p.
  CHECK(report.anova_p[0] == 0.0);
}

TEST_CASE("anova matches hand-computed group sums") {
  rc::Matrix X(6, 1);
  X << 1, 2, 3, 4, 5, 6;
  const std::vector<int> z{0, 0, 0, 1, 1, 1};
  const auto report = rc::feature_dependence(X, z, 4);
  CHECK(report.anova_f[0] == doctest::Approx(13.5).epsilon(1e-12));
  CHECK(report.anova_p[0] ==
        doctest::Approx(0.02131164112875672).epsilon(1e-10));

  rc::Matrix Y(9, 1);
  Y << 0, 1, 2, 10, 11, 12, 20, 21, 22;
  const std::vector<int> z3{0, 0, 0, 1, 1, 1, 2, 2, 2};
  const auto r3 = rc::feature_dependence(Y, z3, 4);
  CHECK(r3.anova_f[0] == doctest::Approx(300.0).epsilon(1e-12));
  CHECK(r3.anova_p[0] ==
        doctest::Approx(9.705901479276445e-07).epsilon(1e-8));
}

TEST_CASE("null anova stays insignificant") {
  rc::RandomSource rng(306);
  rc::Matrix X(400, 1);
  std::vector<int> z;
  for (rc::Index i = 0; i < 400; ++i) {
    X(i, 0) = rng.normal();
    z.push_back(static_cast<int>(i % 2));
  }
  const auto report = rc::feature_dependence(X, z);
  CHECK(report.anova_p[0] > 0.05);
  CHECK(report.anova_f[0] >= 0.0);
}

TEST_CASE("feature dependence validates its inputs") {
  rc::Matrix X = rc::Matrix::Zero(6, 1);
  CHECK_THROWS_AS(rc::feature_dependence(X, {0, 0, 0, 1, 1}),
                  std::invalid_argument);
  CHECK_THROWS_AS(rc::feature_dependence(X, {0, 0, 0, 1, 1, 1}, 1),
                  std::invalid_argument);
  // m = 2K sits exactly on the precondition boundary and is allowed.
  CHECK_NOTHROW(rc::feature_dependence(rc::Matrix::Zero(4, 1), {0, 1, 0, 1}));
  CHECK_THROWS_AS(
      rc::feature_dependence(rc::Matrix::Zero(4, 1), {0, 1, 2, 0}),
      std::invalid_argument);
  CHECK_NOTHROW(rc::feature_dependence(X, {0, 1, 2, 0, 1, 2}));
}

TEST_CASE("pca on a line concentrates all variance in one component") {
  rc::RandomSource rng(307);
  rc::Matrix X(200, 3);
  for (rc::Index i = 0; i < 200; ++i) {
    const rc::Scalar t = rng.normal();
    X(i, 0) = t;
    X(i, 1) = 2.0 * t;
    X(i, 2) = -t;
  }
  const auto res = rc::pca_project(X, 1);
  CHECK(res.explained[0] >= 0.999);
  CHECK(res.coordinates.rows() == 200);
  CHECK(res.coordinates.cols() == 1);
  // Rank is 1, so asking for two components must fail.
  CHECK_THROWS_AS(rc::pca_project(X, 2), std::invalid_argument);
}

TEST_CASE("isotropic gaussian splits variance evenly") {
  rc::RandomSource rng(308);
  rc::Matrix X(10000, 3);
  for (rc::Index i = 0; i < X.rows(); ++i) {
    for (rc::Index j = 0; j < 3; ++j) X(i, j) = rng.normal();
  }
  const auto res = rc::pca_project(X, 3);
  for (rc::Index c = 0; c < 3; ++c) {
    CHECK(res.explained[c] == doctest::Approx(1.0 / 3.0).epsilon(0.02 * 3));
  }
  CHECK(res.explained.sum() == doctest::Approx(1.0).epsilon(1e-9));
  // Fractions are sorted.
  CHECK(res.explained[0] >= res.explained[1]);
  CHECK(res.explained[1] >= res.explained[2]);
}

TEST_CASE("projecting a covariance projection again is sign-stable") {
  rc::RandomSource rng(309);
  // Correlated 5-D data with distinct spectral gaps.
  rc::Matrix X(300, 5);
  for (rc::Index i = 0; i < X.rows(); ++i) {
    const rc::Scalar a = rng.normal(), b = rng.normal(), c = rng.normal();
    X(i, 0) = 4.0 * a;
    X(i, 1) = 2.0 * b + 0.3 * a;
    X(i, 2) = 1.0 * c;
    X(i, 3) = 0.5 * a + 0.2 * b;
    X(i, 4) = 0.25 * c + 0.1 * b;
  }
  const auto first = rc::pca_project(X, 3, /*scale=*/false);
  const auto second =
      rc::pca_project(first.coordinates, 3, /*scale=*/false);
  for (rc::Index c = 0; c < 3; ++c) {
    const rc::Scalar plus =
        (second.coordinates.col(c) - first.coordinates.col(c))
            .cwiseAbs()
            .maxCoeff();
    const rc::Scalar minus =
        (second.coordinates.col(c) + first.coordinates.col(c))
            .cwiseAbs()
            .maxCoeff();
    CHECK(std::min(plus, minus) < 1e-9);
  }
}

TEST_CASE("pca validates dims against rank and sample count") {
  rc::RandomSource rng(310);
  rc::Matrix X(50, 4);
  for (rc::Index i = 0; i < 50; ++i) {
    const rc::Scalar a = rng.normal(), b = rng.normal();
    X(i, 0) = a;
    X(i, 1) = b;
    X(i, 2) = a;  // duplicates keep rank at 2
    X(i, 3) = b;
  }
  CHECK_NOTHROW(rc::pca_project(X, 2));
  CHECK_THROWS_AS(rc::pca_project(X, 3), std::invalid_argument);
  CHECK_THROWS_AS(rc::pca_project(rc::Matrix::Zero(2, 4), 2),
                  std::invalid_argument);
  CHECK_THROWS_AS(rc::pca_project(X, 0), std::invalid_argument);
}

}  // TEST_SUITE
