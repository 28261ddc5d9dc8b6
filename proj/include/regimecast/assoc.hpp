#pragma once

#include <cstdint>
#include <vector>

#include "regimecast/nn.hpp"
#include "regimecast/types.hpp"

namespace regimecast {

/// Softmax classifier mapping a feature vector to a posterior over regimes.
/// Inputs are z-scored with the stored training statistics before the
/// network; zero-variance features keep std 1 so standardization is always
/// defined.
struct Classifier {
  Mlp network;
  Vector feature_mean;
  Vector feature_std;
  Index regimes = 0;
};

struct ClassifierConfig {
  std::vector<Index> hidden = {64, 64};
  int epochs = 200;
  Scalar learning_rate = 1e-3;
  Index batch_size = 32;
  /// Fraction held out (stratified per class) from training; reserved so the
  /// caller can score the classifier on data it never saw.
  Scalar val_fraction = 0.2;
  /// Weight each sample by m/(K * class count) to counter imbalance.
  bool balanced_class_weights = false;
  std::uint64_t seed = 1;
};

/// Trained classifier plus the seeded train/validation split and the
/// weighted mean training loss per epoch.
struct ClassifierFit {
  Classifier model;
  std::vector<Index> train_indices;
  std::vector<Index> val_indices;
  std::vector<Scalar> epoch_loss;
};

/// Per-class classification quality; support is the number of true samples.
struct ClassMetrics {
  Scalar precision = 0.0;
  Scalar recall = 0.0;
  Scalar f1 = 0.0;
  Index support = 0;
};

/// Regime/feature association diagnostics.  classification_report fills the
/// per-class block; feature_dependence fills the per-feature block.
struct DependenceReport {
  std::vector<ClassMetrics> per_class;
  Scalar accuracy = 0.0;
  Scalar weighted_f1 = 0.0;
  Vector mutual_information;  ///< nats, one entry per feature
  Vector anova_f;
  Vector anova_p;
};

/// Principal-component projection and the variance fraction each kept
/// component explains (non-increasing).
struct PcaResult {
  Matrix coordinates;   ///< m x dims
  Matrix components;    ///< d x dims, unit columns, largest entry positive
  Vector explained;     ///< dims fractions of total variance
};

/// Trains the regime classifier on rows of X (one sample per row) with
/// labels z in 0..K-1.  Mini-batch Adam on softmax cross-entropy; K is
/// inferred from the labels.  Throws std::invalid_argument if any class in
/// 0..K-1 is absent or fewer than 5K samples are given.  Deterministic for a
/// fixed config.
ClassifierFit fit_regime_classifier(const Matrix& X,
                                    const std::vector<int>& z,
                                    const ClassifierConfig& config = {});

/// Pre-softmax regime scores for one standardized-and-forwarded sample.
Vector regime_scores(const Classifier& clf, const Vector& x);

/// Posterior regime weights: softmax of the scores.  Always a simplex.
Vector predict_weights(const Classifier& clf, const Vector& x);

/// Index of the most probable regime.
int predict_regime(const Classifier& clf, const Vector& x);

/// Precision/recall/F1/support per regime plus accuracy and support-weighted
/// mean F1, evaluated on rows of X.
DependenceReport classification_report(const Classifier& clf, const Matrix& X,
                                       const std::vector<int>& z);

/// Per-feature dependence on the labels: mutual information of the
/// equal-frequency-binned feature with z (nats) and the one-way ANOVA F
/// statistic with its p-value.  Constant features give MI=0, F=0, p=1.
DependenceReport feature_dependence(const Matrix& X,
                                    const std::vector<int>& z,
                                    Index bins = 16);

/// Projects rows of X onto the top `dims` principal components of the
/// centered (and, when scale is set, z-scored) data.  Throws when dims
/// exceeds the numerical rank.
PcaResult pca_project(const Matrix& X, Index dims, bool scale = true);

}  // namespace regimecast
