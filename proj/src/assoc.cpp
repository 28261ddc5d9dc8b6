#include "regimecast/assoc.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "regimecast/rng.hpp"
#include "regimecast/stats.hpp"

namespace regimecast {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

/// Validates labels and returns the class count K = max label + 1.
Index infer_classes(const std::vector<int>& z) {
  require(!z.empty(), "labels must be nonempty");
  int max_label = 0;
  for (int label : z) {
    require(label >= 0, "labels must be nonnegative");
    max_label = std::max(max_label, label);
  }
  const Index classes = max_label + 1;
  std::vector<Index> counts(static_cast<std::size_t>(classes), 0);
  for (int label : z) ++counts[static_cast<std::size_t>(label)];
  for (Index k = 0; k < classes; ++k) {
    require(counts[static_cast<std::size_t>(k)] > 0,
            "every class in 0..K-1 must be present in the labels");
  }
  return classes;
}

std::vector<Index> class_counts(const std::vector<int>& z, Index classes) {
  std::vector<Index> counts(static_cast<std::size_t>(classes), 0);
  for (int label : z) ++counts[static_cast<std::size_t>(label)];
  return counts;
}

}  // namespace

ClassifierFit fit_regime_classifier(const Matrix& X,
                                    const std::vector<int>& z,
                                    const ClassifierConfig& config) {
  const Index m = X.rows();
  const Index d = X.cols();
  require(static_cast<Index>(z.size()) == m, "one label per row required");
  require(d >= 1, "feature matrix needs at least one column");
  const Index classes = infer_classes(z);
  require(m >= 5 * classes, "need at least 5 samples per class on average");
  require(config.epochs >= 1 && config.batch_size >= 1 &&
              config.learning_rate > 0.0,
          "invalid training configuration");
  require(config.val_fraction >= 0.0 && config.val_fraction < 1.0,
          "val_fraction must lie in [0, 1)");

  RandomSource rng(config.seed);

  // Stratified split: a per-class seeded shuffle sends the leading fraction
  // to validation, so every class keeps training members.
  ClassifierFit fit;
  {
    RandomSource split_rng = rng.substream("split");
    std::vector<std::vector<Index>> by_class(
        static_cast<std::size_t>(classes));
    for (Index i = 0; i < m; ++i) {
      by_class[static_cast<std::size_t>(z[static_cast<std::size_t>(i)])]
          .push_back(i);
    }
    for (Index k = 0; k < classes; ++k) {
      auto& members = by_class[static_cast<std::size_t>(k)];
      const auto perm =
          split_rng.permutation(static_cast<Index>(members.size()));
      const Index val_count = static_cast<Index>(
          config.val_fraction * static_cast<Scalar>(members.size()));
      for (Index j = 0; j < static_cast<Index>(members.size()); ++j) {
        const Index row = members[static_cast<std::size_t>(perm[j])];
        (j < val_count ? fit.val_indices : fit.train_indices).push_back(row);
      }
    }
    std::sort(fit.train_indices.begin(), fit.train_indices.end());
    std::sort(fit.val_indices.begin(), fit.val_indices.end());
  }
  const Index m_train = static_cast<Index>(fit.train_indices.size());

  // Standardization statistics from the training rows only.
  Classifier clf;
  clf.regimes = classes;
  clf.feature_mean = Vector::Zero(d);
  clf.feature_std = Vector::Ones(d);
  for (Index i : fit.train_indices) clf.feature_mean += X.row(i).transpose();
  clf.feature_mean /= static_cast<Scalar>(m_train);
  Vector variance = Vector::Zero(d);
  for (Index i : fit.train_indices) {
    variance += (X.row(i).transpose() - clf.feature_mean).cwiseAbs2();
  }
  variance /= static_cast<Scalar>(m_train);
  for (Index j = 0; j < d; ++j) {
    if (variance[j] > 0.0) clf.feature_std[j] = std::sqrt(variance[j]);
  }

  // Column-major training batch (samples as columns) in standardized units.
  Matrix inputs(d, m_train);
  std::vector<int> labels(static_cast<std::size_t>(m_train));
  for (Index j = 0; j < m_train; ++j) {
    const Index row = fit.train_indices[static_cast<std::size_t>(j)];
    inputs.col(j) = (X.row(row).transpose() - clf.feature_mean)
                        .cwiseQuotient(clf.feature_std);
    labels[static_cast<std::size_t>(j)] =
        z[static_cast<std::size_t>(row)];
  }

  Vector sample_weight = Vector::Ones(m_train);
  if (config.balanced_class_weights) {
    const auto counts = class_counts(labels, classes);
    for (Index j = 0; j < m_train; ++j) {
      const auto label =
          static_cast<std::size_t>(labels[static_cast<std::size_t>(j)]);
      sample_weight[j] = static_cast<Scalar>(m_train) /
                         (static_cast<Scalar>(classes) *
                          static_cast<Scalar>(counts[label]));
    }
  }

  RandomSource init_rng = rng.substream("init");
  clf.network = Mlp::create(d, config.hidden, classes, Activation::ReLU,
                            init_rng);
  AdamConfig adam;
  adam.learning_rate = config.learning_rate;
  Adam optimizer(clf.network, adam);
  RandomSource shuffle_rng = rng.substream("shuffle");

  MlpTrace trace;
  auto grads = MlpGrads::zeros_like(clf.network);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = shuffle_rng.permutation(m_train);
    Scalar weighted_loss = 0.0;
    Scalar weight_seen = 0.0;
    for (Index start = 0; start < m_train; start += config.batch_size) {
      const Index count = std::min(config.batch_size, m_train - start);
      Matrix batch(d, count);
      std::vector<int> batch_labels(static_cast<std::size_t>(count));
      Vector batch_weight(count);
      for (Index j = 0; j < count; ++j) {
        const Index src = order[static_cast<std::size_t>(start + j)];
        batch.col(j) = inputs.col(src);
        batch_labels[static_cast<std::size_t>(j)] =
            labels[static_cast<std::size_t>(src)];
        batch_weight[j] = sample_weight[src];
      }
      grads.set_zero();
      Matrix grad_logits;
      const Matrix logits = forward(clf.network, batch, trace);
      const Scalar loss = softmax_cross_entropy(logits, batch_labels,
                                                batch_weight, &grad_logits);
      backward(clf.network, trace, grad_logits, grads);
      optimizer.step(clf.network, grads);
      weighted_loss += loss * batch_weight.sum();
      weight_seen += batch_weight.sum();
    }
    fit.epoch_loss.push_back(weighted_loss / weight_seen);
  }

  fit.model = std::move(clf);
  return fit;
}

Vector regime_scores(const Classifier& clf, const Vector& x) {
  require(x.size() == clf.feature_mean.size(),
          "feature vector width does not match the classifier");
  const Vector standardized =
      (x - clf.feature_mean).cwiseQuotient(clf.feature_std);
  return forward(clf.network, standardized);
}

Vector predict_weights(const Classifier& clf, const Vector& x) {
  return softmax_columns(Matrix(regime_scores(clf, x))).col(0);
}

int predict_regime(const Classifier& clf, const Vector& x) {
  Index best = 0;
  regime_scores(clf, x).maxCoeff(&best);
  return static_cast<int>(best);
}

DependenceReport classification_report(const Classifier& clf, const Matrix& X,
                                       const std::vector<int>& z) {
  const Index m = X.rows();
  require(m >= 1, "report needs at least one sample");
  require(static_cast<Index>(z.size()) == m, "one label per row required");
  const Index classes = clf.regimes;

  std::vector<Index> true_pos(static_cast<std::size_t>(classes), 0);
  std::vector<Index> predicted(static_cast<std::size_t>(classes), 0);
  std::vector<Index> actual(static_cast<std::size_t>(classes), 0);
  Index correct = 0;
  for (Index i = 0; i < m; ++i) {
    const int label = z[static_cast<std::size_t>(i)];
    require(label >= 0 && label < classes, "label outside classifier range");
    const int guess = predict_regime(clf, Vector(X.row(i).transpose()));
    ++actual[static_cast<std::size_t>(label)];
    ++predicted[static_cast<std::size_t>(guess)];
    if (guess == label) {
      ++true_pos[static_cast<std::size_t>(label)];
      ++correct;
    }
  }

  DependenceReport report;
  report.accuracy = static_cast<Scalar>(correct) / static_cast<Scalar>(m);
  Scalar f1_weight = 0.0;
  for (Index k = 0; k < classes; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    ClassMetrics cm;
    cm.support = actual[ks];
    const Scalar tp = static_cast<Scalar>(true_pos[ks]);
    cm.precision =
        predicted[ks] > 0 ? tp / static_cast<Scalar>(predicted[ks]) : 0.0;
    cm.recall = actual[ks] > 0 ? tp / static_cast<Scalar>(actual[ks]) : 0.0;
    cm.f1 = cm.precision + cm.recall > 0.0
                ? 2.0 * cm.precision * cm.recall / (cm.precision + cm.recall)
                : 0.0;
    report.weighted_f1 += static_cast<Scalar>(cm.support) * cm.f1;
    f1_weight += static_cast<Scalar>(cm.support);
    report.per_class.push_back(cm);
  }
  report.weighted_f1 /= f1_weight;
  return report;
}

DependenceReport feature_dependence(const Matrix& X,
                                    const std::vector<int>& z,
                                    Index bins) {
  const Index m = X.rows();
  const Index d = X.cols();
  require(static_cast<Index>(z.size()) == m, "one label per row required");
  require(bins >= 2, "need at least two bins");
  const Index classes = infer_classes(z);
  require(m >= 2 * classes, "need at least two samples per class on average");

  DependenceReport report;
  report.mutual_information.resize(d);
  report.anova_f.resize(d);
  report.anova_p.resize(d);
  const auto counts = class_counts(z, classes);

  for (Index j = 0; j < d; ++j) {
    // Equal-frequency bin edges; duplicate edges are merged so tied values
    // always share a bin (a constant feature collapses to one bin).
    std::vector<Scalar> sorted(static_cast<std::size_t>(m));
    for (Index i = 0; i < m; ++i) sorted[static_cast<std::size_t>(i)] = X(i, j);
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back()) {
      // Constant feature: no information, no variance to test.
      report.mutual_information[j] = 0.0;
      report.anova_f[j] = 0.0;
      report.anova_p[j] = 1.0;
      continue;
    }
    std::vector<Scalar> edges;
    for (Index b = 1; b < bins; ++b) {
      const auto pos = static_cast<std::size_t>((m * b) / bins);
      const Scalar edge = sorted[pos];
      if (edges.empty() || edge > edges.back()) edges.push_back(edge);
    }
    const auto n_bins = static_cast<Index>(edges.size()) + 1;

    Matrix joint = Matrix::Zero(n_bins, classes);
    for (Index i = 0; i < m; ++i) {
      const auto bin = static_cast<Index>(
          std::lower_bound(edges.begin(), edges.end(), X(i, j)) -
          edges.begin());
      joint(bin, z[static_cast<std::size_t>(i)]) += 1.0;
    }
    joint /= static_cast<Scalar>(m);
    const Vector p_bin = joint.rowwise().sum();
    const Vector p_class = joint.colwise().sum().transpose();
    Scalar mi = 0.0;
    for (Index b = 0; b < n_bins; ++b) {
      for (Index k = 0; k < classes; ++k) {
        const Scalar p = joint(b, k);
        if (p > 0.0) mi += p * std::log(p / (p_bin[b] * p_class[k]));
      }
    }
    report.mutual_information[j] = std::max(mi, 0.0);

    // One-way ANOVA.
    const Scalar grand = X.col(j).mean();
    Scalar between = 0.0;
    Scalar within = 0.0;
    Vector group_mean = Vector::Zero(classes);
    for (Index i = 0; i < m; ++i) {
      group_mean[z[static_cast<std::size_t>(i)]] += X(i, j);
    }
    for (Index k = 0; k < classes; ++k) {
      group_mean[k] /= static_cast<Scalar>(counts[static_cast<std::size_t>(k)]);
      between += static_cast<Scalar>(counts[static_cast<std::size_t>(k)]) *
                 (group_mean[k] - grand) * (group_mean[k] - grand);
    }
    for (Index i = 0; i < m; ++i) {
      const Scalar dev = X(i, j) - group_mean[z[static_cast<std::size_t>(i)]];
      within += dev * dev;
    }
    if (classes < 2 || between <= 0.0) {
      report.anova_f[j] = 0.0;
      report.anova_p[j] = 1.0;
    } else if (within <= 0.0) {
      report.anova_f[j] = std::numeric_limits<Scalar>::infinity();
      report.anova_p[j] = 0.0;
    } else {
      const Scalar df1 = static_cast<Scalar>(classes - 1);
      const Scalar df2 = static_cast<Scalar>(m - classes);
      report.anova_f[j] = (between / df1) / (within / df2);
      report.anova_p[j] = stats::f_sf(report.anova_f[j], df1, df2);
    }
  }
  return report;
}

PcaResult pca_project(const Matrix& X, Index dims, bool scale) {
  const Index m = X.rows();
  const Index d = X.cols();
  require(dims >= 1, "dims must be positive");
  require(m > dims, "need more samples than requested components");

  Matrix centered = X.rowwise() - X.colwise().mean();
  if (scale) {
    for (Index j = 0; j < d; ++j) {
      const Scalar sd = std::sqrt(centered.col(j).squaredNorm() /
                                  static_cast<Scalar>(m - 1));
      if (sd > 0.0) centered.col(j) /= sd;
    }
  }
  const Matrix cov =
      centered.transpose() * centered / static_cast<Scalar>(m - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  require(eig.info() == Eigen::Success, "eigendecomposition failed");

  // Eigen sorts ascending; flip to descending.
  const Vector values = eig.eigenvalues().reverse();
  const Scalar total = values.cwiseMax(0.0).sum();
  Index numerical_rank = 0;
  for (Index i = 0; i < d; ++i) {
    if (values[i] > 1e-12 * std::max(values[0], Scalar(1))) ++numerical_rank;
  }
  require(dims <= numerical_rank, "dims exceeds the numerical rank");

  PcaResult result;
  result.components.resize(d, dims);
  result.explained.resize(dims);
  for (Index c = 0; c < dims; ++c) {
    Vector component = eig.eigenvectors().col(d - 1 - c);
    // Deterministic sign: make the entry with the largest magnitude positive.
    Index peak = 0;
    component.cwiseAbs().maxCoeff(&peak);
    if (component[peak] < 0.0) component = -component;
    result.components.col(c) = component;
    result.explained[c] = values[c] / total;
  }
  result.coordinates = centered * result.components;
  return result;
}

}  // namespace regimecast
