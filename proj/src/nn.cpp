#include "regimecast/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace regimecast {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

Matrix activate(const Matrix& pre, Activation act) {
  switch (act) {
    case Activation::ReLU:
      return pre.cwiseMax(0.0);
    case Activation::Tanh:
      return pre.array().tanh().matrix();
    case Activation::Identity:
      return pre;
  }
  throw std::logic_error("unknown activation");
}

Matrix activate_grad(const Matrix& pre, Activation act) {
  switch (act) {
    case Activation::ReLU:
      return (pre.array() > 0.0).cast<Scalar>().matrix();
    case Activation::Tanh:
      return (1.0 - pre.array().tanh().square()).matrix();
    case Activation::Identity:
      return Matrix::Ones(pre.rows(), pre.cols());
  }
  throw std::logic_error("unknown activation");
}

}  // namespace

Index Mlp::parameter_count() const {
  Index total = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    total += weights[l].size() + biases[l].size();
  }
  return total;
}

Mlp Mlp::create(Index in, const std::vector<Index>& hidden, Index out,
                Activation act, RandomSource& rng) {
  require(in >= 1 && out >= 1, "network needs positive input/output widths");
  for (Index h : hidden) require(h >= 1, "hidden widths must be positive");

  Mlp model;
  model.activation = act;
  std::vector<Index> widths;
  widths.push_back(in);
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(out);
  const Scalar gain = act == Activation::ReLU ? 2.0 : 1.0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const Index rows = widths[l + 1];
    const Index cols = widths[l];
    const Scalar scale = std::sqrt(gain / static_cast<Scalar>(cols));
    Matrix w(rows, cols);
    for (Index j = 0; j < cols; ++j) {
      for (Index i = 0; i < rows; ++i) w(i, j) = scale * rng.normal();
    }
    model.weights.push_back(std::move(w));
    model.biases.push_back(Vector::Zero(rows));
  }
  return model;
}

MlpGrads MlpGrads::zeros_like(const Mlp& model) {
  MlpGrads g;
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    g.weights.push_back(
        Matrix::Zero(model.weights[l].rows(), model.weights[l].cols()));
    g.biases.push_back(Vector::Zero(model.biases[l].size()));
  }
  return g;
}

void MlpGrads::set_zero() {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l].setZero();
    biases[l].setZero();
  }
}

Matrix forward(const Mlp& model, const Matrix& input, MlpTrace& trace) {
  require(input.rows() == model.input_dim(), "input width mismatch");
  const std::size_t layers = model.weights.size();
  trace.pre.assign(layers, Matrix());
  trace.act.assign(layers + 1, Matrix());
  trace.act[0] = input;
  for (std::size_t l = 0; l < layers; ++l) {
    trace.pre[l] =
        (model.weights[l] * trace.act[l]).colwise() + model.biases[l];
    const bool last = l + 1 == layers;
    trace.act[l + 1] =
        last ? trace.pre[l] : activate(trace.pre[l], model.activation);
  }
  return trace.act[layers];
}

Matrix forward(const Mlp& model, const Matrix& input) {
  require(input.rows() == model.input_dim(), "input width mismatch");
  Matrix a = input;
  const std::size_t layers = model.weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix pre = (model.weights[l] * a).colwise() + model.biases[l];
    a = l + 1 == layers ? std::move(pre) : activate(pre, model.activation);
  }
  return a;
}

Vector forward(const Mlp& model, const Vector& input) {
  return forward(model, Matrix(input)).col(0);
}

Matrix backward(const Mlp& model, const MlpTrace& trace,
                const Matrix& grad_output, MlpGrads& grads) {
  require(grad_output.rows() == model.output_dim(),
          "output-gradient width mismatch");
  require(trace.pre.size() == model.weights.size(),
          "trace does not match the model");
  Matrix grad_act = grad_output;
  for (std::size_t l = model.weights.size(); l-- > 0;) {
    const bool last = l + 1 == model.weights.size();
    Matrix grad_pre =
        last ? std::move(grad_act)
             : (grad_act.array() *
                activate_grad(trace.pre[l], model.activation).array())
                   .matrix();
    grads.weights[l].noalias() += grad_pre * trace.act[l].transpose();
    grads.biases[l].noalias() += grad_pre.rowwise().sum();
    grad_act.noalias() = model.weights[l].transpose() * grad_pre;
  }
  return grad_act;
}

Vector flatten_parameters(const Mlp& model) {
  Vector theta(model.parameter_count());
  Index pos = 0;
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    const Index wn = model.weights[l].size();
    theta.segment(pos, wn) =
        Eigen::Map<const Vector>(model.weights[l].data(), wn);
    pos += wn;
    theta.segment(pos, model.biases[l].size()) = model.biases[l];
    pos += model.biases[l].size();
  }
  return theta;
}

void set_parameters(Mlp& model, const Vector& theta) {
  require(theta.size() == model.parameter_count(),
          "flat parameter vector has the wrong length");
  Index pos = 0;
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    const Index wn = model.weights[l].size();
    Eigen::Map<Vector>(model.weights[l].data(), wn) = theta.segment(pos, wn);
    pos += wn;
    model.biases[l] = theta.segment(pos, model.biases[l].size());
    pos += model.biases[l].size();
  }
}

Vector flatten_gradients(const MlpGrads& grads) {
  Index total = 0;
  for (std::size_t l = 0; l < grads.weights.size(); ++l) {
    total += grads.weights[l].size() + grads.biases[l].size();
  }
  Vector flat(total);
  Index pos = 0;
  for (std::size_t l = 0; l < grads.weights.size(); ++l) {
    const Index wn = grads.weights[l].size();
    flat.segment(pos, wn) =
        Eigen::Map<const Vector>(grads.weights[l].data(), wn);
    pos += wn;
    flat.segment(pos, grads.biases[l].size()) = grads.biases[l];
    pos += grads.biases[l].size();
  }
  return flat;
}

Matrix softmax_columns(const Matrix& logits) {
  Matrix probs(logits.rows(), logits.cols());
  for (Index j = 0; j < logits.cols(); ++j) {
    const Vector shifted =
        logits.col(j).array() - logits.col(j).maxCoeff();
    const Vector expv = shifted.array().exp();
    probs.col(j) = expv / expv.sum();
  }
  return probs;
}

Scalar softmax_cross_entropy(const Matrix& logits,
                             const std::vector<int>& labels,
                             const Vector& sample_weights,
                             Matrix* grad_logits) {
  const Index batch = logits.cols();
  const Index classes = logits.rows();
  require(static_cast<Index>(labels.size()) == batch,
          "one label per logit column required");
  require(sample_weights.size() == batch,
          "one sample weight per logit column required");
  require(batch >= 1, "cross entropy needs a nonempty batch");

  Scalar weight_total = 0.0;
  for (Index j = 0; j < batch; ++j) {
    require(labels[static_cast<std::size_t>(j)] >= 0 &&
                labels[static_cast<std::size_t>(j)] < classes,
            "label out of range");
    require(sample_weights[j] > 0.0, "sample weights must be positive");
    weight_total += sample_weights[j];
  }

  const Matrix probs = softmax_columns(logits);
  Scalar loss = 0.0;
  for (Index j = 0; j < batch; ++j) {
    const Scalar max = logits.col(j).maxCoeff();
    const Scalar lse =
        max + std::log((logits.col(j).array() - max).exp().sum());
    loss += sample_weights[j] *
            (lse - logits(labels[static_cast<std::size_t>(j)], j));
  }
  loss /= weight_total;

  if (grad_logits != nullptr) {
    *grad_logits = probs;
    for (Index j = 0; j < batch; ++j) {
      (*grad_logits)(labels[static_cast<std::size_t>(j)], j) -= 1.0;
      grad_logits->col(j) *= sample_weights[j] / weight_total;
    }
  }
  return loss;
}

Scalar mse_loss(const Matrix& prediction, const Matrix& target,
                Matrix* grad_prediction) {
  require(prediction.rows() == target.rows() &&
              prediction.cols() == target.cols(),
          "prediction/target shape mismatch");
  require(prediction.size() > 0, "mse needs a nonempty batch");
  const Matrix diff = prediction - target;
  const Scalar inv_n = 1.0 / static_cast<Scalar>(diff.size());
  if (grad_prediction != nullptr) *grad_prediction = 2.0 * inv_n * diff;
  return diff.squaredNorm() * inv_n;
}

Scalar softplus(Scalar x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

Scalar softplus_grad(Scalar x) {
  return x > 0.0 ? 1.0 / (1.0 + std::exp(-x))
                 : std::exp(x) / (1.0 + std::exp(x));
}

Adam::Adam(const Mlp& model, AdamConfig config)
    : config_(config),
      first_(MlpGrads::zeros_like(model)),
      second_(MlpGrads::zeros_like(model)) {
  require(config_.learning_rate > 0.0 && config_.epsilon > 0.0 &&
              config_.beta1 >= 0.0 && config_.beta1 < 1.0 &&
              config_.beta2 >= 0.0 && config_.beta2 < 1.0,
          "invalid Adam configuration");
}

void Adam::step(Mlp& model, const MlpGrads& grads) {
  require(grads.weights.size() == model.weights.size(),
          "gradient shapes do not match the model");
  ++steps_;
  const Scalar correct1 =
      1.0 - std::pow(config_.beta1, static_cast<Scalar>(steps_));
  const Scalar correct2 =
      1.0 - std::pow(config_.beta2, static_cast<Scalar>(steps_));
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
      m = config_.beta1 * m + (1.0 - config_.beta1) * g;
      v = (config_.beta2 * v).array() +
          (1.0 - config_.beta2) * g.array().square();
      param.array() -= config_.learning_rate * (m.array() / correct1) /
                       ((v.array() / correct2).sqrt() + config_.epsilon);
    };
    update(model.weights[l], first_.weights[l], second_.weights[l],
           grads.weights[l]);
    update(model.biases[l], first_.biases[l], second_.biases[l],
           grads.biases[l]);
  }
}

}  // namespace regimecast
