#pragma once

#include <vector>

#include "regimecast/rng.hpp"
#include "regimecast/types.hpp"

namespace regimecast {

/// Hidden-layer nonlinearity.  The output layer is always affine; losses that
/// need a link (softmax, softplus) apply it themselves.
enum class Activation { ReLU, Tanh, Identity };

/// Fully connected network.  weights[l] is out_l x in_l and biases[l] out_l;
/// batches are stored one sample per column so layer application is a single
/// matrix product.
struct Mlp {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  Activation activation = Activation::ReLU;

  Index input_dim() const { return weights.front().cols(); }
  Index output_dim() const { return weights.back().rows(); }
  Index layer_count() const { return static_cast<Index>(weights.size()); }
  Index parameter_count() const;

  /// He-style seeded initialization: W ~ N(0, gain/fan_in) with gain 2 for
  /// ReLU and 1 otherwise, biases zero.  Throws std::invalid_argument on
  /// nonpositive layer widths.
  static Mlp create(Index in, const std::vector<Index>& hidden, Index out,
                    Activation act, RandomSource& rng);
};

/// Per-layer intermediates captured by forward() for use in backward().
/// act[0] is the input batch, act[l+1] the post-activation output of layer l
/// (affine for the last layer); pre[l] is the pre-activation.
struct MlpTrace {
  std::vector<Matrix> pre;
  std::vector<Matrix> act;
};

/// Gradient (or moment) buffers with the same shapes as an Mlp's parameters.
struct MlpGrads {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  static MlpGrads zeros_like(const Mlp& model);
  void set_zero();
};

/// Applies the network to a batch (columns are samples).
Matrix forward(const Mlp& model, const Matrix& input);

/// Single-sample convenience overload.
Vector forward(const Mlp& model, const Vector& input);

/// Batch forward that records intermediates for backpropagation.
Matrix forward(const Mlp& model, const Matrix& input, MlpTrace& trace);

/// Backpropagates dL/d(output) through a recorded trace, accumulating
/// parameter gradients into `grads` (caller zeroes them), and returns
/// dL/d(input) so networks can be chained.
Matrix backward(const Mlp& model, const MlpTrace& trace,
                const Matrix& grad_output, MlpGrads& grads);

/// Round-trip between a model/gradient and one flat vector, ordered layer by
/// layer, weights (column-major) then bias.  Used by optimizers and
/// finite-difference checks.
Vector flatten_parameters(const Mlp& model);
void set_parameters(Mlp& model, const Vector& theta);
Vector flatten_gradients(const MlpGrads& grads);

/// Column-wise softmax with max-subtraction for stability.
Matrix softmax_columns(const Matrix& logits);

/// Weighted mean cross-entropy of integer labels under column-wise softmax:
/// loss = sum_i sw_i * (logsumexp(z_i) - z_i[label_i]) / sum_i sw_i.
/// If grad_logits is non-null it receives dloss/dlogits.  Sample weights must
/// be positive; pass Vector::Ones for the unweighted mean.
Scalar softmax_cross_entropy(const Matrix& logits,
                             const std::vector<int>& labels,
                             const Vector& sample_weights,
                             Matrix* grad_logits = nullptr);

/// Mean squared error over all entries; optional gradient w.r.t. prediction.
Scalar mse_loss(const Matrix& prediction, const Matrix& target,
                Matrix* grad_prediction = nullptr);

/// Overflow-safe log(1 + exp(x)) and its derivative (the logistic sigmoid).
Scalar softplus(Scalar x);
Scalar softplus_grad(Scalar x);

/// Adam optimizer state for one network.
struct AdamConfig {
  Scalar learning_rate = 1e-3;
  Scalar beta1 = 0.9;
  Scalar beta2 = 0.999;
  Scalar epsilon = 1e-8;
};

class Adam {
 public:
  Adam(const Mlp& model, AdamConfig config = {});

  /// One update with bias-corrected first/second moments.
  void step(Mlp& model, const MlpGrads& grads);

  const AdamConfig& config() const { return config_; }
  long steps_taken() const { return steps_; }

 private:
  AdamConfig config_;
  MlpGrads first_;
  MlpGrads second_;
  long steps_ = 0;
};

}  // namespace regimecast
