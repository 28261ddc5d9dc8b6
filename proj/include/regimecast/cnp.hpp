#pragma once

#include <cstdint>
#include <vector>

#include "regimecast/nn.hpp"
#include "regimecast/types.hpp"

namespace regimecast {

/// Diagonal Gaussian over a day's hourly values.
struct GaussianForecast {
  Vector mean;
  Vector variance;  ///< strictly positive componentwise
};

/// Conditional process for one regime: an encoder summarizes observed
/// (input, day-curve) pairs into a mean representation and a decoder turns
/// (query input, representation) into per-hour Gaussian parameters.  Inputs
/// and outputs are z-scored with the stored statistics; the decoder's raw
/// scale head passes through softplus(s) + 1e-6 so variances stay positive.
struct CnpModel {
  Mlp encoder;  ///< (x_dim + y_dim) -> repr_dim
  Mlp decoder;  ///< (x_dim + repr_dim) -> 2 * y_dim
  Index x_dim = 0;
  Index y_dim = 0;
  Index repr_dim = 0;
  Vector x_mean, x_std;
  Vector y_mean, y_std;
};

struct CnpConfig {
  Index repr_dim = 128;
  std::vector<Index> hidden = {128, 128};
  int epochs = 300;
  int tasks_per_epoch = 10;
  Scalar learning_rate = 1e-3;
  std::uint64_t seed = 1;
};

/// Trained model plus the mean task NLL per epoch.
struct CnpTrainResult {
  CnpModel model;
  std::vector<Scalar> epoch_nll;
};

/// Mean context representation.  Context rows are matched pairs
/// (ctx_x.row(i), ctx_y.row(i)).  The pairs are brought into a canonical
/// order (lexicographic) and identical pairs are grouped with their
/// multiplicity reduced by the common divisor before averaging, so any
/// permutation of the context and any uniform duplication of it produce a
/// bit-identical representation.  Throws on an empty context.
Vector encode(const CnpModel& model, const Matrix& ctx_x,
              const Matrix& ctx_y);

/// Decodes a query input and a representation into per-hour Gaussians in
/// original units (floor 1e-6 on each variance).
GaussianForecast decode(const CnpModel& model, const Vector& x_star,
                        const Vector& r);

/// Gaussian negative log likelihood of a day curve:
/// sum_h [ 0.5*log(2*pi*var_h) + (y_h - mean_h)^2 / (2*var_h) ].
Scalar nll(const GaussianForecast& forecast, const Vector& y);

/// encode followed by decode.
GaussianForecast predict(const CnpModel& model, const Matrix& ctx_x,
                         const Matrix& ctx_y, const Vector& x_star);

/// Training objective for one sampled task, in standardized space: targets
/// are decoded from the plain mean of the encoded context columns and the
/// mean per-target NLL is returned.  enc_in stacks [x; y] per context column;
/// tgt_x / tgt_y hold target columns.  When the gradient sinks are non-null
/// the parameter gradients of the objective are accumulated into them.
/// Exposed so the exact training gradient can be checked independently.
Scalar task_objective(const Mlp& encoder, const Mlp& decoder,
                      const Matrix& enc_in, const Matrix& tgt_x,
                      const Matrix& tgt_y, MlpGrads* enc_grads = nullptr,
                      MlpGrads* dec_grads = nullptr);

/// Trains a model on one regime's pairs (rows of X and Y are matched).
/// Each task draws a context size N_C uniformly from
/// [min(3, m-1), ceil(0.8*m)], splits a seeded permutation into context and
/// targets, and takes one Adam step on both networks.  Deterministic for a
/// fixed config; throws std::invalid_argument when m < 8.
CnpTrainResult train_cnp(const Matrix& X, const Matrix& Y,
                         const CnpConfig& config = {});

}  // namespace regimecast
