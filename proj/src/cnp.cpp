#include "regimecast/cnp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "regimecast/rng.hpp"

namespace regimecast {

namespace {

constexpr Scalar kTwoPi = 6.28318530717958647692;
constexpr Scalar kVarianceFloor = 1e-6;

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

Vector standardize(const Vector& v, const Vector& mean, const Vector& std) {
  return (v - mean).cwiseQuotient(std);
}

/// Canonical context: pairs sorted lexicographically, identical pairs merged,
/// multiplicities reduced by their common divisor.  Guarantees bit-identical
/// means under permutation and uniform duplication of the context.
struct CanonicalContext {
  Matrix enc_in;   ///< (x_dim + y_dim) x unique, standardized columns
  Vector counts;   ///< reduced multiplicities
  Scalar total = 0.0;
};

CanonicalContext canonical_context(const CnpModel& model, const Matrix& ctx_x,
                                   const Matrix& ctx_y) {
  const Index n = ctx_x.rows();
  require(n >= 1, "context must be nonempty");
  require(ctx_y.rows() == n, "context x/y row counts differ");
  require(ctx_x.cols() == model.x_dim && ctx_y.cols() == model.y_dim,
          "context dimensions do not match the model");
  require(ctx_x.allFinite() && ctx_y.allFinite(),
          "context must be finite");

  Matrix combined(n, model.x_dim + model.y_dim);
  combined << ctx_x, ctx_y;
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  auto lex_less = [&](Index a, Index b) {
    for (Index j = 0; j < combined.cols(); ++j) {
      if (combined(a, j) != combined(b, j)) {
        return combined(a, j) < combined(b, j);
      }
    }
    return false;
  };
  std::sort(order.begin(), order.end(), lex_less);

  std::vector<Index> reps;
  std::vector<long> counts;
  for (Index pos = 0; pos < n; ++pos) {
    const Index row = order[static_cast<std::size_t>(pos)];
    if (!reps.empty() && !lex_less(reps.back(), row) &&
        !lex_less(row, reps.back())) {
      ++counts.back();
    } else {
      reps.push_back(row);
      counts.push_back(1);
    }
  }
  long divisor = 0;
  for (long c : counts) divisor = std::gcd(divisor, c);
  for (long& c : counts) c /= divisor;

  CanonicalContext ctx;
  ctx.enc_in.resize(model.x_dim + model.y_dim,
                    static_cast<Index>(reps.size()));
  ctx.counts.resize(static_cast<Index>(reps.size()));
  for (std::size_t u = 0; u < reps.size(); ++u) {
    const Index row = reps[u];
    ctx.enc_in.col(static_cast<Index>(u))
        << standardize(ctx_x.row(row).transpose(), model.x_mean,
                       model.x_std),
        standardize(ctx_y.row(row).transpose(), model.y_mean, model.y_std);
    ctx.counts[static_cast<Index>(u)] = static_cast<Scalar>(counts[u]);
    ctx.total += static_cast<Scalar>(counts[u]);
  }
  return ctx;
}

/// Per-column mean/std with a unit guard for constant columns.
void column_moments(const Matrix& data, Vector& mean, Vector& std) {
  const auto m = static_cast<Scalar>(data.rows());
  mean = data.colwise().mean().transpose();
  std = Vector::Ones(data.cols());
  for (Index j = 0; j < data.cols(); ++j) {
    const Scalar var =
        (data.col(j).array() - mean[j]).square().sum() / m;
    if (var > 0.0) std[j] = std::sqrt(var);
  }
}

}  // namespace

Vector encode(const CnpModel& model, const Matrix& ctx_x,
              const Matrix& ctx_y) {
  const CanonicalContext ctx = canonical_context(model, ctx_x, ctx_y);
  const Matrix encoded = forward(model.encoder, ctx.enc_in);
  Vector r = Vector::Zero(model.repr_dim);
  for (Index u = 0; u < encoded.cols(); ++u) {
    r += ctx.counts[u] * encoded.col(u);
  }
  return r / ctx.total;
}

GaussianForecast decode(const CnpModel& model, const Vector& x_star,
                        const Vector& r) {
  require(x_star.size() == model.x_dim,
          "query width does not match the model");
  require(r.size() == model.repr_dim,
          "representation width does not match the model");
  Vector dec_in(model.x_dim + model.repr_dim);
  dec_in << standardize(x_star, model.x_mean, model.x_std), r;
  const Vector out = forward(model.decoder, dec_in);

  GaussianForecast forecast;
  forecast.mean = model.y_mean + model.y_std.cwiseProduct(out.head(model.y_dim));
  forecast.variance.resize(model.y_dim);
  for (Index h = 0; h < model.y_dim; ++h) {
    const Scalar standardized_var =
        softplus(out[model.y_dim + h]) + kVarianceFloor;
    forecast.variance[h] = std::max(
        model.y_std[h] * model.y_std[h] * standardized_var, kVarianceFloor);
  }
  return forecast;
}

Scalar nll(const GaussianForecast& forecast, const Vector& y) {
  const Index hours = forecast.mean.size();
  require(forecast.variance.size() == hours && y.size() == hours,
          "forecast and target widths differ");
  Scalar total = 0.0;
  for (Index h = 0; h < hours; ++h) {
    require(forecast.variance[h] > 0.0, "variances must be positive");
    const Scalar resid = y[h] - forecast.mean[h];
    total += 0.5 * std::log(kTwoPi * forecast.variance[h]) +
             resid * resid / (2.0 * forecast.variance[h]);
  }
  return total;
}

GaussianForecast predict(const CnpModel& model, const Matrix& ctx_x,
                         const Matrix& ctx_y, const Vector& x_star) {
  return decode(model, x_star, encode(model, ctx_x, ctx_y));
}

Scalar task_objective(const Mlp& encoder, const Mlp& decoder,
                      const Matrix& enc_in, const Matrix& tgt_x,
                      const Matrix& tgt_y, MlpGrads* enc_grads,
                      MlpGrads* dec_grads) {
  const Index n_ctx = enc_in.cols();
  const Index n_tgt = tgt_x.cols();
  const Index repr = encoder.output_dim();
  const Index y_dim = decoder.output_dim() / 2;
  require(n_ctx >= 1 && n_tgt >= 1, "context and targets must be nonempty");
  require(tgt_y.rows() == y_dim && tgt_y.cols() == n_tgt,
          "target curves do not match the decoder");
  require(decoder.input_dim() == tgt_x.rows() + repr,
          "decoder input must take query plus representation");
  require((enc_grads == nullptr) == (dec_grads == nullptr),
          "provide both gradient sinks or neither");

  MlpTrace enc_trace;
  const bool with_grads = enc_grads != nullptr;
  const Matrix encoded = with_grads ? forward(encoder, enc_in, enc_trace)
                                    : forward(encoder, enc_in);
  const Vector r = encoded.rowwise().mean();

  Matrix dec_in(tgt_x.rows() + repr, n_tgt);
  dec_in.topRows(tgt_x.rows()) = tgt_x;
  dec_in.bottomRows(repr) = r.replicate(1, n_tgt);
  MlpTrace dec_trace;
  const Matrix out = with_grads ? forward(decoder, dec_in, dec_trace)
                                : forward(decoder, dec_in);

  const Scalar inv_t = 1.0 / static_cast<Scalar>(n_tgt);
  Scalar loss = 0.0;
  Matrix grad_out;
  if (with_grads) grad_out.setZero(out.rows(), n_tgt);
  for (Index j = 0; j < n_tgt; ++j) {
    for (Index h = 0; h < y_dim; ++h) {
      const Scalar raw = out(y_dim + h, j);
      const Scalar var = softplus(raw) + kVarianceFloor;
      const Scalar resid = tgt_y(h, j) - out(h, j);
      loss += 0.5 * std::log(kTwoPi * var) + resid * resid / (2.0 * var);
      if (with_grads) {
        grad_out(h, j) = -resid / var * inv_t;
        grad_out(y_dim + h, j) =
            (0.5 / var - resid * resid / (2.0 * var * var)) *
            softplus_grad(raw) * inv_t;
      }
    }
  }
  loss *= inv_t;

  if (with_grads) {
    const Matrix grad_dec_in =
        backward(decoder, dec_trace, grad_out, *dec_grads);
    const Vector grad_r = grad_dec_in.bottomRows(repr).rowwise().sum() /
                          static_cast<Scalar>(n_ctx);
    backward(encoder, enc_trace, grad_r.replicate(1, n_ctx), *enc_grads);
  }
  return loss;
}

CnpTrainResult train_cnp(const Matrix& X, const Matrix& Y,
                         const CnpConfig& config) {
  const Index m = X.rows();
  require(m >= 8, "need at least 8 pairs to train");
  require(Y.rows() == m, "X and Y row counts differ");
  require(X.cols() >= 1 && Y.cols() >= 1, "empty feature or target width");
  require(X.allFinite() && Y.allFinite(), "training data must be finite");
  require(config.repr_dim >= 1 && config.epochs >= 1 &&
              config.tasks_per_epoch >= 1 && config.learning_rate > 0.0,
          "invalid training configuration");

  CnpTrainResult result;
  CnpModel& model = result.model;
  model.x_dim = X.cols();
  model.y_dim = Y.cols();
  model.repr_dim = config.repr_dim;

  column_moments(X, model.x_mean, model.x_std);
  column_moments(Y, model.y_mean, model.y_std);

  // Standardized column batches shared by every task.
  Matrix enc_all(model.x_dim + model.y_dim, m);
  Matrix xs(model.x_dim, m);
  Matrix ys(model.y_dim, m);
  for (Index i = 0; i < m; ++i) {
    xs.col(i) = standardize(X.row(i).transpose(), model.x_mean, model.x_std);
    ys.col(i) = standardize(Y.row(i).transpose(), model.y_mean, model.y_std);
    enc_all.col(i) << xs.col(i), ys.col(i);
  }

  RandomSource rng(config.seed);
  RandomSource enc_init = rng.substream("enc-init");
  RandomSource dec_init = rng.substream("dec-init");
  RandomSource tasks = rng.substream("tasks");
  model.encoder = Mlp::create(model.x_dim + model.y_dim, config.hidden,
                              model.repr_dim, Activation::ReLU, enc_init);
  model.decoder = Mlp::create(model.x_dim + model.repr_dim, config.hidden,
                              2 * model.y_dim, Activation::ReLU, dec_init);
  AdamConfig adam;
  adam.learning_rate = config.learning_rate;
  Adam enc_opt(model.encoder, adam);
  Adam dec_opt(model.decoder, adam);
  auto enc_grads = MlpGrads::zeros_like(model.encoder);
  auto dec_grads = MlpGrads::zeros_like(model.decoder);

  const Index ctx_lo = std::min<Index>(3, m - 1);
  const Index ctx_hi = (4 * m + 4) / 5;  // ceil(0.8 m) <= m-1 for m >= 5
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Scalar epoch_loss = 0.0;
    for (int task = 0; task < config.tasks_per_epoch; ++task) {
      const auto perm = tasks.permutation(m);
      const Index n_ctx =
          ctx_lo + static_cast<Index>(tasks.integer(
                       static_cast<std::uint64_t>(ctx_hi - ctx_lo + 1)));
      const Index n_tgt = m - n_ctx;
      Matrix enc_in(enc_all.rows(), n_ctx);
      Matrix tgt_x(model.x_dim, n_tgt);
      Matrix tgt_y(model.y_dim, n_tgt);
      for (Index i = 0; i < n_ctx; ++i) {
        enc_in.col(i) = enc_all.col(perm[static_cast<std::size_t>(i)]);
      }
      for (Index i = 0; i < n_tgt; ++i) {
        const Index src = perm[static_cast<std::size_t>(n_ctx + i)];
        tgt_x.col(i) = xs.col(src);
        tgt_y.col(i) = ys.col(src);
      }
      enc_grads.set_zero();
      dec_grads.set_zero();
      epoch_loss += task_objective(model.encoder, model.decoder, enc_in,
                                   tgt_x, tgt_y, &enc_grads, &dec_grads);
      enc_opt.step(model.encoder, enc_grads);
      dec_opt.step(model.decoder, dec_grads);
    }
    result.epoch_nll.push_back(epoch_loss /
                               static_cast<Scalar>(config.tasks_per_epoch));
  }
  return result;
}

}  // namespace regimecast
