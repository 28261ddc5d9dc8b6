#include "regimecast/regime.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

namespace regimecast {
namespace {

constexpr Scalar kPi = std::numbers::pi_v<Scalar>;
constexpr Scalar kKappaFloor = 1e-12;        // keeps log kappa / log(1-kappa) finite
constexpr Scalar kConcentrationFloor = 1e-8; // guards degenerate DP concentrations
constexpr Scalar kBetaSumTol = 1e-12;
constexpr Scalar kVarianceFloor = 1e-12;
constexpr Scalar kVarianceCeil = 1e12;

void require(bool condition, const char* message) {
  if (!condition) {
    throw std::invalid_argument(message);
  }
}

Scalar clamp_unit(Scalar x) {
  return std::clamp(x, kKappaFloor, 1.0 - kKappaFloor);
}

Scalar log_normal_pdf(Scalar x, Scalar mu, Scalar sigma2) {
  const Scalar d = x - mu;
  return -0.5 * std::log(2.0 * kPi * sigma2) - d * d / (2.0 * sigma2);
}

Scalar log_beta_fn(Scalar a, Scalar b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

Scalar log_beta_pdf(Scalar x, Scalar a, Scalar b) {
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) -
         log_beta_fn(a, b);
}

Scalar log_gamma_pdf(Scalar x, Scalar shape, Scalar rate) {
  return shape * std::log(rate) - std::lgamma(shape) +
         (shape - 1.0) * std::log(x) - rate * x;
}

/// Parameters of the Normal-Inverse-Gamma posterior after n observations
/// with the given mean and centered sum of squares.
struct NigPosterior {
  Scalar k = 0.0;
  Scalar m = 0.0;
  Scalar a = 0.0;
  Scalar b = 0.0;
};

NigPosterior nig_posterior(const NormalInverseGamma& prior, Scalar n,
                           Scalar mean, Scalar ssd) {
  NigPosterior post;
  post.k = prior.k0 + n;
  post.m = (prior.k0 * prior.m0 + n * mean) / post.k;
  post.a = prior.a0 + 0.5 * n;
  const Scalar shift = mean - prior.m0;
  post.b = prior.b0 + 0.5 * ssd + 0.5 * prior.k0 * n * shift * shift / post.k;
  return post;
}

Scalar log_nig_pdf(Scalar mu, Scalar sigma2, const NormalInverseGamma& prior) {
  const Scalar shift = mu - prior.m0;
  return -0.5 * std::log(2.0 * kPi * sigma2 / prior.k0) -
         prior.k0 * shift * shift / (2.0 * sigma2) +
         prior.a0 * std::log(prior.b0) - std::lgamma(prior.a0) -
         (prior.a0 + 1.0) * std::log(sigma2) - prior.b0 / sigma2;
}

/// Prior predictive of one observation under the Normal-Inverse-Gamma base:
/// Student-t with 2 a0 degrees of freedom.
Scalar log_predictive_pdf(Scalar x, const NormalInverseGamma& prior) {
  const Scalar nu = 2.0 * prior.a0;
  const Scalar scale2 = prior.b0 * (1.0 + prior.k0) / (prior.a0 * prior.k0);
  const Scalar d = x - prior.m0;
  return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
         0.5 * std::log(nu * kPi * scale2) -
         0.5 * (nu + 1.0) * std::log1p(d * d / (nu * scale2));
}

struct MomentStats {
  Scalar count = 0.0;
  Scalar mean = 0.0;
  Scalar ssd = 0.0;
};

std::vector<MomentStats> regime_moments(const std::vector<int>& z,
                                        const Vector& obs, int regimes) {
  std::vector<MomentStats> out(static_cast<std::size_t>(regimes));
  for (std::size_t t = 0; t < z.size(); ++t) {
    auto& s = out[static_cast<std::size_t>(z[t])];
    s.count += 1.0;
    s.mean += obs(static_cast<Index>(t));
  }
  for (auto& s : out) {
    if (s.count > 0.0) {
      s.mean /= s.count;
    }
  }
  for (std::size_t t = 0; t < z.size(); ++t) {
    auto& s = out[static_cast<std::size_t>(z[t])];
    const Scalar d = obs(static_cast<Index>(t)) - s.mean;
    s.ssd += d * d;
  }
  return out;
}

/// Transition tallies of one state: n/row hold only the switch transitions
/// (w = 0), persist/sw split every transition by its indicator.
struct TransitionCounts {
  std::vector<std::vector<int>> n;
  std::vector<int> row;
  std::vector<int> persist;
  std::vector<int> sw;
};

TransitionCounts count_transitions(const std::vector<int>& z,
                                   const std::vector<int>& w, int regimes) {
  TransitionCounts counts;
  counts.n.assign(static_cast<std::size_t>(regimes),
                  std::vector<int>(static_cast<std::size_t>(regimes), 0));
  counts.row.assign(static_cast<std::size_t>(regimes), 0);
  counts.persist.assign(static_cast<std::size_t>(regimes), 0);
  counts.sw.assign(static_cast<std::size_t>(regimes), 0);
  for (std::size_t t = 1; t < z.size(); ++t) {
    const auto from = static_cast<std::size_t>(z[t - 1]);
    if (w[t] == 1) {
      ++counts.persist[from];
    } else {
      ++counts.n[from][static_cast<std::size_t>(z[t])];
      ++counts.row[from];
      ++counts.sw[from];
    }
  }
  return counts;
}

Scalar normalized_grid_log_weight(const Priors& priors, Scalar rho1,
                                  Scalar rho2) {
  Scalar total = 0.0;
  for (const auto& point : priors.rho_grid) {
    total += point.weight;
  }
  for (const auto& point : priors.rho_grid) {
    if (std::abs(point.rho1 - rho1) < 1e-12 &&
        std::abs(point.rho2 - rho2) < 1e-12) {
      return std::log(point.weight / total);
    }
  }
  return 0.0;  // off-grid pair (e.g. the starting state): no weight term
}

}  // namespace

RegimeVariant variant_from_string(const std::string& name) {
  if (name == "hdp") {
    return RegimeVariant::Hdp;
  }
  if (name == "sticky") {
    return RegimeVariant::Sticky;
  }
  if (name == "ds") {
    return RegimeVariant::Ds;
  }
  throw std::invalid_argument("unknown regime variant: " + name);
}

std::string variant_name(RegimeVariant variant) {
  switch (variant) {
    case RegimeVariant::Hdp:
      return "hdp";
    case RegimeVariant::Sticky:
      return "sticky";
    case RegimeVariant::Ds:
      return "ds";
  }
  throw std::invalid_argument("unknown regime variant value");
}

Priors Priors::defaults() {
  Priors priors;
  const Scalar levels[] = {0.5, 1.0, 2.0, 5.0, 10.0};
  for (const Scalar rho1 : levels) {
    for (const Scalar rho2 : levels) {
      priors.rho_grid.push_back({rho1, rho2, 1.0});
    }
  }
  return priors;
}

void Priors::validate() const {
  require(std::isfinite(gamma_shape) && gamma_shape > 0.0,
          "Priors: gamma_shape must be positive");
  require(std::isfinite(gamma_rate) && gamma_rate > 0.0,
          "Priors: gamma_rate must be positive");
  require(std::isfinite(alpha_shape) && alpha_shape > 0.0,
          "Priors: alpha_shape must be positive");
  require(std::isfinite(alpha_rate) && alpha_rate > 0.0,
          "Priors: alpha_rate must be positive");
  require(!rho_grid.empty(), "Priors: rho_grid must not be empty");
  for (const auto& point : rho_grid) {
    require(std::isfinite(point.rho1) && point.rho1 > 0.0,
            "Priors: rho1 grid values must be positive");
    require(std::isfinite(point.rho2) && point.rho2 > 0.0,
            "Priors: rho2 grid values must be positive");
    require(std::isfinite(point.weight) && point.weight > 0.0,
            "Priors: rho grid weights must be positive");
  }
  require(std::isfinite(emission.m0), "Priors: emission m0 must be finite");
  require(std::isfinite(emission.k0) && emission.k0 > 0.0,
          "Priors: emission k0 must be positive");
  require(std::isfinite(emission.a0) && emission.a0 > 0.0,
          "Priors: emission a0 must be positive");
  require(std::isfinite(emission.b0) && emission.b0 > 0.0,
          "Priors: emission b0 must be positive");
}

Priors default_priors(const Vector& obs) {
  require(obs.size() >= 1, "default_priors: need at least one observation");
  require(obs.allFinite(), "default_priors: observations must be finite");
  Priors priors = Priors::defaults();
  const Scalar mean = obs.mean();
  Scalar var = 1.0;
  if (obs.size() >= 2) {
    var = (obs.array() - mean).square().sum() /
          static_cast<Scalar>(obs.size() - 1);
  }
  if (!(var > 0.0)) {
    var = 1.0;
  }
  priors.emission.m0 = mean;
  priors.emission.k0 = 0.01;
  priors.emission.a0 = 2.0;
  priors.emission.b0 = 0.5 * var;
  return priors;
}

void RegimePosterior::validate() const {
  const auto T = static_cast<Index>(z.size());
  require(T >= 1, "RegimePosterior: empty label sequence");
  require(static_cast<Index>(w.size()) == T,
          "RegimePosterior: z and w must have equal length");
  require(regimes >= 1, "RegimePosterior: need at least one regime");
  const auto K = static_cast<std::size_t>(regimes);
  require(beta.size() == regimes + 1,
          "RegimePosterior: beta must hold K + 1 weights");
  require(beta.allFinite() && beta.minCoeff() >= 0.0,
          "RegimePosterior: beta weights must be nonnegative");
  require(std::abs(beta.sum() - 1.0) <= kBetaSumTol,
          "RegimePosterior: beta weights must sum to one");
  require(kappa.size() == regimes,
          "RegimePosterior: kappa must hold K entries");
  require(kappa.allFinite() && kappa.minCoeff() >= 0.0 &&
              kappa.maxCoeff() <= 1.0,
          "RegimePosterior: kappa entries must lie in [0, 1]");
  require(emissions.size() == K,
          "RegimePosterior: emissions must hold K entries");
  for (const auto& emission : emissions) {
    require(std::isfinite(emission.mu), "RegimePosterior: mu must be finite");
    require(std::isfinite(emission.sigma2) && emission.sigma2 > 0.0,
            "RegimePosterior: sigma2 must be positive");
  }
  require(std::isfinite(alpha) && alpha > 0.0,
          "RegimePosterior: alpha must be positive");
  require(std::isfinite(gamma) && gamma > 0.0,
          "RegimePosterior: gamma must be positive");
  require(std::isfinite(rho1) && rho1 > 0.0,
          "RegimePosterior: rho1 must be positive");
  require(std::isfinite(rho2) && rho2 > 0.0,
          "RegimePosterior: rho2 must be positive");
  require(w[0] == 0, "RegimePosterior: the first indicator must be zero");
  std::vector<int> occupancy(K, 0);
  for (Index t = 0; t < T; ++t) {
    const int label = z[static_cast<std::size_t>(t)];
    require(label >= 0 && label < regimes,
            "RegimePosterior: label out of range");
    const int indicator = w[static_cast<std::size_t>(t)];
    require(indicator == 0 || indicator == 1,
            "RegimePosterior: indicators must be 0 or 1");
    if (indicator == 1) {
      require(z[static_cast<std::size_t>(t)] ==
                  z[static_cast<std::size_t>(t - 1)],
              "RegimePosterior: persistence requires an unchanged label");
    }
    ++occupancy[static_cast<std::size_t>(label)];
  }
  for (const int count : occupancy) {
    require(count >= 1, "RegimePosterior: every regime must be occupied");
  }
}

Vector stick_breaking(Scalar gamma, Index truncation, RandomSource& rng) {
  require(truncation >= 1, "stick_breaking: truncation must be positive");
  require(std::isfinite(gamma) && gamma > 0.0,
          "stick_breaking: gamma must be positive");
  Vector weights(truncation + 1);
  Scalar remainder = 1.0;
  for (Index k = 0; k < truncation; ++k) {
    const Scalar piece = remainder * rng.beta(1.0, gamma);
    weights(k) = piece;
    remainder -= piece;
  }
  weights(truncation) = remainder;
  return weights;
}

RegimePosterior initial_state(const Vector& obs, const Priors& priors) {
  require(obs.size() >= 1, "initial_state: need at least one observation");
  require(obs.allFinite(), "initial_state: observations must be finite");
  priors.validate();
  const auto T = obs.size();
  RegimePosterior state;
  state.z.assign(static_cast<std::size_t>(T), 0);
  state.w.assign(static_cast<std::size_t>(T), 0);
  state.regimes = 1;
  state.beta = Vector::Constant(2, 0.5);
  state.alpha = 1.0;
  state.gamma = 1.0;
  state.rho1 = 1.0;
  state.rho2 = 1.0;
  state.kappa = Vector::Constant(1, state.rho1 / (state.rho1 + state.rho2));
  const Scalar mean = obs.mean();
  const Scalar ssd = (obs.array() - mean).square().sum();
  const NigPosterior post =
      nig_posterior(priors.emission, static_cast<Scalar>(T), mean, ssd);
  require(post.a > 1.0, "initial_state: posterior variance undefined");
  state.emissions.push_back({post.m, post.b / (post.a - 1.0)});
  state.validate();
  return state;
}

RegimePosterior gibbs_sweep(const RegimePosterior& state, const Vector& obs,
                            const Priors& priors, RandomSource& rng,
                            const SweepOptions& options) {
  const auto T = obs.size();
  require(T >= 2, "gibbs_sweep: need at least two observations");
  require(obs.allFinite(), "gibbs_sweep: observations must be finite");
  require(static_cast<Index>(state.z.size()) == T,
          "gibbs_sweep: state and observations disagree in length");
  require(options.max_regimes >= 1,
          "gibbs_sweep: max_regimes must be positive");
  require(std::isfinite(options.sticky_kappa) && options.sticky_kappa >= 0.0,
          "gibbs_sweep: sticky_kappa must be nonnegative");
  state.validate();
  priors.validate();

  const bool ds = options.variant == RegimeVariant::Ds;
  const bool sticky = options.variant == RegimeVariant::Sticky;
  const Scalar tilde = sticky ? options.sticky_kappa : 0.0;

  std::vector<int> z = state.z;
  std::vector<int> w = state.w;
  int K = static_cast<int>(state.regimes);
  std::vector<Scalar> beta(state.beta.data(), state.beta.data() + K);
  Scalar beta_rem = state.beta(K);
  std::vector<Scalar> kap(state.kappa.data(), state.kappa.data() + K);
  std::vector<GaussianEmission> emit = state.emissions;
  Scalar alpha = state.alpha;
  Scalar gamma = state.gamma;
  Scalar rho1 = state.rho1;
  Scalar rho2 = state.rho2;

  TransitionCounts counts = count_transitions(z, w, K);

  // --- step 1: jointly resample (z_t, w_t) against both neighbors ---------
  std::vector<std::pair<int, int>> candidates;
  std::vector<Scalar> log_weights;
  for (Index ti = 0; ti < T; ++ti) {
    const auto t = static_cast<std::size_t>(ti);
    const int prev = ti > 0 ? z[t - 1] : -1;
    const int next = ti + 1 < T ? z[t + 1] : -1;
    const int wnext = ti + 1 < T ? w[t + 1] : 0;

    if (ti > 0 && w[t] == 0) {
      --counts.n[static_cast<std::size_t>(prev)][static_cast<std::size_t>(z[t])];
      --counts.row[static_cast<std::size_t>(prev)];
    }
    if (ti + 1 < T && wnext == 0) {
      --counts.n[static_cast<std::size_t>(z[t])][static_cast<std::size_t>(next)];
      --counts.row[static_cast<std::size_t>(z[t])];
    }

    candidates.clear();
    log_weights.clear();
    const bool can_spawn = K < options.max_regimes;
    for (int k = 0; k < K; ++k) {
      candidates.emplace_back(k, 0);
    }
    if (can_spawn) {
      candidates.emplace_back(K, 0);
    }
    if (ds && ti > 0) {
      candidates.emplace_back(prev, 1);
    }

    for (const auto& [k, wt] : candidates) {
      const bool fresh = k == K;
      Scalar lw = 0.0;

      // incoming transition factor
      if (ti == 0) {
        lw += std::log(fresh ? beta_rem : beta[static_cast<std::size_t>(k)]);
      } else if (wt == 1) {
        lw += std::log(kap[static_cast<std::size_t>(prev)]);
      } else if (ds) {
        const auto p = static_cast<std::size_t>(prev);
        lw += std::log1p(-kap[p]);
        const Scalar den = counts.row[p] + alpha;
        if (fresh) {
          lw += std::log(alpha * beta_rem) - std::log(den);
        } else {
          lw += std::log(counts.n[p][static_cast<std::size_t>(k)] +
                         alpha * beta[static_cast<std::size_t>(k)]) -
                std::log(den);
        }
      } else {
        const auto p = static_cast<std::size_t>(prev);
        const Scalar den = counts.row[p] + alpha + tilde;
        if (fresh) {
          lw += std::log(alpha * beta_rem) - std::log(den);
        } else {
          const Scalar num = counts.n[p][static_cast<std::size_t>(k)] +
                             alpha * beta[static_cast<std::size_t>(k)] +
                             (prev == k ? tilde : 0.0);
          lw += std::log(num) - std::log(den);
        }
      }

      // outgoing transition factor
      if (ti + 1 < T) {
        if (wnext == 1) {
          if (k == next) {
            lw += std::log(kap[static_cast<std::size_t>(k)]);
          } else {
            lw = -std::numeric_limits<Scalar>::infinity();
          }
        } else {
          // a switch arrival into k = prev also sits in row k of the counts
          const int adj = (ti > 0 && wt == 0 && prev == k) ? 1 : 0;
          const auto q = static_cast<std::size_t>(next);
          if (ds) {
            if (fresh) {
              lw += std::log(rho2 / (rho1 + rho2)) + std::log(beta[q]);
            } else {
              const auto kk = static_cast<std::size_t>(k);
              lw += std::log1p(-kap[kk]);
              const Scalar num = counts.n[kk][q] + alpha * beta[q] +
                                 ((adj == 1 && next == k) ? 1.0 : 0.0);
              lw += std::log(num) - std::log(counts.row[kk] + alpha + adj);
            }
          } else {
            if (fresh) {
              lw += std::log(alpha * beta[q]) - std::log(alpha + tilde);
            } else {
              const auto kk = static_cast<std::size_t>(k);
              const Scalar num = counts.n[kk][q] + alpha * beta[q] +
                                 (k == next ? tilde : 0.0) +
                                 ((adj == 1 && next == k) ? 1.0 : 0.0);
              lw += std::log(num) -
                    std::log(counts.row[kk] + alpha + tilde + adj);
            }
          }
        }
      }

      // emission factor
      if (std::isfinite(lw)) {
        lw += fresh ? log_predictive_pdf(obs(ti), priors.emission)
                    : log_normal_pdf(obs(ti),
                                     emit[static_cast<std::size_t>(k)].mu,
                                     emit[static_cast<std::size_t>(k)].sigma2);
      }
      log_weights.push_back(lw);
    }

    const Scalar top =
        *std::max_element(log_weights.begin(), log_weights.end());
    if (!std::isfinite(top)) {
      throw std::runtime_error("gibbs_sweep: no admissible candidate");
    }
    Vector weights(static_cast<Index>(log_weights.size()));
    for (std::size_t i = 0; i < log_weights.size(); ++i) {
      weights(static_cast<Index>(i)) = std::exp(log_weights[i] - top);
    }
    const auto pick = static_cast<std::size_t>(rng.categorical(weights));
    const int chosen = candidates[pick].first;
    const int chosen_w = candidates[pick].second;

    if (chosen == K) {
      // instantiate a new regime from the remainder mass
      const Scalar split = rng.beta(1.0, gamma);
      const Scalar mass = beta_rem * split;
      beta_rem -= mass;
      beta.push_back(mass);
      kap.push_back(ds ? clamp_unit(rng.beta(rho1, rho2)) : 0.0);
      const NigPosterior post =
          nig_posterior(priors.emission, 1.0, obs(ti), 0.0);
      Scalar sigma2 = 1.0 / rng.gamma(post.a, post.b);
      sigma2 = std::clamp(sigma2, kVarianceFloor, kVarianceCeil);
      const Scalar mu = rng.normal(post.m, std::sqrt(sigma2 / post.k));
      emit.push_back({mu, sigma2});
      for (auto& row : counts.n) {
        row.push_back(0);
      }
      counts.n.emplace_back(static_cast<std::size_t>(K) + 1, 0);
      counts.row.push_back(0);
      ++K;
    }

    z[t] = chosen;
    w[t] = chosen_w;
    if (ti > 0 && w[t] == 0) {
      ++counts.n[static_cast<std::size_t>(z[t - 1])][static_cast<std::size_t>(chosen)];
      ++counts.row[static_cast<std::size_t>(z[t - 1])];
    }
    if (ti + 1 < T && wnext == 0) {
      ++counts.n[static_cast<std::size_t>(chosen)][static_cast<std::size_t>(next)];
      ++counts.row[static_cast<std::size_t>(chosen)];
    }
  }

  // prune regimes left empty by the scan and fold their mass back
  {
    std::vector<int> occupancy(static_cast<std::size_t>(K), 0);
    for (const int label : z) {
      ++occupancy[static_cast<std::size_t>(label)];
    }
    if (std::any_of(occupancy.begin(), occupancy.end(),
                    [](int c) { return c == 0; })) {
      std::vector<int> relabel(static_cast<std::size_t>(K), -1);
      std::vector<Scalar> nbeta;
      std::vector<Scalar> nkap;
      std::vector<GaussianEmission> nemit;
      int active = 0;
      for (int k = 0; k < K; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        if (occupancy[kk] > 0) {
          relabel[kk] = active++;
          nbeta.push_back(beta[kk]);
          nkap.push_back(kap[kk]);
          nemit.push_back(emit[kk]);
        } else {
          beta_rem += beta[kk];
        }
      }
      for (auto& label : z) {
        label = relabel[static_cast<std::size_t>(label)];
      }
      beta = std::move(nbeta);
      kap = std::move(nkap);
      emit = std::move(nemit);
      K = active;
    }
  }
  counts = count_transitions(z, w, K);

  // --- step 2: per-regime persistence probabilities (Ds only) -------------
  if (ds) {
    for (int k = 0; k < K; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      kap[kk] = clamp_unit(rng.beta(rho1 + counts.persist[kk],
                                    rho2 + counts.sw[kk]));
    }
  }

  // --- step 3: table-count auxiliaries and the global weights -------------
  long total_tables = 0;  // unthinned, drives the alpha update
  long top_tables = 0;    // thinned plus the initial-state pseudo table
  std::vector<Scalar> column(static_cast<std::size_t>(K), 0.0);
  for (int j = 0; j < K; ++j) {
    const auto jj = static_cast<std::size_t>(j);
    for (int k = 0; k < K; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      const int n = counts.n[jj][kk];
      if (n == 0) {
        continue;
      }
      const Scalar mass =
          alpha * beta[kk] + (sticky && j == k ? tilde : 0.0);
      int tables = 0;
      for (int i = 0; i < n; ++i) {
        if (rng.bernoulli(mass / (mass + static_cast<Scalar>(i)))) {
          ++tables;
        }
      }
      total_tables += tables;
      if (sticky && j == k && tilde > 0.0) {
        // overridden tables do not inform the global weights
        const Scalar p = tilde / (tilde + alpha * beta[jj]);
        int thinned = 0;
        for (int i = 0; i < tables; ++i) {
          if (rng.bernoulli(p)) {
            ++thinned;
          }
        }
        tables -= thinned;
      }
      column[kk] += static_cast<Scalar>(tables);
      top_tables += tables;
    }
  }
  column[static_cast<std::size_t>(z[0])] += 1.0;  // the initial-state draw
  top_tables += 1;

  {
    std::vector<Scalar> draws(static_cast<std::size_t>(K) + 1, 0.0);
    Scalar total = 0.0;
    for (int k = 0; k < K; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      if (column[kk] > 0.0) {
        draws[kk] = rng.gamma(column[kk], 1.0);
      }
      total += draws[kk];
    }
    draws[static_cast<std::size_t>(K)] = rng.gamma(gamma, 1.0);
    total += draws[static_cast<std::size_t>(K)];
    if (!(total > 0.0)) {
      throw std::runtime_error("gibbs_sweep: degenerate weight update");
    }
    for (int k = 0; k < K; ++k) {
      beta[static_cast<std::size_t>(k)] =
          draws[static_cast<std::size_t>(k)] / total;
    }
    beta_rem = draws[static_cast<std::size_t>(K)] / total;
  }

  // --- step 4: emission parameters from their conjugate posteriors --------
  const std::vector<MomentStats> stats = regime_moments(z, obs, K);
  for (int k = 0; k < K; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    const NigPosterior post = nig_posterior(priors.emission, stats[kk].count,
                                            stats[kk].mean, stats[kk].ssd);
    Scalar sigma2 = 1.0 / rng.gamma(post.a, post.b);
    sigma2 = std::clamp(sigma2, kVarianceFloor, kVarianceCeil);
    emit[kk].sigma2 = sigma2;
    emit[kk].mu = rng.normal(post.m, std::sqrt(sigma2 / post.k));
  }

  // --- step 5: concentrations and the persistence prior -------------------
  if (!sticky) {
    Scalar log_u_sum = 0.0;
    long indicator_sum = 0;
    for (int j = 0; j < K; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      if (counts.row[jj] == 0) {
        continue;
      }
      const auto row = static_cast<Scalar>(counts.row[jj]);
      const Scalar u = std::max(rng.beta(alpha + 1.0, row), 1e-300);
      log_u_sum += std::log(u);
      if (rng.bernoulli(row / (row + alpha))) {
        ++indicator_sum;
      }
    }
    const Scalar shape = priors.alpha_shape +
                         static_cast<Scalar>(total_tables - indicator_sum);
    const Scalar rate = priors.alpha_rate - log_u_sum;
    alpha = std::max(rng.gamma(shape, rate), kConcentrationFloor);
  }
  {
    const auto customers = static_cast<Scalar>(top_tables);
    const Scalar eta = clamp_unit(rng.beta(gamma + 1.0, customers));
    const Scalar rate = priors.gamma_rate - std::log(eta);
    const Scalar odds = priors.gamma_shape + static_cast<Scalar>(K) - 1.0;
    const Scalar mix = odds / (odds + customers * rate);
    const Scalar shape = priors.gamma_shape + static_cast<Scalar>(K) -
                         (rng.bernoulli(mix) ? 0.0 : 1.0);
    gamma = std::max(rng.gamma(shape, rate), kConcentrationFloor);
  }
  if (ds) {
    std::vector<Scalar> grid_log(priors.rho_grid.size(), 0.0);
    Scalar weight_total = 0.0;
    for (const auto& point : priors.rho_grid) {
      weight_total += point.weight;
    }
    for (std::size_t g = 0; g < priors.rho_grid.size(); ++g) {
      const auto& point = priors.rho_grid[g];
      Scalar lp = std::log(point.weight / weight_total);
      for (int k = 0; k < K; ++k) {
        lp += log_beta_pdf(kap[static_cast<std::size_t>(k)], point.rho1,
                           point.rho2);
      }
      grid_log[g] = lp;
    }
    const Scalar top = *std::max_element(grid_log.begin(), grid_log.end());
    Vector grid_weights(static_cast<Index>(grid_log.size()));
    for (std::size_t g = 0; g < grid_log.size(); ++g) {
      grid_weights(static_cast<Index>(g)) = std::exp(grid_log[g] - top);
    }
    const auto pick = static_cast<std::size_t>(rng.categorical(grid_weights));
    rho1 = priors.rho_grid[pick].rho1;
    rho2 = priors.rho_grid[pick].rho2;
  }

  RegimePosterior next;
  next.z = std::move(z);
  next.w = std::move(w);
  next.regimes = K;
  next.beta.resize(K + 1);
  for (int k = 0; k < K; ++k) {
    next.beta(k) = beta[static_cast<std::size_t>(k)];
  }
  next.beta(K) = beta_rem;
  next.kappa = Eigen::Map<const Vector>(kap.data(), K);
  next.emissions = std::move(emit);
  next.alpha = alpha;
  next.gamma = gamma;
  next.rho1 = rho1;
  next.rho2 = rho2;
  next.log_likelihood_trace = state.log_likelihood_trace;
  next.validate();
  return next;
}

Scalar joint_log_probability(const RegimePosterior& state, const Vector& obs,
                             const Priors& priors,
                             const SweepOptions& options) {
  const auto T = obs.size();
  require(T >= 1, "joint_log_probability: empty observations");
  require(obs.allFinite(),
          "joint_log_probability: observations must be finite");
  require(static_cast<Index>(state.z.size()) == T,
          "joint_log_probability: state and observations disagree in length");
  state.validate();
  priors.validate();

  const bool ds = options.variant == RegimeVariant::Ds;
  const bool sticky = options.variant == RegimeVariant::Sticky;
  const Scalar tilde = sticky ? options.sticky_kappa : 0.0;
  const int K = static_cast<int>(state.regimes);
  const TransitionCounts counts = count_transitions(state.z, state.w, K);

  Scalar lp = 0.0;

  // stick-breaking density of the instantiated global weights
  Scalar remainder = 1.0;
  for (int k = 0; k < K; ++k) {
    const Scalar safe_rem = std::max(remainder, 1e-300);
    const Scalar v = clamp_unit(state.beta(k) / safe_rem);
    lp += std::log(state.gamma) + (state.gamma - 1.0) * std::log1p(-v) -
          std::log(safe_rem);
    remainder -= state.beta(k);
  }

  // initial state
  lp += std::log(std::max(state.beta(state.z[0]), 1e-300));

  // transition rows
  for (int j = 0; j < K; ++j) {
    const auto jj = static_cast<std::size_t>(j);
    if (ds) {
      if (counts.row[jj] > 0) {
        lp += std::lgamma(state.alpha) -
              std::lgamma(state.alpha + counts.row[jj]);
        for (int k = 0; k < K; ++k) {
          const int n = counts.n[jj][static_cast<std::size_t>(k)];
          if (n > 0) {
            const Scalar mass = state.alpha * state.beta(k);
            lp += std::lgamma(mass + n) - std::lgamma(mass);
          }
        }
      }
      lp += counts.persist[jj] * std::log(state.kappa(j)) +
            counts.sw[jj] * std::log1p(-state.kappa(j));
    } else {
      const int total = counts.row[jj] + counts.persist[jj];
      if (total > 0) {
        const Scalar conc = state.alpha + tilde;
        lp += std::lgamma(conc) - std::lgamma(conc + total);
        for (int k = 0; k < K; ++k) {
          const int n = counts.n[jj][static_cast<std::size_t>(k)];
          if (n > 0) {
            const Scalar mass =
                state.alpha * state.beta(k) + (j == k ? tilde : 0.0);
            lp += std::lgamma(mass + n) - std::lgamma(mass);
          }
        }
      }
    }
  }

  // persistence prior and its grid weight
  if (ds) {
    for (int k = 0; k < K; ++k) {
      lp += log_beta_pdf(clamp_unit(state.kappa(k)), state.rho1, state.rho2);
    }
    lp += normalized_grid_log_weight(priors, state.rho1, state.rho2);
  }

  // emission prior and likelihood
  for (const auto& emission : state.emissions) {
    lp += log_nig_pdf(emission.mu, emission.sigma2, priors.emission);
  }
  for (Index t = 0; t < T; ++t) {
    const auto& emission =
        state.emissions[static_cast<std::size_t>(state.z[static_cast<std::size_t>(t)])];
    lp += log_normal_pdf(obs(t), emission.mu, emission.sigma2);
  }

  // hyperpriors on the concentrations
  lp += log_gamma_pdf(state.alpha, priors.alpha_shape, priors.alpha_rate);
  lp += log_gamma_pdf(state.gamma, priors.gamma_shape, priors.gamma_rate);
  return lp;
}

SegmentationResult fit_segmentation(const Vector& obs,
                                    const SegmentationConfig& config,
                                    const Priors& priors) {
  return fit_segmentation(obs, config, priors, initial_state(obs, priors));
}

SegmentationResult fit_segmentation(const Vector& obs,
                                    const SegmentationConfig& config,
                                    const Priors& priors,
                                    const RegimePosterior& init) {
  require(obs.size() >= 10,
          "fit_segmentation: need at least ten observations");
  require(obs.allFinite(), "fit_segmentation: observations must be finite");
  require(config.sweeps >= 1, "fit_segmentation: sweeps must be positive");
  require(config.burn_in >= 0,
          "fit_segmentation: burn_in must be nonnegative");
  require(config.sweeps > config.burn_in,
          "fit_segmentation: need sweeps > burn_in");
  require(config.max_regimes >= 1,
          "fit_segmentation: max_regimes must be positive");
  require(std::isfinite(config.sticky_kappa) && config.sticky_kappa >= 0.0,
          "fit_segmentation: sticky_kappa must be nonnegative");
  priors.validate();
  init.validate();
  require(static_cast<Index>(init.z.size()) == obs.size(),
          "fit_segmentation: initial state and observations disagree");

  const SweepOptions options{config.variant, config.sticky_kappa,
                             config.max_regimes};
  RandomSource root(config.seed);
  RandomSource rng = root.substream("chain");

  SegmentationResult result;
  result.config = config;
  result.log_joint_trace.reserve(static_cast<std::size_t>(config.sweeps));
  result.regime_count_trace.reserve(static_cast<std::size_t>(config.sweeps));

  RegimePosterior current = init;
  bool have_map = false;
  for (Index sweep = 0; sweep < config.sweeps; ++sweep) {
    current = gibbs_sweep(current, obs, priors, rng, options);
    const Scalar score = joint_log_probability(current, obs, priors, options);
    if (!std::isfinite(score)) {
      throw std::runtime_error(
          "fit_segmentation: non-finite joint log probability");
    }
    result.log_joint_trace.push_back(score);
    result.regime_count_trace.push_back(current.regimes);
    if (sweep >= config.burn_in &&
        (!have_map || score > result.map_log_joint)) {
      result.map_state = current;
      result.map_log_joint = score;
      have_map = true;
    }
  }
  result.map_state.log_likelihood_trace = result.log_joint_trace;
  return result;
}

Scalar kl_gaussian(Scalar mu_i, Scalar mu_j, Scalar sigma2) {
  require(std::isfinite(sigma2) && sigma2 > 0.0,
          "kl_gaussian: sigma2 must be positive");
  const Scalar d = mu_i - mu_j;
  return d * d / (2.0 * sigma2);
}

RegimePosterior compress_regimes(const RegimePosterior& post,
                                 const Vector& obs, Scalar kl_threshold,
                                 Scalar min_mass, const Priors& priors) {
  post.validate();
  priors.validate();
  require(static_cast<Index>(post.z.size()) == obs.size(),
          "compress_regimes: state and observations disagree in length");
  require(obs.allFinite(), "compress_regimes: observations must be finite");
  require(std::isfinite(kl_threshold) && kl_threshold >= 0.0,
          "compress_regimes: kl_threshold must be nonnegative");
  require(std::isfinite(min_mass) && min_mass >= 0.0 && min_mass < 1.0,
          "compress_regimes: min_mass must lie in [0, 1)");

  std::vector<int> z = post.z;
  const std::vector<int>& w = post.w;
  int K = static_cast<int>(post.regimes);
  std::vector<Scalar> beta(post.beta.data(), post.beta.data() + K);
  const Scalar beta_rem = post.beta(K);
  std::vector<Scalar> kap(post.kappa.data(), post.kappa.data() + K);
  std::vector<GaussianEmission> emit = post.emissions;

  const auto divergence = [&](const std::vector<MomentStats>& stats, int i,
                              int j) {
    const auto& a = stats[static_cast<std::size_t>(i)];
    const auto& b = stats[static_cast<std::size_t>(j)];
    const Scalar pooled =
        (a.count * emit[static_cast<std::size_t>(i)].sigma2 +
         b.count * emit[static_cast<std::size_t>(j)].sigma2) /
        (a.count + b.count);
    return kl_gaussian(emit[static_cast<std::size_t>(i)].mu,
                       emit[static_cast<std::size_t>(j)].mu, pooled);
  };

  const auto merge = [&](int keep, int drop) {
    for (auto& label : z) {
      if (label == drop) {
        label = keep;
      } else if (label > drop) {
        --label;
      }
    }
    beta[static_cast<std::size_t>(keep)] +=
        beta[static_cast<std::size_t>(drop)];
    beta.erase(beta.begin() + drop);
    kap.erase(kap.begin() + drop);
    emit.erase(emit.begin() + drop);
    --K;
    // deterministic refits for the merged regime
    const std::vector<MomentStats> stats = regime_moments(z, obs, K);
    const auto& s = stats[static_cast<std::size_t>(keep)];
    const NigPosterior nig =
        nig_posterior(priors.emission, s.count, s.mean, s.ssd);
    require(nig.a > 1.0, "compress_regimes: posterior variance undefined");
    emit[static_cast<std::size_t>(keep)] = {nig.m, nig.b / (nig.a - 1.0)};
    Scalar persist = 0.0;
    Scalar sw = 0.0;
    for (std::size_t t = 1; t < z.size(); ++t) {
      if (z[t - 1] == keep) {
        (w[t] == 1 ? persist : sw) += 1.0;
      }
    }
    kap[static_cast<std::size_t>(keep)] = clamp_unit(
        (post.rho1 + persist) / (post.rho1 + post.rho2 + persist + sw));
  };

  // phase 1: absorb near-duplicate emission profiles
  while (K >= 2) {
    const std::vector<MomentStats> stats = regime_moments(z, obs, K);
    Scalar best = std::numeric_limits<Scalar>::infinity();
    int bi = -1;
    int bj = -1;
    for (int i = 0; i < K; ++i) {
      for (int j = i + 1; j < K; ++j) {
        const Scalar d = divergence(stats, i, j);
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    }
    if (!(best < kl_threshold)) {
      break;
    }
    merge(bi, bj);
  }

  // phase 2: absorb regimes below the occupancy floor
  while (K >= 2) {
    const std::vector<MomentStats> stats = regime_moments(z, obs, K);
    const auto total = static_cast<Scalar>(z.size());
    int small = -1;
    Scalar small_count = std::numeric_limits<Scalar>::infinity();
    for (int k = 0; k < K; ++k) {
      const Scalar count = stats[static_cast<std::size_t>(k)].count;
      if (count / total < min_mass && count < small_count) {
        small = k;
        small_count = count;
      }
    }
    if (small < 0) {
      break;
    }
    int nearest = -1;
    Scalar best = std::numeric_limits<Scalar>::infinity();
    for (int k = 0; k < K; ++k) {
      if (k == small) {
        continue;
      }
      const Scalar d = divergence(stats, small, k);
      if (d < best) {
        best = d;
        nearest = k;
      }
    }
    merge(std::min(small, nearest), std::max(small, nearest));
  }

  RegimePosterior out;
  out.z = std::move(z);
  out.w = post.w;
  out.regimes = K;
  out.beta.resize(K + 1);
  for (int k = 0; k < K; ++k) {
    out.beta(k) = beta[static_cast<std::size_t>(k)];
  }
  out.beta(K) = beta_rem;
  out.kappa = Eigen::Map<const Vector>(kap.data(), K);
  out.emissions = std::move(emit);
  out.alpha = post.alpha;
  out.gamma = post.gamma;
  out.rho1 = post.rho1;
  out.rho2 = post.rho2;
  out.log_likelihood_trace = post.log_likelihood_trace;
  out.validate();
  return out;
}

Scalar expected_self_transition(RegimeVariant variant,
                                const SelfTransitionParams& params) {
  require(params.beta_j >= 0.0, "expected_self_transition: missing beta_j");
  switch (variant) {
    case RegimeVariant::Hdp:
      return params.beta_j;
    case RegimeVariant::Sticky:
      require(params.alpha > 0.0, "expected_self_transition: missing alpha");
      require(params.kappa >= 0.0, "expected_self_transition: missing kappa");
      return (params.alpha * params.beta_j + params.kappa) /
             (params.alpha + params.kappa);
    case RegimeVariant::Ds: {
      require(params.rho1 > 0.0, "expected_self_transition: missing rho1");
      require(params.rho2 > 0.0, "expected_self_transition: missing rho2");
      const Scalar mean_kappa = params.rho1 / (params.rho1 + params.rho2);
      return mean_kappa + (1.0 - mean_kappa) * params.beta_j;
    }
  }
  throw std::invalid_argument("expected_self_transition: unknown variant");
}

}  // namespace regimecast
