#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "regimecast/rng.hpp"
#include "regimecast/types.hpp"

namespace regimecast {

/// Transition-prior family for the latent regime chain.
///   Hdp:    pi_j ~ DP(alpha beta) — no persistence bias.
///   Sticky: pi_j ~ DP(alpha beta + kappa delta_j) — shared fixed stickiness.
///   Ds:     kappa_j ~ Beta(rho1, rho2), pi_j = kappa_j delta_j +
///           (1 - kappa_j) DP(alpha beta) — per-regime persistence,
///           disentangled from the transition concentration.
enum class RegimeVariant { Hdp, Sticky, Ds };

RegimeVariant variant_from_string(const std::string& name);
std::string variant_name(RegimeVariant variant);

/// Conjugate Normal-Inverse-Gamma prior for a Gaussian emission:
/// sigma^2 ~ InvGamma(a0, b0), mu | sigma^2 ~ N(m0, sigma^2 / k0).
struct NormalInverseGamma {
  Scalar m0 = 0.0;
  Scalar k0 = 0.01;
  Scalar a0 = 2.0;  ///< > 1 so the prior emission variance is finite
  Scalar b0 = 1.0;
};

/// One candidate (rho1, rho2) pair of the grid posterior for the Beta
/// persistence prior.
struct RhoGridPoint {
  Scalar rho1 = 1.0;
  Scalar rho2 = 1.0;
  Scalar weight = 1.0;
};

/// Hyperpriors of the hierarchy: Gamma priors on the two concentrations, a
/// finite weighted grid for (rho1, rho2), and the emission base measure.
struct Priors {
  Scalar gamma_shape = 1.0;
  Scalar gamma_rate = 1.0;
  Scalar alpha_shape = 1.0;
  Scalar alpha_rate = 1.0;
  std::vector<RhoGridPoint> rho_grid;  ///< normalized by validate()/defaults
  NormalInverseGamma emission;

  /// Generic defaults: Gamma(1,1) concentrations, uniform {0.5,1,2,5,10}^2
  /// grid, standard emission base.
  static Priors defaults();

  void validate() const;
};

/// Defaults with the emission base measure matched to the series scale:
/// m0 = mean(obs), k0 = 0.01, a0 = 2, b0 = var(obs)/2 (1/2 when the series
/// is constant).
Priors default_priors(const Vector& obs);

struct GaussianEmission {
  Scalar mu = 0.0;
  Scalar sigma2 = 1.0;
};

/// One posterior sample (or the MAP sample) of the segmentation model.
/// Invariants, checked by validate():
///   - beta has K+1 nonnegative entries summing to 1 within 1e-12 (the last
///     entry is the unbroken remainder mass);
///   - every label in z lies in [0, K) and every regime owns >= 1 point;
///   - kappa in [0,1], sigma2 > 0, w_t = 1 implies z_t = z_{t-1}, w_0 = 0.
struct RegimePosterior {
  std::vector<int> z;  ///< T regime labels
  std::vector<int> w;  ///< T persistence indicators
  Vector beta;         ///< K+1 global weights, last = remainder
  Vector kappa;        ///< K self-persistence probabilities
  std::vector<GaussianEmission> emissions;  ///< K
  Scalar alpha = 1.0;
  Scalar gamma = 1.0;
  Scalar rho1 = 1.0;
  Scalar rho2 = 1.0;
  Index regimes = 0;  ///< K
  std::vector<Scalar> log_likelihood_trace;  ///< per-sweep joint values

  void validate() const;
};

/// Variant selector and guards for one Gibbs sweep.
struct SweepOptions {
  RegimeVariant variant = RegimeVariant::Ds;
  Scalar sticky_kappa = 1.0;  ///< fixed stickiness of the Sticky variant
  Index max_regimes = 50;     ///< cap on instantiated regimes
};

/// GEM stick-breaking weights: v_k ~ Beta(1, gamma),
/// beta_k = v_k prod_{l<k} (1 - v_l); entry K is the unbroken remainder, so
/// the K+1 weights sum to 1 exactly.
Vector stick_breaking(Scalar gamma, Index truncation, RandomSource& rng);

/// Single-regime starting state: all observations in regime 0, beta split
/// evenly with the remainder, hyperparameters at 1, emission at the
/// posterior mean given all observations.  Deterministic.
RegimePosterior initial_state(const Vector& obs, const Priors& priors);

/// One full sweep of the direct-assignment sampler, in order:
///   1. jointly resample (z_t, w_t) for every t against both neighbors,
///      instantiating new regimes from the remainder mass (empty regimes are
///      pruned and labels compacted);
///   2. kappa_j ~ Beta(rho1 + persist_j, rho2 + switch_j)      [Ds]
///   3. beta via table-count auxiliaries and Dirichlet conjugacy;
///   4. emissions from their Normal-Inverse-Gamma posteriors;
///   5. alpha and gamma by auxiliary-variable Gamma updates and (rho1, rho2)
///      from the grid posterior                                 [per variant]
/// The returned state satisfies all RegimePosterior invariants.
RegimePosterior gibbs_sweep(const RegimePosterior& state, const Vector& obs,
                            const Priors& priors, RandomSource& rng,
                            const SweepOptions& options = {});

/// Joint log probability of one instantiated state (unnormalized in the
/// hyperprior constants): GEM density of beta, initial-state mass, the
/// marginal row-partition mass of the transitions, persistence terms,
/// emission priors and likelihood, and hyperprior densities.  Used for MAP
/// selection across sweeps.
Scalar joint_log_probability(const RegimePosterior& state, const Vector& obs,
                             const Priors& priors,
                             const SweepOptions& options = {});

struct SegmentationConfig {
  RegimeVariant variant = RegimeVariant::Ds;
  Index sweeps = 1500;
  Index burn_in = 500;
  std::uint64_t seed = 1;
  Scalar sticky_kappa = 1.0;
  Index max_regimes = 50;
};

struct SegmentationResult {
  RegimePosterior map_state;  ///< highest-scoring post-burn-in sample
  Scalar map_log_joint = 0.0;
  std::vector<Scalar> log_joint_trace;   ///< one value per sweep
  std::vector<Index> regime_count_trace; ///< active K per sweep
  SegmentationConfig config;
};

/// Runs the sampler for config.sweeps sweeps from the single-regime start
/// (or `init` when given) and returns the maximum-a-posteriori sample after
/// burn-in plus the full trace.  Throws for T < 10, sweeps <= burn_in, or
/// non-finite observations.
SegmentationResult fit_segmentation(const Vector& obs,
                                    const SegmentationConfig& config,
                                    const Priors& priors);
SegmentationResult fit_segmentation(const Vector& obs,
                                    const SegmentationConfig& config,
                                    const Priors& priors,
                                    const RegimePosterior& init);

/// Divergence between two equal-variance Gaussians:
/// (mu_i - mu_j)^2 / (2 sigma2).  Throws for sigma2 <= 0.
Scalar kl_gaussian(Scalar mu_i, Scalar mu_j, Scalar sigma2);

/// Post-hoc regime compression: while the closest pair of regimes (by the
/// pooled-variance Gaussian divergence) lies below kl_threshold, merge it;
/// then absorb regimes holding fewer than min_mass of the observations into
/// their nearest neighbor.  Merged regimes get deterministic posterior-mean
/// emission refits from their members; labels are compacted; the input
/// posterior is not modified.  K never grows and unmerged indices keep
/// their assignments.
RegimePosterior compress_regimes(const RegimePosterior& post, const Vector& obs,
                                 Scalar kl_threshold, Scalar min_mass,
                                 const Priors& priors);

/// Parameters for the closed-form expected self-transition of each variant.
struct SelfTransitionParams {
  Scalar beta_j = -1.0;  ///< all variants
  Scalar alpha = -1.0;   ///< sticky
  Scalar kappa = -1.0;   ///< sticky
  Scalar rho1 = -1.0;    ///< ds
  Scalar rho2 = -1.0;    ///< ds
};

/// E[pi_jj] under each prior: beta_j (hdp); (alpha beta_j + kappa) /
/// (alpha + kappa) (sticky); r + (1-r) beta_j with r = rho1/(rho1+rho2)
/// (ds).  Throws when a required parameter for the variant is missing.
Scalar expected_self_transition(RegimeVariant variant,
                                const SelfTransitionParams& params);

}  // namespace regimecast
