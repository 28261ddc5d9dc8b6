#pragma once

#include "regimecast/types.hpp"

namespace regimecast::stats {

/// Standard normal density.
Scalar norm_pdf(Scalar z);

/// Standard normal CDF.
Scalar norm_cdf(Scalar z);

/// Standard normal quantile (inverse CDF); p in (0, 1).
Scalar norm_quantile(Scalar p);

/// log Gamma(x).
Scalar log_gamma(Scalar x);

/// log Beta(a, b).
Scalar log_beta(Scalar a, Scalar b);

/// Regularized lower incomplete gamma P(a, x).
Scalar reg_lower_gamma(Scalar a, Scalar x);

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
Scalar reg_upper_gamma(Scalar a, Scalar x);

/// Regularized incomplete beta I_x(a, b).
Scalar reg_inc_beta(Scalar a, Scalar b, Scalar x);

/// Survival function of the chi-square distribution with df degrees of freedom.
Scalar chi_square_sf(Scalar x, Scalar df);

/// Survival function of the F distribution with (d1, d2) degrees of freedom.
Scalar f_sf(Scalar f, Scalar d1, Scalar d2);

/// CDF of the studentized range of k iid standard normals (infinite df):
/// P(range <= q) = k * Integral phi(z) * (Phi(z) - Phi(z - q))^(k-1) dz.
Scalar studentized_range_cdf(Scalar q, int k);

/// log density of Beta(a, b) at x in (0, 1).
Scalar log_beta_pdf(Scalar x, Scalar a, Scalar b);

/// log density of Gamma(shape, rate) at x > 0.
Scalar log_gamma_pdf(Scalar x, Scalar shape, Scalar rate);

/// log density of N(mean, var) at x.
Scalar log_normal_pdf(Scalar x, Scalar mean, Scalar var);

/// log density of the Student-t distribution with df degrees of freedom,
/// location loc and squared scale scale2, evaluated at x.
Scalar log_student_t_pdf(Scalar x, Scalar df, Scalar loc, Scalar scale2);

}  // namespace regimecast::stats
