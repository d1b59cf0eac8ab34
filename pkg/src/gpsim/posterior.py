"""Posterior quantities at a fixed scale ``c``, computed in the eigenbasis.

With prior covariance ``c U`` and unit noise, the posterior for coefficient
``j`` is normal with mean ``w_j Y~_j`` and variance ``w_j``, where
``w_j = c lam_j / (1 + c lam_j)``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .rng import derive_seed, make_rng

_MC_CHUNK = 1 << 22  # normals per chunk; bounds peak memory at ~32 MB


def shrinkage_weights(prior, c):
    if c < 0:
        raise ValueError("scale c must be nonnegative")
    cl = c * prior.eigenvalues
    return cl / (1.0 + cl)


def posterior_mean(prior, c, ytilde):
    """Posterior mean coefficients ``w_j Y~_j``."""
    ytilde = np.asarray(ytilde, dtype=float)
    if ytilde.shape[-1] != prior.dim:
        raise ValueError("observation length does not match prior dimension")
    return shrinkage_weights(prior, c) * ytilde


def posterior_total_variance(prior, c):
    """``s_n^2(c) = sum_j w_j``, the trace of the posterior covariance."""
    return float(shrinkage_weights(prior, c).sum())


def posterior_pointwise_variance(prior, c, i=None):
    """Posterior variance at design index ``i`` (0-based), or all indices."""
    var = prior.basis.squared_apply(shrinkage_weights(prior, c))
    # FFT round-off can leave tiny negatives where the variance is ~0
    var = np.clip(var, 0.0, None)
    if i is None:
        return var
    if not 0 <= i < prior.dim:
        raise IndexError(f"design index {i} out of range")
    return float(var[i])


@dataclass(frozen=True)
class RadiusMethod:
    """How to compute the quantile of ``N_n(c) = sum_j w_j Z_j^2``."""

    kind: str = "monte_carlo"
    mc_draws: int = 100_000
    mc_seed: int = 0

    def __post_init__(self):
        if self.kind not in ("monte_carlo", "satterthwaite"):
            raise ValueError(f"unknown radius method {self.kind!r}")
        if self.kind == "monte_carlo" and self.mc_draws < 10_000:
            raise ValueError("monte_carlo radius needs at least 10^4 draws")


MONTE_CARLO = RadiusMethod()
SATTERTHWAITE = RadiusMethod("satterthwaite")


def weighted_chi2_quantile(w, eta, method=MONTE_CARLO, seed_parts=()):
    """``eta``-quantile of ``sum_j w_j Z_j^2`` for nonnegative weights ``w``."""
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    w = np.asarray(w, dtype=float)
    w = w[w > 0]
    if w.size == 0:
        return 0.0
    if method.kind == "satterthwaite":
        s1, s2 = w.sum(), (w * w).sum()
        k, g = s1 * s1 / s2, s2 / s1
        return float(g * stats.chi2.ppf(eta, k))
    rng = make_rng(derive_seed("radius", method.mc_seed, *seed_parts, eta))
    draws = np.empty(method.mc_draws)
    rows = max(1, _MC_CHUNK // w.size)
    for start in range(0, method.mc_draws, rows):
        stop = min(start + rows, method.mc_draws)
        z = rng.standard_normal((stop - start, w.size))
        draws[start:stop] = (z * z) @ w
    # type-1 empirical quantile: order statistic ceil(eta * draws)
    k = int(np.ceil(eta * method.mc_draws)) - 1
    return float(np.partition(draws, k)[k])


def credible_radius(prior, c, eta, method=MONTE_CARLO):
    """``r_n(c, eta)``: the ``eta``-quantile of ``sqrt(N_n(c))``."""
    if c <= 0:
        raise ValueError("scale c must be positive")
    q = weighted_chi2_quantile(shrinkage_weights(prior, c), eta, method, seed_parts=(float(c),))
    return float(np.sqrt(q))


def normal_quantile(eta):
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    return float(stats.norm.ppf(0.5 * (1.0 + eta)))


def pointwise_radius(prior, c, eta, i=None):
    """``z_{(1+eta)/2}`` times the posterior standard deviation at index ``i``."""
    return normal_quantile(eta) * np.sqrt(posterior_pointwise_variance(prior, c, i))


@dataclass
class PosteriorSummary:
    c: float
    mean_coeffs: np.ndarray
    total_variance: float
    pointwise_variance: np.ndarray
    radius_cache: dict = field(default_factory=dict)

    def radius(self, prior, eta, method=MONTE_CARLO):
        key = (eta, method)
        if key not in self.radius_cache:
            self.radius_cache[key] = credible_radius(prior, self.c, eta, method)
        return self.radius_cache[key]


def summarize(prior, c, ytilde):
    return PosteriorSummary(
        c=float(c),
        mean_coeffs=posterior_mean(prior, c, ytilde),
        total_variance=posterior_total_variance(prior, c),
        pointwise_variance=posterior_pointwise_variance(prior, c),
    )
