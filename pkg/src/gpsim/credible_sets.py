"""Credible balls, hierarchical-Bayes unions of balls, and pointwise intervals.

Balls live in coefficient space; by Parseval the Euclidean distance there is
the same as between grid-value vectors.
"""

from dataclasses import dataclass

import numpy as np

from .posterior import (
    MONTE_CARLO,
    credible_radius,
    normal_quantile,
    posterior_mean,
    posterior_pointwise_variance,
)
from .scale_selection import HBPrior, hb_posterior, select_scale


def _check_dim(expected, f):
    f = np.asarray(f, dtype=float)
    if f.shape[-1] != expected:
        raise ValueError(f"vector of length {f.shape[-1]} does not match dimension {expected}")
    return f


def _check_levels(M, *etas):
    if M < 0:
        raise ValueError("blow-up factor M must be nonnegative")
    for eta in etas:
        if not 0 < eta < 1:
            raise ValueError("credibility levels must lie in (0, 1)")


@dataclass
class CredibleBall:
    center: np.ndarray
    radius: float
    c_hat: float
    M: float
    eta: float

    @property
    def base_radius(self):
        """``r_n(c_hat, eta)`` before the blow-up by ``M``."""
        return self.radius / self.M if self.M else np.nan

    def to_record(self):
        return {"type": "ball", "c": self.c_hat, "M": self.M, "eta": self.eta, "radius": self.radius}


def eb_credible_ball(prior, ytilde, kind, eta=0.95, M=1.0, radius_method=MONTE_CARLO, interval=None):
    """Ball of radius ``M r_n(c_hat, eta)`` around the posterior mean at ``c_hat``."""
    _check_levels(M, eta)
    c_hat = select_scale(prior, ytilde, kind, interval).c_hat
    return ball_at_scale(prior, ytilde, c_hat, eta, M, radius_method)


def ball_at_scale(prior, ytilde, c, eta=0.95, M=1.0, radius_method=MONTE_CARLO):
    _check_levels(M, eta)
    r = credible_radius(prior, c, eta, radius_method)
    return CredibleBall(posterior_mean(prior, c, ytilde), M * r, float(c), float(M), float(eta))


def ball_contains(ball, f):
    """Strict membership ``||f - center|| < radius``."""
    f = _check_dim(len(ball.center), f)
    return bool(np.linalg.norm(f - ball.center) < ball.radius)


@dataclass
class HBCredibleSet:
    c_lo: float
    c_hi: float
    scales: np.ndarray
    centers: np.ndarray
    radii: np.ndarray
    M: float
    eta1: float
    eta2: float

    def distances(self, f):
        f = _check_dim(self.centers.shape[1], f)
        return np.linalg.norm(f - self.centers, axis=1)

    def to_record(self):
        return {
            "type": "hb_union",
            "c": [self.c_lo, self.c_hi],
            "M": self.M,
            "eta1": self.eta1,
            "eta2": self.eta2,
            "radius": self.radii.tolist(),
        }


def hb_scale_subgrid(c_lo, c_hi, size):
    if c_lo == c_hi or size == 1:
        return np.array([c_lo]) if c_lo == c_hi else np.array([np.sqrt(c_lo * c_hi)])
    g = np.geomspace(c_lo, c_hi, size)
    g[0], g[-1] = c_lo, c_hi
    return g


def hb_credible_set(
    prior,
    ytilde,
    hb=None,
    eta1=0.95,
    eta2=0.95,
    M=1.0,
    subgrid_size=32,
    radius_method=MONTE_CARLO,
    posterior=None,
):
    """Union of balls over scales between the central ``eta1`` posterior quantiles of ``c``."""
    _check_levels(M, eta1, eta2)
    if subgrid_size < 1:
        raise ValueError("subgrid_size must be at least 1")
    post = posterior or hb_posterior(prior, ytilde, hb or HBPrior())
    c_lo, c_hi = post.quantile([(1 - eta1) / 2, (1 + eta1) / 2])
    scales = hb_scale_subgrid(float(c_lo), float(c_hi), subgrid_size)
    centers = np.stack([posterior_mean(prior, c, ytilde) for c in scales])
    radii = M * np.array([credible_radius(prior, c, eta2, radius_method) for c in scales])
    return HBCredibleSet(float(c_lo), float(c_hi), scales, centers, radii, float(M), float(eta1), float(eta2))


def hb_contains(hbset, f):
    """True iff some scale in the sub-grid puts ``f`` strictly inside its ball."""
    return bool(np.any(hbset.distances(f) < hbset.radii))


def hb_witness_scale(hbset, f):
    """Scale whose ball contains ``f`` with the most room to spare, or None."""
    slack = hbset.radii - hbset.distances(f)
    k = int(np.argmax(slack))
    return float(hbset.scales[k]) if slack[k] > 0 else None


def set_diameter(cset):
    """Ball: ``2 radius``.  Union: the triangle-inequality bound over scale pairs."""
    if isinstance(cset, CredibleBall):
        return 2.0 * cset.radius
    C = cset.centers
    sq = (C * C).sum(axis=1)
    gram = C @ C.T
    dist = np.sqrt(np.clip(sq[:, None] + sq[None, :] - 2.0 * gram, 0.0, None))
    np.fill_diagonal(dist, 0.0)
    r = cset.radii
    return float(np.max(dist + r[:, None] + r[None, :]))


@dataclass
class IntervalFamily:
    """Pointwise intervals at the design points, possibly a union over scales.

    ``centers`` and ``half_widths`` have one row per scale (one row for an EB
    source); ``in_J`` marks the design indices counted by
    :func:`fraction_covered`.
    """

    source: str
    scales: np.ndarray
    centers: np.ndarray
    half_widths: np.ndarray
    in_J: np.ndarray
    C: float
    M: float
    eta: float

    def covers(self, truth):
        truth = _check_dim(self.centers.shape[1], truth)
        return np.any(np.abs(truth - self.centers) < self.half_widths, axis=0)


def indices_J(pointwise_var, C):
    """Design points whose variance is at least ``C/N`` times the total."""
    N = len(pointwise_var)
    return pointwise_var >= (C / N) * pointwise_var.sum()


def pointwise_intervals(prior, ytilde, source, eta=0.95, M=1.0, C=0.5, interval=None, hb=None, eta1=0.95, subgrid_size=32):
    """Intervals ``|f(x_i) - fhat_c(x_i)| < M r_n(c, eta, x_i)``.

    ``source`` is ``'lik_eb'`` / ``'risk_eb'`` (single selected scale), a
    positive float (that scale), or ``'hb'`` (union over the sub-grid between
    the central ``eta1`` posterior quantiles; ``J`` is then computed at the
    geometric middle of that range).
    """
    _check_levels(M, eta)
    if C < 0:
        raise ValueError("C must be nonnegative")
    if isinstance(source, str) and source == "hb":
        post = hb_posterior(prior, ytilde, hb or HBPrior())
        c_lo, c_hi = post.quantile([(1 - eta1) / 2, (1 + eta1) / 2])
        scales = hb_scale_subgrid(float(c_lo), float(c_hi), subgrid_size)
        c_mid = float(np.sqrt(c_lo * c_hi))
    else:
        if isinstance(source, str):
            c_mid = select_scale(prior, ytilde, source, interval).c_hat
        else:
            c_mid = float(source)
        scales = np.array([c_mid])
    z = normal_quantile(eta)
    centers = np.stack([prior.basis.from_coefficients(posterior_mean(prior, c, ytilde)) for c in scales])
    variances = np.stack([posterior_pointwise_variance(prior, c) for c in scales])
    half = M * z * np.sqrt(variances)
    var_mid = variances[0] if len(scales) == 1 else posterior_pointwise_variance(prior, c_mid)
    label = source if isinstance(source, str) else "fixed"
    return IntervalFamily(label, scales, centers, half, indices_J(var_mid, C), float(C), float(M), float(eta))


def fraction_covered(intervals, truth):
    """Share of all ``N`` design points that lie in ``J`` and are covered."""
    covered = intervals.covers(truth) & intervals.in_J
    return float(covered.sum()) / intervals.centers.shape[1]
