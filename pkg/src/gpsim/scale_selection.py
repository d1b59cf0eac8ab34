"""Choosing the prior scale ``c``: empirical Bayes and hierarchical Bayes.

Both empirical-Bayes criteria are sums over eigen-coordinates, so they are
evaluated for a whole grid of scales at once.  Every function that accepts a
scale ``c`` also accepts an array of scales and returns one value per scale.
"""

from dataclasses import dataclass

import numpy as np
from scipy import integrate

EB_METHODS = ("lik_eb", "risk_eb")
METHODS = EB_METHODS + ("hb",)
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class ScaleInterval:
    lo: float
    hi: float
    size: int = 400

    def __post_init__(self):
        if not 0 < self.lo <= self.hi:
            raise ValueError("scale interval needs 0 < lo <= hi")
        if self.size < 2:
            raise ValueError("scale grid needs at least two points")

    @property
    def grid(self):
        g = np.geomspace(self.lo, self.hi, self.size)
        g[0], g[-1] = self.lo, self.hi
        return g

    def contains(self, c):
        return self.lo <= c <= self.hi


def scale_interval(prior, size=400):
    """``[log N / N, N^{m-1}]`` with ``N`` the total number of coordinates.

    In 2-D, ``N = n^2`` and the upper end ``N^{m-1} = n^{2m-2}``.
    """
    N = prior.dim
    if N < 2:
        raise ValueError("the default scale interval needs at least two coordinates")
    return ScaleInterval(np.log(N) / N, float(N) ** (prior.m - 1.0), size)


def _scaled(prior, c):
    c = np.asarray(c, dtype=float)
    if np.any(c <= 0):
        raise ValueError("scale c must be positive")
    return c[..., None] * prior.eigenvalues


def _as_result(value):
    return float(value) if np.ndim(value) == 0 else value


def likelihood_criterion(prior, ytilde, c):
    """``log det(I + cU) + Y^T (I + cU)^{-1} Y`` in eigen-coordinates."""
    cl = _scaled(prior, c)
    val = (np.log1p(cl) + np.asarray(ytilde) ** 2 / (1.0 + cl)).sum(axis=-1)
    return _as_result(val)


def risk_criterion(prior, ytilde, c):
    """Unbiased estimate of the quadratic risk of the posterior mean, up to ``N``."""
    cl = _scaled(prior, c)
    val = ((cl * cl - 1.0 + np.asarray(ytilde) ** 2) / (1.0 + cl) ** 2).sum(axis=-1)
    return _as_result(val)


CRITERIA = {"lik_eb": likelihood_criterion, "risk_eb": risk_criterion}


@dataclass
class ScaleEstimate:
    c_hat: float
    method: str
    grid: np.ndarray
    values: np.ndarray

    @property
    def criterion_trace(self):
        return list(zip(self.grid.tolist(), self.values.tolist()))


def golden_section(fun, a, b, tol=1e-10, max_iter=200):
    """Minimize a unimodal scalar function on ``[a, b]``."""
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = fun(x1), fun(x2)
    for _ in range(max_iter):
        if b - a <= tol * max(1.0, abs(a) + abs(b)):
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = fun(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = fun(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def refined_argmin(fun, grid, values):
    """Grid argmin (first index on ties) refined inside its bracketing cell.

    The refinement searches ``log c`` between the neighbouring grid points and
    keeps the grid point unless the refined value is strictly smaller.
    """
    k = int(np.argmin(values))
    best_c, best_v = float(grid[k]), float(values[k])
    if len(grid) < 2:
        return best_c, best_v
    a = np.log(grid[max(k - 1, 0)])
    b = np.log(grid[min(k + 1, len(grid) - 1)])
    u, v = golden_section(lambda u: fun(np.exp(u)), a, b)
    if v < best_v:
        c = float(np.clip(np.exp(u), grid[0], grid[-1]))
        return c, float(fun(c))
    return best_c, best_v


def select_scale(prior, ytilde, kind, interval=None):
    """Empirical-Bayes scale: refined argmin of the chosen criterion over ``interval``."""
    if kind not in CRITERIA:
        raise ValueError(f"unknown empirical Bayes method {kind!r}")
    interval = interval or scale_interval(prior)
    crit = CRITERIA[kind]
    grid = interval.grid
    values = crit(prior, ytilde, grid)
    c_hat, _ = refined_argmin(lambda c: crit(prior, ytilde, c), grid, values)
    return ScaleEstimate(c_hat, kind, grid, values)


# ---------------------------------------------------------------------------
# Bias/variance decomposition with known truth
# ---------------------------------------------------------------------------


@dataclass
class CriterionDecomposition:
    c: object
    d1: object
    d2: object
    r1: object
    r2: object
    kind: str

    @property
    def d(self):
        return self.d1 + self.d2

    @property
    def r(self):
        return self.r1 + self.r2


def decompose_criterion(prior, f_true, noise, c, kind):
    """Deterministic parts ``D1, D2`` and zero-mean remainders ``R1, R2``.

    Raw criteria are recovered as ``D1+D2+R1+R2+sum(Z^2-1)`` for the risk
    kind and the same plus ``N`` for the likelihood kind.
    """
    f = np.asarray(f_true, dtype=float)
    z = np.asarray(noise, dtype=float)
    if f.shape[-1] != prior.dim or z.shape[-1] != prior.dim:
        raise ValueError("truth and noise must match the prior dimension")
    cl = _scaled(prior, c)
    inv = 1.0 / (1.0 + cl)
    z2m1 = z * z - 1.0
    if kind in ("risk", "risk_eb"):
        inv2 = inv * inv
        d1 = (f * f * inv2).sum(axis=-1)
        d2 = (cl * cl * inv2).sum(axis=-1)
        r1 = 2.0 * (z * f * inv2).sum(axis=-1)
        r2 = (z2m1 * (inv2 - 1.0)).sum(axis=-1)
        kind = "risk"
    elif kind in ("likelihood", "lik_eb"):
        d1 = (f * f * inv).sum(axis=-1)
        d2 = (np.log1p(cl) - cl * inv).sum(axis=-1)
        r1 = 2.0 * (z * f * inv).sum(axis=-1)
        r2 = -(z2m1 * cl * inv).sum(axis=-1)
        kind = "likelihood"
    else:
        raise ValueError(f"unknown criterion kind {kind!r}")
    parts = [_as_result(p) for p in (d1, d2, r1, r2)]
    return CriterionDecomposition(c, *parts, kind)


def d1_term(prior, f_true, c, kind):
    return decompose_criterion(prior, f_true, np.zeros(prior.dim), c, kind).d1


def d2_term(prior, c, kind):
    return decompose_criterion(prior, np.zeros(prior.dim), np.zeros(prior.dim), c, kind).d2


def d_term(prior, f_true, c, kind):
    """``D_n(c, f) = D1 + D2``, the deterministic part of a criterion."""
    return decompose_criterion(prior, f_true, np.zeros(prior.dim), c, kind).d


def som_constant(gamma, nu, m):
    """``C_{gamma,nu,m} = int_0^inf u^gamma / (u^m + 1)^nu du`` by quadrature."""
    if not (gamma > -1 and nu * m - gamma > 1):
        raise ValueError("integral diverges for these exponents")
    val, _ = integrate.quad(lambda u: u**gamma / (u**m + 1.0) ** nu, 0, np.inf, limit=200)
    return val


# ---------------------------------------------------------------------------
# Hierarchical Bayes
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HBPrior:
    """Inverse-gamma(kappa, lambda) hyperprior on ``c``, truncated to ``support``."""

    kappa: float = 1.0
    lam: float = 1.0
    support: ScaleInterval = None

    def __post_init__(self):
        if self.kappa <= 0 or self.lam <= 0:
            raise ValueError("kappa and lambda must be positive")

    def interval(self, prior):
        return self.support or scale_interval(prior)


def hb_log_density(prior, ytilde, hb, c):
    """Unnormalized log posterior density of ``c`` (density w.r.t. ``dc``)."""
    support = hb.interval(prior)
    c_arr = np.asarray(c, dtype=float)
    tol = 1e-12 * support.hi
    if np.any(c_arr < support.lo * (1 - 1e-12)) or np.any(c_arr > support.hi + tol):
        raise ValueError("scale outside the hyperprior support")
    val = -0.5 * likelihood_criterion(prior, ytilde, c_arr) - (1.0 + hb.kappa) * np.log(c_arr) - hb.lam / c_arr
    return _as_result(val)


@dataclass
class HBPosterior:
    """Grid representation of the posterior of ``c``; ``cdf`` is over ``grid``."""

    grid: np.ndarray
    log_density: np.ndarray
    cdf: np.ndarray

    def quantile(self, p):
        p = np.atleast_1d(np.asarray(p, dtype=float))
        if np.any((p <= 0) | (p >= 1)):
            raise ValueError("probabilities must lie in (0, 1)")
        u = np.log(self.grid)
        k = np.clip(np.searchsorted(self.cdf, p, side="left"), 1, len(u) - 1)
        lo, hi = self.cdf[k - 1], self.cdf[k]
        t = np.where(hi > lo, (p - lo) / np.where(hi > lo, hi - lo, 1.0), 0.0)
        return np.exp(u[k - 1] + t * (u[k] - u[k - 1]))

    def cdf_at(self, c):
        return np.interp(np.log(c), np.log(self.grid), self.cdf)

    def mass(self, a, b):
        """Posterior probability of ``[a, b]`` (clipped to the support)."""
        return float(self.cdf_at(min(max(b, a), self.grid[-1])) - self.cdf_at(max(a, self.grid[0])))

    @property
    def median(self):
        return float(self.quantile(0.5)[0])


def hb_posterior(prior, ytilde, hb=None):
    """Normalize the posterior of ``c`` by the trapezoid rule in ``u = log c``."""
    hb = hb or HBPrior()
    grid = hb.interval(prior).grid
    logd = hb_log_density(prior, ytilde, hb, grid)
    if not np.all(np.isfinite(logd)):
        raise ValueError("non-finite hierarchical posterior density")
    u = np.log(grid)
    # density in u is p(c) * c
    logu = logd + u
    dens = np.exp(logu - logu.max())
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(u))])
    return HBPosterior(grid, logd, cum / cum[-1])


def hb_posterior_quantiles(prior, ytilde, hb=None, probs=(0.025, 0.975)):
    return hb_posterior(prior, ytilde, hb).quantile(probs)


def hb_oracle_scale(prior, f_true, hb=None, penalty="2lambda"):
    """Grid minimizer of ``D^L(c, f) + 2 lambda / c`` (or ``+ 1/c``).

    The concentration target of the hierarchical posterior.  Both penalty
    normalizations appear in the theory; ``penalty`` picks ``'2lambda'`` or
    ``'unit'``.
    """
    hb = hb or HBPrior()
    grid = hb.interval(prior).grid
    pen = {"2lambda": 2.0 * hb.lam, "unit": 1.0}[penalty]
    values = d_term(prior, f_true, grid, "likelihood") + pen / grid
    fun = lambda c: d_term(prior, f_true, c, "likelihood") + pen / c  # noqa: E731
    return refined_argmin(fun, grid, values)[0]
