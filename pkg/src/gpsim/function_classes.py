"""Truth functions: smoothness norms, tail conditions, and aliasing.

Infinite coefficient sequences ``(f_j)`` relative to the continuous sine basis
``e_j(x) = sqrt(2) sin((j - 1/2) pi x)`` are represented as callables that map
an integer array of 1-based indices to values.  Sampling the corresponding
function on the grid ``x_i = i/(n + 1/2)`` folds the sequence onto ``n``
coefficients; :func:`alias_coefficients` performs that folding.
"""

from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .rng import derive_seed, make_rng
from .scale_selection import d1_term

# ---------------------------------------------------------------------------
# Smoothness norms
# ---------------------------------------------------------------------------

NORM_WEIGHTS = ("sorted", "product", "sobolev")


def _index_weight(f, alpha, weights, prior):
    """``j^{2 alpha}`` or a native 2-D analogue, per coefficient."""
    if weights == "sorted":
        return np.arange(1, len(f) + 1, dtype=float) ** (2 * alpha)
    if prior is None or prior.index_pairs is None:
        raise ValueError(f"{weights!r} weights need a 2-D prior")
    i, j = prior.index_pairs[:, 0].astype(float), prior.index_pairs[:, 1].astype(float)
    if weights == "product":
        return (i * j) ** (2 * alpha)
    if weights == "sobolev":
        return (i * i + j * j) ** alpha
    raise ValueError(f"unknown weighting {weights!r}")


def sobolev_norm(f, alpha, weights="sorted", prior=None):
    """``||f||_{N,alpha} = sqrt(N^{-1} sum_j j^{2 alpha} f_j^2)``."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    f = np.asarray(f, dtype=float)
    w = _index_weight(f, alpha, weights, prior)
    return float(np.sqrt((w * f * f).sum() / len(f)))


def hyperrect_norm(f, alpha, weights="sorted", prior=None):
    """``||f||_{N,alpha,inf} = sqrt(N^{-1} sup_j j^{1 + 2 alpha} f_j^2)``."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    f = np.asarray(f, dtype=float)
    w = _index_weight(f, alpha + 0.5, weights, prior)
    return float(np.sqrt((w * f * f).max() / len(f)))


@dataclass
class SmoothnessReport:
    alpha: float
    sobolev_norm: float
    hyperrect_norm: float
    weights: str = "sorted"


def smoothness_report(f, alpha, weights="sorted", prior=None):
    return SmoothnessReport(
        alpha, sobolev_norm(f, alpha, weights, prior), hyperrect_norm(f, alpha, weights, prior), weights
    )


# ---------------------------------------------------------------------------
# Polished tail and good bias
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PolishedTailParams:
    L: float = 16.0
    rho: float = 2.0
    m_min: int = 8

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("L must be at least 1")
        if self.m_min < 2:
            raise ValueError("m_min must be at least 2")
        if self.rho <= 0:
            raise ValueError("rho must be positive")


@dataclass
class TailCheck:
    passed: bool
    violation: object = None  # first violating m, or worst scale c

    def __bool__(self):
        return self.passed


def _tails(f):
    """``tail[m] = sum_{j >= m} f_j^2`` for m = 1..N+1 (index 0 unused)."""
    sq = np.asarray(f, dtype=float) ** 2
    tail = np.zeros(len(sq) + 2)
    tail[1:-1] = np.cumsum(sq[::-1])[::-1]
    return tail


def polished_tail_discrete(f, params=PolishedTailParams()):
    """Check ``sum_{j>=m} f_j^2 <= L sum_{j=m}^{floor(rho m) ^ N} f_j^2`` for all ``m >= m_min``."""
    if params.rho <= 1:
        raise ValueError("the discrete form needs rho > 1")
    N = len(f)
    if params.m_min > N:
        return TailCheck(True)
    tail = _tails(f)
    m = np.arange(params.m_min, N + 1)
    end = np.minimum(np.floor(params.rho * m).astype(int), N)
    block = tail[m] - tail[end + 1]
    bad = tail[m] > params.L * block
    if bad.any():
        return TailCheck(False, int(m[np.argmax(bad)]))
    return TailCheck(True)


def polished_tail_eigen_at(f, prior, c, params):
    """Eigenvalue form of the tail condition at one scale ``c``."""
    lam = prior.eigenvalues
    tail = _tails(f)
    # eigenvalues are non-increasing, so each index set is a contiguous range
    start = np.searchsorted(-c * lam, -1.0, side="left")  # first j with c lam_j <= 1
    stop = np.searchsorted(-c * lam, -params.rho, side="right")  # past last j with c lam_j >= rho
    total = tail[start + 1]
    block = tail[start + 1] - tail[max(stop, start) + 1]
    return bool(total <= params.L * block)


def polished_tail_eigen(f, prior, params=PolishedTailParams(rho=0.25), grid_size=400):
    """Check ``L sum_{rho <= c lam_j <= 1} f_j^2 >= sum_{c lam_j <= 1} f_j^2`` over a ``c`` grid.

    The grid spans ``[1/lam_1, 1/lam_N]``, outside which the index sets are
    empty or the whole spectrum.
    """
    if not 0 < params.rho <= 1:
        raise ValueError("the eigenvalue form needs rho in (0, 1]")
    lam = prior.eigenvalues
    grid = np.geomspace(1.0 / lam[0], 1.0 / lam[-1], grid_size)
    for c in grid:
        if not polished_tail_eigen_at(f, prior, c, params):
            return TailCheck(False, float(c))
    return TailCheck(True)


def good_bias_check(f, prior, kind, a, c_grid, K_grid):
    """Check ``D1(K c, f) <= K^{-a} D1(c, f)`` for all ``c`` and ``K > 1`` on the grids.

    Returns the worst ``(c, K)`` pair as the violation when the check fails.
    """
    if a <= 0:
        raise ValueError("a must be positive")
    c_grid = np.asarray(c_grid, dtype=float)
    K_grid = np.asarray(K_grid, dtype=float)
    if c_grid.size == 0 or K_grid.size == 0:
        raise ValueError("grids must be nonempty")
    if np.any(K_grid <= 1):
        raise ValueError("K must exceed 1")
    base = d1_term(prior, f, c_grid, kind)
    inflated = d1_term(prior, f, np.multiply.outer(c_grid, K_grid), kind)
    excess = inflated - K_grid[None, :] ** (-a) * base[:, None]
    tol = 1e-12 * np.maximum(base[:, None], 1e-300)
    if np.all(excess <= tol):
        return TailCheck(True)
    r, k = np.unravel_index(np.argmax(excess - tol), excess.shape)
    return TailCheck(False, (float(c_grid[r]), float(K_grid[k])))


def good_bias_exponent(f, prior, kind, c_grid, K_grid, lo=1e-3, hi=8.0, iters=60):
    """Largest ``a`` in ``[lo, hi]`` passing :func:`good_bias_check`, by bisection; None if ``lo`` fails."""
    if not good_bias_check(f, prior, kind, lo, c_grid, K_grid):
        return None
    if good_bias_check(f, prior, kind, hi, c_grid, K_grid):
        return hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if good_bias_check(f, prior, kind, mid, c_grid, K_grid):
            lo = mid
        else:
            hi = mid
    return lo


# ---------------------------------------------------------------------------
# Sequences and aliasing
# ---------------------------------------------------------------------------


def power_sequence(alpha):
    """``j -> j^{-1/2 - alpha}``."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")

    def seq(j):
        return np.asarray(j, dtype=float) ** (-0.5 - alpha)

    return seq


class SelfSimilarSequence:
    """Seeded random sequence with ``|f_j| <= M j^{-1/2-alpha}`` and energetic blocks.

    Entries are ``M j^{-1/2-alpha} U_j`` with ``U_j`` uniform on ``[-1, 1]``.
    The blocks ``[ceil(rho^k), ceil(rho^{k+1}))`` are redrawn until each carries
    energy at least ``M^2 L ceil(rho^k)^{-2 alpha}``.  Uniforms come in
    fixed-size chunks seeded by (seed, block, attempt, chunk), so any entry can
    be regenerated without storing the block.
    """

    max_attempts = 1000
    chunk = 1 << 15
    _cache_size = 64

    def __init__(self, alpha, M=1.0, rho=2.0, L=0.02, seed=0):
        if alpha <= 0 or M <= 0 or rho <= 1 or L <= 0:
            raise ValueError("need alpha, M, L > 0 and rho > 1")
        self.alpha, self.M, self.rho, self.L, self.seed = alpha, M, rho, L, seed
        self._attempt = {}
        self._chunks = {}
        self._starts = [1]

    def _start(self, k):
        while len(self._starts) <= k + 1:
            prev = self._starts[-1]
            nxt = max(int(np.ceil(self.rho ** len(self._starts))), prev + 1)
            self._starts.append(nxt)
        return self._starts[k]

    def _uniforms(self, k, attempt, c):
        key = (k, attempt, c)
        if key not in self._chunks:
            if len(self._chunks) >= self._cache_size:
                self._chunks.pop(next(iter(self._chunks)))
            rng = make_rng(derive_seed("self_similar", self.seed, k, attempt, c))
            self._chunks[key] = rng.uniform(-1.0, 1.0, self.chunk)
        return self._chunks[key]

    def _values(self, k, attempt, offsets):
        a = self._start(k)
        out = np.empty(len(offsets))
        cidx = offsets // self.chunk
        order = None if np.all(cidx[1:] >= cidx[:-1]) else np.argsort(cidx, kind="stable")
        sorted_c = cidx if order is None else cidx[order]
        chunks, first = np.unique(sorted_c, return_index=True)
        for c, lo, hi in zip(chunks, first, np.append(first[1:], len(sorted_c))):
            sel = slice(lo, hi) if order is None else order[lo:hi]
            out[sel] = self._uniforms(k, attempt, int(c))[offsets[sel] % self.chunk]
        return out * self.M * (a + offsets).astype(float) ** (-0.5 - self.alpha)

    def _accepted(self, k):
        if k not in self._attempt:
            a, b = self._start(k), self._start(k + 1)
            need = self.M**2 * self.L * float(a) ** (-2 * self.alpha)
            for attempt in range(self.max_attempts):
                energy = 0.0
                for lo in range(0, b - a, self.chunk):
                    vals = self._values(k, attempt, np.arange(lo, min(lo + self.chunk, b - a)))
                    energy += float((vals * vals).sum())
                    if energy >= need:
                        break
                if energy >= need:
                    break
            else:
                raise RuntimeError(f"block {k} failed the energy condition {self.max_attempts} times")
            self._attempt[k] = attempt
        return self._attempt[k]

    def __call__(self, j):
        j = np.asarray(j, dtype=np.int64)
        out = np.empty(j.shape)
        flat, res = j.ravel(), out.ravel()
        if flat.size == 0:
            return out
        if flat.min() < 1:
            raise ValueError("sequence indices start at 1")
        while self._starts[-1] <= flat.max():
            self._start(len(self._starts))
        starts = np.asarray(self._starts)
        order = None if np.all(flat[1:] >= flat[:-1]) else np.argsort(flat, kind="stable")
        idx = flat if order is None else flat[order]
        blk = np.searchsorted(starts, idx, side="right") - 1
        blocks, first = np.unique(blk, return_index=True)
        for k, lo, hi in zip(blocks, first, np.append(first[1:], len(idx))):
            vals = self._values(int(k), self._accepted(int(k)), idx[lo:hi] - starts[k])
            res[slice(lo, hi) if order is None else order[lo:hi]] = vals
        return out


def self_similar_sequence(alpha, M_bound=1.0, rho=2.0, seed=0, L=0.02):
    return SelfSimilarSequence(alpha, M_bound, rho, L, seed)


@dataclass
class AliasResult:
    coeffs: np.ndarray
    periods: int
    converged: bool


def alias_coefficients(seq, n, tol=1e-12, max_periods=10**6, full=False):
    """Fold an infinite sequence onto the grid's ``n`` sine coefficients.

    ``f_{i,n} = sqrt(n + 1/2) sum_l (f_{(2n+1)l+i} - f_{(2n+1)l+2n+2-i})``.
    Summation stops after two consecutive periods whose largest raw
    contribution is below ``tol``; ``converged`` is False if ``max_periods``
    runs out first (typical for slowly decaying sequences, alpha <= 1/2).
    Periods are evaluated in growing batches.
    """
    P = 2 * n + 1
    total = np.zeros(n)
    prev_quiet = False
    converged = False
    periods = 0
    batch = 4
    while periods < max_periods:
        count = min(batch, max_periods - periods)
        # one contiguous evaluation covers both the i and the 2n+2-i columns
        block = seq(np.arange(P * periods + 1, P * (periods + count) + 1, dtype=np.int64)).reshape(count, P)
        terms = block[:, :n] - block[:, : n : -1]
        quiet = np.max(np.abs(terms), axis=1) < tol
        pair = quiet[1:] & quiet[:-1]
        stop = None
        if prev_quiet and quiet[0]:
            stop = 1
        elif pair.any():
            stop = int(np.argmax(pair)) + 2
        used = count if stop is None else stop
        total += terms[:used].sum(axis=0)
        periods += used
        if stop is not None:
            converged = True
            break
        prev_quiet = bool(quiet[-1])
        batch = min(2 * batch, max(1, (1 << 22) // n))
    result = AliasResult(np.sqrt(n + 0.5) * total, periods, converged)
    if full:
        return result
    if not converged:
        raise RuntimeError(f"aliasing series did not converge within {max_periods} periods")
    return result.coeffs


def aliased_prior_variance(alpha, delta, n):
    """``sum_l [((2n+1)l+i+delta)^{-s} + ((2n+1)l+2n+2-i+delta)^{-s}]``, ``s = 2 alpha + 1``."""
    return _prior_tail_variance(alpha, delta, n, 0)


def _prior_tail_variance(alpha, delta, n, start):
    P = 2 * n + 1
    s = 2.0 * alpha + 1.0
    i = np.arange(1, n + 1)
    plus = special.zeta(s, start + (i + delta) / P)
    minus = special.zeta(s, start + (P + 1 - i + delta) / P)
    return P ** (-s) * (plus + minus)


def prior_draw(alpha, delta, n, seed, explicit_periods=8):
    """Aliased coefficients of ``W = sum_j Z_j (j + delta)^{-1/2-alpha} e_j``.

    The first ``explicit_periods`` periods are summed term by term; the rest
    of the series, a sum of independent normals per coefficient, is added as a
    single normal with the exact remaining variance.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if 1 + delta <= 0:
        raise ValueError("need j + delta > 0 for all j >= 1")
    P = 2 * n + 1
    rng = make_rng(seed)
    z = rng.standard_normal((explicit_periods, P))
    j = P * np.arange(explicit_periods)[:, None] + np.arange(1, P + 1)[None, :]
    terms = z * (j + delta) ** (-0.5 - alpha)
    i = np.arange(1, n + 1)
    head = terms[:, i - 1].sum(axis=0) - terms[:, P - i].sum(axis=0)
    tail_sd = np.sqrt(_prior_tail_variance(alpha, delta, n, explicit_periods))
    return np.sqrt(n + 0.5) * (head + tail_sd * rng.standard_normal(n))


def gap_sequence(N):
    """``f_{4^k} = 2^{-k}``, zero elsewhere: fails the tail condition at every gap."""
    f = np.zeros(N)
    k = 0
    while 4**k <= N:
        f[4**k - 1] = 2.0**-k
        k += 1
    return f


# ---------------------------------------------------------------------------
# Fourier expansion on [0, 1]
# ---------------------------------------------------------------------------


def sine_function(j, x):
    return np.sqrt(2.0) * np.sin((np.asarray(j, dtype=float)[..., None] - 0.5) * np.pi * np.asarray(x))


def fourier_expand(func, J, panels=2048):
    """``f_j = int_0^1 f(x) sqrt(2) sin((j - 1/2) pi x) dx`` for ``j <= J`` by composite Simpson."""
    if panels % 2:
        raise ValueError("Simpson's rule needs an even number of panels")
    x = np.linspace(0.0, 1.0, panels + 1)
    fx = np.asarray(func(x), dtype=float)
    if not np.all(np.isfinite(fx)):
        raise ValueError("function values are not finite")
    out = integrate.simpson(fx * sine_function(np.arange(1, J + 1), x), x=x, axis=-1)
    if not np.all(np.isfinite(out)):
        raise ValueError("quadrature produced non-finite coefficients")
    return out


def fourier_partial_sum(coeffs, x):
    coeffs = np.asarray(coeffs, dtype=float)
    return coeffs @ sine_function(np.arange(1, len(coeffs) + 1), x)
