"""Spectral representations of Gaussian priors on a fixed design grid.

A prior is described by its eigenvalues and an orthonormal eigenbasis of the
covariance matrix at the design points,

    U = sum_j lam_j e_j e_j^T.

Every transform in the package works in that eigenbasis, so the basis objects
below expose the few linear maps the rest of the code needs: values to
coefficients, coefficients to values, and the diagonal ``sum_j w_j e_j(i)^2``
of a spectral function of ``U``.  All maps act on the last axis and broadcast
over leading axes, so a stack of replications transforms in one call.

The Brownian-motion sine basis on the grid ``x_i = i/(n + 1/2)`` is applied
through an FFT of length ``2n + 1``; other bases are stored densely.
"""

from dataclasses import dataclass, field

import numpy as np

DENSE_CAP = 4096


class DimensionCapError(ValueError):
    """Raised when an explicit matrix would exceed the configured dimension cap."""


def _check_cap(dim, cap):
    if dim > cap:
        raise DimensionCapError(f"dimension {dim} exceeds dense cap {cap}")


# ---------------------------------------------------------------------------
# Bases
# ---------------------------------------------------------------------------


class SineBasis:
    """Eigenvectors of the Brownian-motion covariance on ``x_i = i/(n+1/2)``.

    ``e_j(i) = (n+1/2)^{-1/2} sqrt(2) sin((j-1/2) pi x_i)``, defined for every
    ``j >= 1``; only ``j <= n`` are orthonormal.
    """

    def __init__(self, n):
        self.n = int(n)
        self.dim = self.n
        self._period = 2 * self.n + 1
        self._scale = 2.0 / np.sqrt(self._period)
        idx = np.arange(self._period)
        self._twist = np.exp(-1j * np.pi * idx / self._period)
        self._twist2 = np.exp(-2j * np.pi * np.arange(1, self.n + 1) / self._period)

    def vector(self, j):
        """Return ``e_j`` as a length-n array (any ``j >= 1``)."""
        i = np.arange(1, self.n + 1)
        return self._scale * np.sin(np.pi * (2 * int(j) - 1) * i / self._period)

    def matrix(self, cap=DENSE_CAP):
        """Dense matrix whose column ``j-1`` is ``e_j``."""
        _check_cap(self.n, cap)
        i = np.arange(1, self.n + 1)[:, None]
        j = np.arange(1, self.n + 1)[None, :]
        return self._scale * np.sin(np.pi * (2 * j - 1) * i / self._period)

    def _dft(self, a):
        # sum_k a_k exp(+2 pi i k l / P) for l = 0..P-1, a zero-padded at k=0
        P = self._period
        buf = np.zeros(a.shape[:-1] + (P,), dtype=complex)
        buf[..., 1 : self.n + 1] = a
        return np.fft.ifft(buf, axis=-1) * P

    def to_coefficients(self, values):
        values = np.asarray(values, dtype=float)
        spec = self._dft(values * self._twist[1 : self.n + 1])
        return self._scale * spec[..., 1 : self.n + 1].imag

    def from_coefficients(self, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        spec = self._dft(coeffs)[..., 1 : self.n + 1]
        return self._scale * (self._twist[1 : self.n + 1] * spec).imag

    def squared_apply(self, w):
        """Return ``sum_j w_j e_j(i)^2`` for every grid index ``i``."""
        w = np.asarray(w, dtype=float)
        # sin^2 t = (1 - cos 2t)/2 turns the sum into one DFT at frequency 2i
        spec = self._dft(w)
        k = (2 * np.arange(1, self.n + 1)) % self._period
        cos_part = (self._twist2 * spec[..., k]).real
        total = w.sum(axis=-1, keepdims=True)
        return 0.5 * self._scale**2 * (total - cos_part)


class DenseBasis:
    """Orthonormal basis stored as a matrix with eigenvectors in its columns."""

    def __init__(self, matrix):
        self._E = np.asarray(matrix, dtype=float)
        self.dim = self._E.shape[0]
        self._E2 = None

    def vector(self, j):
        return self._E[:, int(j) - 1].copy()

    def matrix(self, cap=DENSE_CAP):
        _check_cap(self.dim, cap)
        return self._E.copy()

    def to_coefficients(self, values):
        return np.asarray(values, dtype=float) @ self._E

    def from_coefficients(self, coeffs):
        return np.asarray(coeffs, dtype=float) @ self._E.T

    def squared_apply(self, w):
        if self._E2 is None:
            self._E2 = self._E**2
        return np.asarray(w, dtype=float) @ self._E2.T


class TensorBasis:
    """Tensor products ``e_p (x) e_q`` of a 1-D basis, listed in a given order.

    Grid values are ordered lexicographically by ``(a, b)``, the pair of 1-D
    grid indices.  Coefficient ``k`` belongs to the pair ``order[k]`` (0-based).
    """

    def __init__(self, factor, order):
        self.factor = factor
        self.n = factor.dim
        self.dim = self.n * self.n
        self.order = np.asarray(order, dtype=int)
        self._flat = self.order[:, 0] * self.n + self.order[:, 1]
        self._inverse = np.empty(self.dim, dtype=int)
        self._inverse[self._flat] = np.arange(self.dim)

    def _both_axes(self, op, grid):
        out = op(grid)
        out = np.swapaxes(op(np.swapaxes(out, -1, -2)), -1, -2)
        return out

    def vector(self, k):
        p, q = self.order[int(k) - 1] + 1
        return np.kron(self.factor.vector(p), self.factor.vector(q))

    def matrix(self, cap=DENSE_CAP):
        _check_cap(self.dim, cap)
        E1 = self.factor.matrix(cap=max(cap, self.n))
        return np.kron(E1, E1)[:, self._flat]

    def to_coefficients(self, values):
        values = np.asarray(values, dtype=float)
        grid = values.reshape(values.shape[:-1] + (self.n, self.n))
        coef = self._both_axes(self.factor.to_coefficients, grid)
        return coef.reshape(values.shape)[..., self._flat]

    def from_coefficients(self, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        arr = coeffs[..., self._inverse].reshape(coeffs.shape[:-1] + (self.n, self.n))
        vals = self._both_axes(self.factor.from_coefficients, arr)
        return vals.reshape(coeffs.shape)

    def squared_apply(self, w):
        w = np.asarray(w, dtype=float)
        arr = w[..., self._inverse].reshape(w.shape[:-1] + (self.n, self.n))
        out = self._both_axes(self.factor.squared_apply, arr)
        return out.reshape(w.shape)


# ---------------------------------------------------------------------------
# Grid and prior records
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DesignGrid:
    n: int
    points: np.ndarray
    kind: str

    def __post_init__(self):
        pts = self.points
        if self.kind == "tensor_square":
            if pts.ndim != 2 or pts.shape[1] != 2:
                raise ValueError("2-D grid points must have shape (N, 2)")
            lex = np.lexsort((pts[:, 1], pts[:, 0]))
            if not np.array_equal(lex, np.arange(len(pts))):
                raise ValueError("2-D grid points must be lexicographically ordered")
            if np.any(np.all(np.diff(pts, axis=0) == 0, axis=1)):
                raise ValueError("duplicate 2-D grid points")
        elif np.any(np.diff(pts) <= 0):
            raise ValueError("grid points must be strictly increasing")

    @property
    def size(self):
        return len(self.points)


def bm_grid(n):
    """The grid ``x_i = i/(n + 1/2)``, i = 1..n."""
    return DesignGrid(n, np.arange(1, n + 1) / (n + 0.5), "bm_special")


def tensor_grid(grid):
    a, b = np.meshgrid(grid.points, grid.points, indexing="ij")
    pts = np.column_stack([a.ravel(), b.ravel()])
    return DesignGrid(grid.n, pts, "tensor_square")


@dataclass(frozen=True, eq=False)
class SpectralPrior:
    """Eigen-decomposition of a prior covariance at the design points.

    ``eigenvalues`` are sorted non-increasing; ``basis`` maps between grid
    values and coefficients in the matching order.  ``index_pairs`` holds the
    1-based native (i, j) indices of 2-D priors.
    """

    grid: DesignGrid
    eigenvalues: np.ndarray
    basis: object
    m: float
    label: str
    config: dict = field(default_factory=dict)
    index_pairs: np.ndarray = None

    def __post_init__(self):
        lam = self.eigenvalues
        if lam.ndim != 1 or len(lam) != self.basis.dim:
            raise ValueError("eigenvalue count must equal the basis dimension")
        if np.any(lam <= 0) or not np.all(np.isfinite(lam)):
            raise ValueError("eigenvalues must be finite and strictly positive")
        if np.any(np.diff(lam) > 0):
            raise ValueError("eigenvalues must be sorted non-increasing")

    @property
    def dim(self):
        return len(self.eigenvalues)

    @property
    def side(self):
        """Points per axis (``n``); equals ``dim`` in 1-D."""
        return self.grid.n

    @property
    def is_2d(self):
        return self.grid.kind == "tensor_square"

    def eigenvector(self, j):
        return self.basis.vector(j)


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------


def bm_eigenvalues(n):
    j = np.arange(1, n + 1)
    return 1.0 / ((4 * n + 2) * np.sin((j - 0.5) * np.pi / (2 * n + 1)) ** 2)


def brownian_motion_prior(n):
    """Standard Brownian motion restricted to ``x_i = i/(n+1/2)``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    n = int(n)
    return SpectralPrior(
        grid=bm_grid(n),
        eigenvalues=bm_eigenvalues(n),
        basis=SineBasis(n),
        m=2.0,
        label="bm",
        config={"family": "bm", "n": n},
    )


def power_law_prior(n, m, delta=1.0):
    """Eigenvalues ``delta * n / j^m`` with the Brownian-motion sine basis."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if m < 1:
        raise ValueError("m must be at least 1")
    if delta <= 0:
        raise ValueError("delta must be positive")
    n = int(n)
    j = np.arange(1, n + 1, dtype=float)
    return SpectralPrior(
        grid=bm_grid(n),
        eigenvalues=delta * n / j**m,
        basis=SineBasis(n),
        m=float(m),
        label="power_law",
        config={"family": "power_law", "n": n, "m": float(m), "delta": float(delta)},
    )


def _sorted_pairs(lam2d, n):
    """Order the (i, j) pairs by eigenvalue desc, then i+j asc, then i asc."""
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    i, j, lam = i.ravel(), j.ravel(), lam2d.ravel()
    order = np.lexsort((i, i + j, -lam))
    return lam[order], np.column_stack([i[order], j[order]])


def _build_2d(n, lam2d, m, label, config, dim_cap):
    n = int(n)
    if n < 1:
        raise ValueError("n must be at least 1")
    if m < 1:
        raise ValueError("m must be at least 1")
    if n * n > dim_cap:
        raise DimensionCapError(f"n^2 = {n * n} exceeds dimension cap {dim_cap}")
    lam, pairs = _sorted_pairs(lam2d(n), n)
    return SpectralPrior(
        grid=tensor_grid(bm_grid(n)),
        eigenvalues=lam,
        basis=TensorBasis(SineBasis(n), pairs),
        m=float(m),
        label=label,
        config=config,
        index_pairs=pairs + 1,
    )


def tensor_prior_2d(n, m=2.0, delta=1.0, factor="power_law", dim_cap=1 << 20):
    """Kronecker product of two 1-D priors on the square grid.

    ``factor='bm'`` uses the exact Brownian-motion eigenvalues (requires m=2);
    ``factor='power_law'`` uses ``delta n / j^m`` per axis, so the products are
    ``(delta n)^2 / (ij)^m``.
    """
    if factor == "bm":
        if m != 2:
            raise ValueError("Brownian-motion factors have m = 2")

        def lam2d(n):
            lam = bm_eigenvalues(n)
            return np.multiply.outer(lam, lam)

    elif factor == "power_law":
        if delta <= 0:
            raise ValueError("delta must be positive")

        def lam2d(n):
            # integer products keep equal-by-formula eigenvalues bitwise equal
            ij = np.multiply.outer(np.arange(1, n + 1), np.arange(1, n + 1)).astype(float)
            return (delta * n) ** 2 / ij**m

    else:
        raise ValueError(f"unknown factor family {factor!r}")
    config = {"family": "tensor", "n": int(n), "m": float(m), "delta": float(delta), "factor": factor}
    return _build_2d(n, lam2d, m, "tensor", config, dim_cap)


def sobolev_prior_2d(n, m=2.0, dim_cap=1 << 20):
    """Eigenvalues ``n^2 / (i^2 + j^2)^m`` with the 2-D sine tensor basis."""

    def lam2d(n):
        k = np.arange(1, n + 1) ** 2
        return float(n) ** 2 / np.add.outer(k, k).astype(float) ** m

    config = {"family": "sobolev", "n": int(n), "m": float(m)}
    return _build_2d(n, lam2d, m, "sobolev", config, dim_cap)


LAPLACIAN_BOUNDARIES = ("dirichlet", "neumann", "mixed_dn")


def laplacian_matrix(n, boundary):
    """Dense discrete Laplacian ``L`` on the path 1..n with boundary condition."""
    if boundary not in LAPLACIAN_BOUNDARIES:
        raise ValueError(f"unknown boundary {boundary!r}")
    L = -2.0 * np.eye(n) + np.eye(n, k=1) + np.eye(n, k=-1)
    if boundary == "neumann":
        L[0, 0] = L[-1, -1] = -1.0
    elif boundary == "mixed_dn":
        L[-1, -1] = -1.0
    return L


def laplacian_spectrum(n, boundary):
    """Closed-form eigenvalues (ascending in magnitude) and eigenvectors of ``L``.

    Returns ``(mu, E)`` with ``L E[:, k] = mu[k] E[:, k]``.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if boundary not in LAPLACIAN_BOUNDARIES:
        raise ValueError(f"unknown boundary {boundary!r}")
    i = np.arange(1, n + 1)[:, None]
    if boundary == "dirichlet":
        k = np.arange(1, n + 1)
        mu = -2.0 + 2.0 * np.cos(k * np.pi / (n + 1))
        E = np.sqrt(2.0 / (n + 1)) * np.sin(np.pi * k[None, :] * i / (n + 1))
    elif boundary == "neumann":
        k = np.arange(n)
        mu = -2.0 + 2.0 * np.cos(k * np.pi / n)
        E = np.cos(np.pi * k[None, :] * (i - 0.5) / n)
        E *= np.where(k == 0, np.sqrt(1.0 / n), np.sqrt(2.0 / n))[None, :]
    else:
        mu = -1.0 / ((n + 0.5) * bm_eigenvalues(n))
        E = SineBasis(n).matrix(cap=max(DENSE_CAP, n))
    return mu, E


def laplacian_prior(n, boundary="mixed_dn"):
    """Prior with covariance ``-L^{-1}`` for the path-graph Laplacian.

    The Neumann Laplacian annihilates constants, so it has no inverse and is
    rejected here; its spectrum is still available from
    :func:`laplacian_spectrum`.
    """
    mu, E = laplacian_spectrum(n, boundary)
    if boundary == "neumann":
        raise ValueError("the Neumann Laplacian is singular; no covariance exists")
    lam = -1.0 / mu
    order = np.argsort(-lam, kind="stable")
    basis = SineBasis(n) if boundary == "mixed_dn" else DenseBasis(E[:, order])
    grid = bm_grid(n) if boundary == "mixed_dn" else DesignGrid(n, np.arange(1, n + 1, dtype=float), "uniform")
    return SpectralPrior(
        grid=grid,
        eigenvalues=lam[order],
        basis=basis,
        m=2.0,
        label=f"laplacian_{boundary}",
        config={"family": "laplacian", "n": int(n), "boundary": boundary},
    )


def custom_prior(points, eigenvalues, eigenvectors, m, label="custom"):
    """Prior from an explicit eigensystem on an arbitrary 1-D grid."""
    points = np.asarray(points, dtype=float)
    lam = np.asarray(eigenvalues, dtype=float)
    order = np.argsort(-lam, kind="stable")
    E = np.asarray(eigenvectors, dtype=float)[:, order]
    return SpectralPrior(
        grid=DesignGrid(len(points), points, "custom"),
        eigenvalues=lam[order],
        basis=DenseBasis(E),
        m=float(m),
        label=label,
        config={"family": "custom", "n": len(points), "m": float(m)},
    )


def covariance_matrix(prior, cap=DENSE_CAP):
    """Dense ``U = sum_j lam_j e_j e_j^T``."""
    _check_cap(prior.dim, cap)
    E = prior.basis.matrix(cap=cap)
    U = (E * prior.eigenvalues) @ E.T
    return 0.5 * (U + U.T)


PRIOR_FAMILIES = ("bm", "power_law", "tensor", "sobolev", "laplacian")


def prior_from_config(spec):
    """Build a prior from a ``{family, n, m, delta, boundary, factor}`` record."""
    spec = dict(spec)
    family = spec.get("family")
    n = int(spec["n"])
    if family == "bm":
        return brownian_motion_prior(n)
    if family == "power_law":
        return power_law_prior(n, spec.get("m", 2.0), spec.get("delta", 1.0))
    if family == "tensor":
        return tensor_prior_2d(n, spec.get("m", 2.0), spec.get("delta", 1.0), spec.get("factor", "power_law"))
    if family == "sobolev":
        return sobolev_prior_2d(n, spec.get("m", 2.0))
    if family == "laplacian":
        return laplacian_prior(n, spec.get("boundary", "mixed_dn"))
    raise ValueError(f"unknown prior family {family!r}")
