"""Grid values, eigenbasis coefficients, and simulated regression data.

Coefficient vectors are plain float arrays indexed by the prior's sorted
spectral order; the prior is always passed alongside, and a length check
stands in for tracking which prior a vector belongs to.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .rng import make_rng


def _check_length(prior, arr, what):
    if arr.shape[-1] != prior.dim:
        raise ValueError(f"{what} has length {arr.shape[-1]}, prior dimension is {prior.dim}")


def to_coefficients(prior, values):
    """Coordinates ``f_j = values . e_j`` in the prior eigenbasis."""
    values = np.asarray(values, dtype=float)
    _check_length(prior, values, "values")
    return prior.basis.to_coefficients(values)


def from_coefficients(prior, coeffs):
    """Grid values ``sum_j f_j e_j``."""
    coeffs = np.asarray(coeffs, dtype=float)
    _check_length(prior, coeffs, "coefficients")
    if not np.all(np.isfinite(coeffs)):
        raise ValueError("coefficients must be finite")
    return prior.basis.from_coefficients(coeffs)


@dataclass(frozen=True, eq=False)
class Observation:
    """Grid-ordered responses ``Y_i = f(x_i) + eps_i``."""

    y: np.ndarray
    seed: int = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if y.ndim != 1 or not np.all(np.isfinite(y)):
            raise ValueError("observations must be a finite 1-D array")
        object.__setattr__(self, "y", y)

    def __len__(self):
        return len(self.y)


def simulate_data(prior, f, seed):
    """Draw ``Y = from_coefficients(f) + eps`` with standard normal noise."""
    values = from_coefficients(prior, f)
    rng = make_rng(seed)
    return Observation(values + rng.standard_normal(prior.dim), seed=int(seed))


def transformed_observation(prior, obs):
    """Observation coefficients ``Y~ = O Y``; the noise stays i.i.d. N(0, 1)."""
    y = obs.y if isinstance(obs, Observation) else np.asarray(obs, dtype=float)
    return to_coefficients(prior, y)


def write_observation_csv(path, prior, obs):
    pts = prior.grid.points
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if prior.is_2d:
            n = prior.side
            w.writerow(["i", "j", "x1", "x2", "y"])
            for k, (p, y) in enumerate(zip(pts, obs.y)):
                w.writerow([k // n + 1, k % n + 1, repr(float(p[0])), repr(float(p[1])), repr(float(y))])
        else:
            w.writerow(["index", "x", "y"])
            for k, (p, y) in enumerate(zip(pts, obs.y)):
                w.writerow([k + 1, repr(float(p)), repr(float(y))])


def read_observation_csv(path, prior):
    """Read responses in grid order; coordinates must match the prior's grid."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if prior.is_2d:
        n = prior.side
        y = np.empty(prior.dim)
        pts = np.empty((prior.dim, 2))
        seen = np.zeros(prior.dim, dtype=bool)
        for r in rows:
            k = (int(r["i"]) - 1) * n + int(r["j"]) - 1
            y[k] = float(r["y"])
            pts[k] = float(r["x1"]), float(r["x2"])
            seen[k] = True
        if not seen.all() or len(rows) != prior.dim:
            raise ValueError("2-D observation file does not cover the grid exactly once")
    else:
        rows.sort(key=lambda r: int(r["index"]))
        if [int(r["index"]) for r in rows] != list(range(1, prior.dim + 1)):
            raise ValueError("observation indices must be 1..n")
        y = np.array([float(r["y"]) for r in rows])
        pts = np.array([float(r["x"]) for r in rows])
    if not np.allclose(pts, prior.grid.points, rtol=0, atol=1e-12):
        raise ValueError("observation coordinates do not match the prior's design grid")
    return Observation(y)
