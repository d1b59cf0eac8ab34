import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpsim.spectral_prior import (
    DimensionCapError,
    SineBasis,
    bm_eigenvalues,
    brownian_motion_prior,
    covariance_matrix,
    laplacian_matrix,
    laplacian_prior,
    laplacian_spectrum,
    power_law_prior,
    prior_from_config,
    sobolev_prior_2d,
    tensor_prior_2d,
)


def min_kernel(x):
    return np.minimum.outer(x, x)


class TestBrownianMotion:
    def test_n1_closed_form(self):
        p = brownian_motion_prior(1)
        np.testing.assert_allclose(p.eigenvalues, [2 / 3], rtol=1e-14)
        np.testing.assert_allclose(np.abs(p.eigenvector(1)), [1.0], rtol=1e-14)
        np.testing.assert_allclose(covariance_matrix(p), [[p.grid.points[0]]], rtol=1e-14)

    def test_grid_points(self):
        p = brownian_motion_prior(7)
        np.testing.assert_array_equal(p.grid.points, np.arange(1, 8) / 7.5)
        assert p.grid.kind == "bm_special"

    def test_eigen_identity_n8(self):
        p = brownian_motion_prior(8)
        U = min_kernel(p.grid.points)
        E = p.basis.matrix()
        assert np.max(np.abs(U @ E - E * p.eigenvalues)) < 1e-10

    @pytest.mark.parametrize("n", [1, 2, 5, 64, 512])
    def test_sandwich_bounds(self, n):
        lam = bm_eigenvalues(n)
        j = np.arange(1, n + 1)
        assert np.all(lam >= np.pi**-2 * n / j**2)
        assert np.all(lam <= 3 * n / j**2)

    def test_strictly_decreasing(self):
        assert np.all(np.diff(bm_eigenvalues(300)) < 0)

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            brownian_motion_prior(0)

    def test_tighter_upper_bound_for_large_n(self):
        # recorded measurement: the 0.4 constant holds for j > 2 once n >= 64
        for n in (64, 256, 512):
            lam = bm_eigenvalues(n)
            j = np.arange(1, n + 1)
            assert np.all((lam * j**2 / n)[2:] <= 0.4)


class TestSineBasisTransforms:
    @pytest.mark.parametrize("n", [1, 2, 3, 17, 128])
    def test_matches_dense(self, n):
        b = SineBasis(n)
        E = b.matrix()
        rng = np.random.default_rng(42)
        v = rng.standard_normal((3, n))
        w = rng.random(n)
        np.testing.assert_allclose(b.to_coefficients(v), v @ E, atol=1e-12)
        np.testing.assert_allclose(b.from_coefficients(v), v @ E.T, atol=1e-12)
        np.testing.assert_allclose(b.squared_apply(w), (E**2) @ w, atol=1e-12)

    def test_aliasing_identities(self):
        for n in (1, 5, 64, 128):
            b = SineBasis(n)
            for i in range(1, 4 * n + 1):
                np.testing.assert_allclose(b.vector(i + 2 * n + 1), b.vector(i), atol=1e-12)
            np.testing.assert_allclose(b.vector(n + 1), 0.0, atol=1e-12)
            for i in range(1, 2 * n + 2):
                np.testing.assert_allclose(b.vector(2 * n + 2 - i), -b.vector(i), atol=1e-12)


class TestPowerLaw:
    def test_values(self):
        p = power_law_prior(10, 2, 1)
        assert p.eigenvalues[0] == 10
        np.testing.assert_allclose(p.eigenvalues[-1], 0.1)

    @given(st.integers(2, 200), st.floats(1, 6), st.floats(0.1, 10))
    @settings(max_examples=30, deadline=None)
    def test_ratio(self, n, m, delta):
        lam = power_law_prior(n, m, delta).eigenvalues
        j = np.arange(1, n // 2 + 1)
        np.testing.assert_allclose(lam[j - 1] / lam[2 * j - 1], 2.0**m, rtol=1e-12)

    def test_errors(self):
        with pytest.raises(ValueError):
            power_law_prior(10, 0.5)
        with pytest.raises(ValueError):
            power_law_prior(10, 2, 0)

    def test_prior_smoothness_sum(self):
        # n^{-1} sum j^{2 alpha} lam_j: bounded for alpha < (m-1)/2, growing above
        def s(n, alpha):
            lam = power_law_prior(n, 4).eigenvalues
            j = np.arange(1, n + 1)
            return (j ** (2 * alpha) * lam).sum() / n

        ns = [64, 128, 256, 512]
        bounded = [s(n, 1) for n in ns]
        growing = [s(n, 2) for n in ns]
        assert max(bounded) / min(bounded) < 1.05
        assert all(b > 1.8 * a for a, b in zip(growing, growing[1:]))

    def test_trace(self):
        p = power_law_prior(5, 3, 2)
        np.testing.assert_allclose(np.trace(covariance_matrix(p)), p.eigenvalues.sum())


class TestTwoDimensional:
    def test_bm_tensor_n2(self):
        p = tensor_prior_2d(2, 2, factor="bm")
        lam1 = bm_eigenvalues(2)
        np.testing.assert_allclose(np.sort(p.eigenvalues), np.sort(np.outer(lam1, lam1).ravel()))
        U1 = min_kernel(brownian_motion_prior(2).grid.points)
        dense = np.linalg.eigvalsh(np.kron(U1, U1))
        np.testing.assert_allclose(np.sort(p.eigenvalues), np.sort(dense), rtol=1e-12)
        np.testing.assert_allclose(covariance_matrix(p), np.kron(U1, U1), atol=1e-12)

    def test_orthonormal(self):
        E = tensor_prior_2d(6, 2).basis.matrix()
        np.testing.assert_allclose(E.T @ E, np.eye(36), atol=1e-10)

    def test_first_pair(self):
        p = tensor_prior_2d(8, 2, factor="bm")
        np.testing.assert_allclose(p.eigenvalues[0], bm_eigenvalues(8)[0] ** 2)
        assert tuple(p.index_pairs[0]) == (1, 1)

    def test_tie_break(self):
        p = tensor_prior_2d(6, 2)
        pairs = [tuple(x) for x in p.index_pairs]
        # (1,2) and (2,1) tie; i ascending breaks it
        assert pairs.index((1, 2)) + 1 == pairs.index((2, 1))
        # (1,4), (2,2), (4,1) tie with product 4; i+j ascending puts (2,2) first
        assert pairs.index((2, 2)) < pairs.index((1, 4)) < pairs.index((4, 1))

    def test_rejects_bm_factor_with_other_m(self):
        with pytest.raises(ValueError):
            tensor_prior_2d(4, 3, factor="bm")

    def test_dimension_cap(self):
        with pytest.raises(DimensionCapError):
            tensor_prior_2d(100, 2, dim_cap=5000)

    def test_sobolev_values(self):
        p = sobolev_prior_2d(3, 1)
        np.testing.assert_allclose(p.eigenvalues[0], 4.5)
        np.testing.assert_allclose(p.eigenvalues[-1], 0.5)

    def test_sobolev_equal_sums_adjacent(self):
        p = sobolev_prior_2d(12, 2)
        s = (p.index_pairs**2).sum(axis=1)
        # the sorted order groups equal i^2 + j^2 together
        first = {}
        for k, v in enumerate(s):
            first.setdefault(v, k)
        for v in set(s):
            idx = np.flatnonzero(s == v)
            assert np.all(np.diff(idx) == 1)
            assert np.all(p.eigenvalues[idx] == p.eigenvalues[idx[0]])

    def test_sobolev_prior_smoothness(self):
        # native weights (i^2 + j^2)^alpha; bounded for alpha < m - 1
        def s(n, alpha):
            p = sobolev_prior_2d(n, 2)
            r2 = (p.index_pairs.astype(float) ** 2).sum(axis=1)
            return (r2**alpha * p.eigenvalues).sum() / p.dim

        ns = (8, 16, 32, 64)
        below = [s(n, 0.9) for n in ns]
        above = [s(n, 1.5) for n in ns]
        # increments shrink geometrically (tail ~ n^{2(alpha - m + 1)}), so the sum converges
        incr = np.diff(below)
        assert np.all(incr[1:] < 0.95 * incr[:-1])
        assert all(b > 1.5 * a for a, b in zip(above, above[1:]))

    def test_transforms_match_dense(self):
        p = sobolev_prior_2d(5, 2)
        E = p.basis.matrix()
        np.testing.assert_allclose(E.T @ E, np.eye(25), atol=1e-12)
        v = np.random.default_rng(1).standard_normal(25)
        np.testing.assert_allclose(p.basis.to_coefficients(v), v @ E, atol=1e-12)
        np.testing.assert_allclose(p.basis.from_coefficients(v), v @ E.T, atol=1e-12)
        np.testing.assert_allclose(p.basis.squared_apply(p.eigenvalues), np.diag(covariance_matrix(p)), atol=1e-12)


class TestLaplacian:
    def test_mixed_matches_bm(self):
        n = 16
        q = laplacian_prior(n, "mixed_dn")
        bm = brownian_motion_prior(n)
        np.testing.assert_allclose(q.basis.matrix(), bm.basis.matrix(), atol=1e-10)
        mu, _ = laplacian_spectrum(n, "mixed_dn")
        np.testing.assert_allclose(mu, -1 / ((n + 0.5) * bm.eigenvalues), rtol=1e-12)
        L = laplacian_matrix(n, "mixed_dn")
        E = bm.basis.matrix()
        np.testing.assert_allclose(L @ E, E * mu, atol=1e-10)

    def test_dirichlet_n3(self):
        mu, E = laplacian_spectrum(3, "dirichlet")
        L = laplacian_matrix(3, "dirichlet")
        np.testing.assert_allclose(np.sort(mu), np.linalg.eigvalsh(L), atol=1e-12)
        np.testing.assert_allclose(mu, -2 + 2 * np.cos(np.arange(1, 4) * np.pi / 4))
        np.testing.assert_allclose(L @ E, E * mu, atol=1e-12)

    @pytest.mark.parametrize("boundary", ["dirichlet", "neumann", "mixed_dn"])
    def test_sign_and_spectrum(self, boundary):
        L = laplacian_matrix(9, boundary)
        np.testing.assert_array_equal(L, L.T)
        ev = np.linalg.eigvalsh(L)
        assert ev.max() <= 1e-12
        mu, E = laplacian_spectrum(9, boundary)
        np.testing.assert_allclose(L @ E, E * mu, atol=1e-12)
        np.testing.assert_allclose(E.T @ E, np.eye(9), atol=1e-12)
        if boundary != "neumann":
            assert ev.max() < 0

    def test_covariance_is_minus_inverse(self):
        for b in ("dirichlet", "mixed_dn"):
            q = laplacian_prior(7, b)
            np.testing.assert_allclose(covariance_matrix(q), -np.linalg.inv(laplacian_matrix(7, b)), atol=1e-12)

    def test_neumann_singular(self):
        with pytest.raises(ValueError):
            laplacian_prior(5, "neumann")

    def test_rejects_small_n(self):
        with pytest.raises(ValueError):
            laplacian_prior(1)


class TestGeneral:
    @pytest.mark.parametrize(
        "spec",
        [
            {"family": "bm", "n": 40},
            {"family": "power_law", "n": 33, "m": 3, "delta": 0.5},
            {"family": "tensor", "n": 7, "m": 2},
            {"family": "sobolev", "n": 7, "m": 1.5},
            {"family": "laplacian", "n": 20, "boundary": "dirichlet"},
        ],
    )
    def test_orthonormal_and_eigen_identity(self, spec):
        p = prior_from_config(spec)
        E = p.basis.matrix()
        np.testing.assert_allclose(E.T @ E, np.eye(p.dim), atol=1e-10)
        U = covariance_matrix(p)
        np.testing.assert_allclose(U @ E, E * p.eigenvalues, atol=1e-9 * p.eigenvalues[0])
        assert np.all(np.linalg.eigvalsh(U) > 0)
        assert np.all(np.diff(p.eigenvalues) <= 0)

    def test_dense_cap(self):
        with pytest.raises(DimensionCapError):
            covariance_matrix(brownian_motion_prior(5000))

    def test_immutable(self):
        p = brownian_motion_prior(4)
        with pytest.raises(AttributeError):
            p.m = 3
