import numpy as np
import pytest

from gpsim.credible_sets import (
    CredibleBall,
    ball_at_scale,
    ball_contains,
    eb_credible_ball,
    fraction_covered,
    hb_contains,
    hb_credible_set,
    hb_witness_scale,
    indices_J,
    pointwise_intervals,
    set_diameter,
)
from gpsim.posterior import SATTERTHWAITE, credible_radius, normal_quantile, posterior_pointwise_variance
from gpsim.rng import make_rng
from gpsim.scale_selection import HBPrior, hb_posterior, scale_interval
from gpsim.sequence_model import from_coefficients, simulate_data, transformed_observation
from gpsim.spectral_prior import brownian_motion_prior, power_law_prior


def observe(prior, f, seed):
    return transformed_observation(prior, simulate_data(prior, f, seed))


class TestBall:
    def test_zero_data(self):
        p = power_law_prior(64, 2)
        ball = eb_credible_ball(p, np.zeros(64), "lik_eb", 0.95, 2.0, SATTERTHWAITE)
        np.testing.assert_array_equal(ball.center, 0)
        assert ball.c_hat == scale_interval(p).lo
        np.testing.assert_allclose(ball.radius, 2 * credible_radius(p, ball.c_hat, 0.95, SATTERTHWAITE))
        assert ball.radius > 0

    def test_radius_linear_in_M(self):
        p = power_law_prior(64, 2)
        y = np.random.default_rng(0).standard_normal(64)
        a = eb_credible_ball(p, y, "risk_eb", 0.9, 1.5, SATTERTHWAITE)
        b = eb_credible_ball(p, y, "risk_eb", 0.9, 3.0, SATTERTHWAITE)
        assert b.radius == 2 * a.radius

    def test_prior_draw_fixture(self):
        p = brownian_motion_prior(256)
        f = np.sqrt(p.eigenvalues) * make_rng(7).standard_normal(256)
        ball = eb_credible_ball(p, observe(p, f, 8), "lik_eb", 0.95, 3.0)
        assert ball_contains(ball, f)

    def test_membership_is_strict(self):
        ball = CredibleBall(np.zeros(4), 2.0, 1.0, 1.0, 0.95)
        assert ball_contains(ball, np.zeros(4))
        assert not ball_contains(ball, np.array([3.0, 0, 0, 0]))
        assert not ball_contains(ball, np.array([2.0, 0, 0, 0]))
        with pytest.raises(ValueError):
            ball_contains(ball, np.zeros(5))

    def test_coefficient_and_grid_membership_agree(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            n = int(rng.integers(2, 512))
            p = brownian_motion_prior(n)
            center = rng.standard_normal(n)
            f = center + rng.standard_normal(n) * rng.uniform(0.1, 2)
            radius = rng.uniform(0.5, 2) * np.sqrt(n)
            in_coef = ball_contains(CredibleBall(center, radius, 1.0, 1.0, 0.9), f)
            grid_dist = np.linalg.norm(from_coefficients(p, f) - from_coefficients(p, center))
            assert in_coef == (grid_dist < radius)

    def test_coverage_monotone_in_M(self):
        p = power_law_prior(128, 2)
        f = np.sqrt(128) * np.arange(1, 129) ** -1.5
        hits = np.zeros(4)
        for s in range(30):
            ball = eb_credible_ball(p, observe(p, f, s), "risk_eb", 0.95, 1.0, SATTERTHWAITE)
            d = np.linalg.norm(f - ball.center)
            hits += d < np.array([0.5, 1.0, 2.0, 3.0]) * ball.radius
        assert np.all(np.diff(hits) >= 0)


class TestHB:
    def setup_method(self):
        self.p = power_law_prior(128, 2)
        self.y = observe(self.p, np.sqrt(128) * np.arange(1, 129) ** -1.5, 3)

    def test_quantile_collapse(self):
        s = hb_credible_set(self.p, self.y, eta1=1e-9, eta2=0.95, M=1.0, radius_method=SATTERTHWAITE)
        np.testing.assert_allclose(s.c_lo, s.c_hi, rtol=1e-6)
        np.testing.assert_allclose(s.c_lo, hb_posterior(self.p, self.y).median, rtol=1e-6)

    def test_contains_centers(self):
        s = hb_credible_set(self.p, self.y, M=1.0, subgrid_size=8, radius_method=SATTERTHWAITE)
        assert s.scales[0] == s.c_lo and s.scales[-1] == s.c_hi
        for c in s.centers:
            assert hb_contains(s, c)

    def test_far_point_excluded(self):
        s = hb_credible_set(self.p, self.y, M=2.0, subgrid_size=8, radius_method=SATTERTHWAITE)
        spread = max(np.linalg.norm(a - b) for a in s.centers for b in s.centers)
        far = s.centers[0] + (s.radii.max() + spread + 1) * np.eye(128)[0]
        assert not hb_contains(s, far)

    def test_monotone_in_M(self):
        f = np.sqrt(128) * np.arange(1, 129) ** -1.5
        inside = [
            hb_contains(hb_credible_set(self.p, self.y, M=M, subgrid_size=8, radius_method=SATTERTHWAITE), f)
            for M in (0.1, 0.5, 1, 2, 4)
        ]
        assert inside == sorted(inside)

    def test_union_implies_ball(self):
        f = np.sqrt(128) * np.arange(1, 129) ** -1.5
        s = hb_credible_set(self.p, self.y, M=3.0, subgrid_size=16, radius_method=SATTERTHWAITE)
        c = hb_witness_scale(s, f)
        assert c is not None
        assert ball_contains(ball_at_scale(self.p, self.y, c, 0.95, 3.0, SATTERTHWAITE), f)

    def test_refinement_keeps_membership(self):
        p = power_law_prior(256, 2)
        f = np.sqrt(256) * np.arange(1, 257) ** -1.5
        for s in range(50):
            y = observe(p, f, 100 + s)
            post = hb_posterior(p, y)
            coarse = hb_credible_set(p, y, M=1.0, subgrid_size=16, radius_method=SATTERTHWAITE, posterior=post)
            fine = hb_credible_set(p, y, M=1.0, subgrid_size=64, radius_method=SATTERTHWAITE, posterior=post)
            assert hb_contains(fine, f) or not hb_contains(coarse, f)

    def test_zero_truth_upper_quantile(self):
        p = power_law_prior(512, 2)
        y = observe(p, np.zeros(512), 4)
        s = hb_credible_set(p, y, HBPrior(), M=1.0, subgrid_size=4, radius_method=SATTERTHWAITE)
        median = hb_posterior(p, observe(p, np.zeros(512), 5)).median
        assert median / 5 <= s.c_hi <= 5 * median

    def test_diameter(self):
        s = hb_credible_set(self.p, self.y, eta1=1e-12, M=2.0, subgrid_size=1, radius_method=SATTERTHWAITE)
        np.testing.assert_allclose(set_diameter(s), 2 * 2.0 * credible_radius(self.p, s.c_lo, 0.95, SATTERTHWAITE), rtol=1e-6)
        wide = hb_credible_set(self.p, self.y, M=2.0, subgrid_size=8, radius_method=SATTERTHWAITE)
        assert set_diameter(wide) >= 2 * wide.radii.max()

    def test_record(self):
        s = hb_credible_set(self.p, self.y, M=1.0, subgrid_size=4, radius_method=SATTERTHWAITE)
        rec = s.to_record()
        assert rec["type"] == "hb_union" and len(rec["radius"]) == 4


class TestBallDiameter:
    def test_ball(self):
        assert set_diameter(CredibleBall(np.zeros(3), 2.0, 1.0, 1.0, 0.9)) == 4.0


class TestPointwise:
    def test_variance_increases_with_x(self):
        p = brownian_motion_prior(64)
        v = posterior_pointwise_variance(p, 1.0)
        assert np.all(np.diff(v[:32]) > 0)
        J = indices_J(v, 0.999)
        assert not J[0] and J[-1]
        assert np.all(indices_J(v, 0.0))

    def test_half_width(self):
        p = brownian_motion_prior(64)
        y = np.random.default_rng(1).standard_normal(64)
        fam = pointwise_intervals(p, y, 1.0, eta=0.9, M=2.5, C=0.5)
        np.testing.assert_allclose(
            fam.half_widths[0], 2.5 * normal_quantile(0.9) * np.sqrt(posterior_pointwise_variance(p, 1.0))
        )

    def test_fraction_at_centers(self):
        p = brownian_motion_prior(64)
        y = np.random.default_rng(1).standard_normal(64)
        fam = pointwise_intervals(p, y, "lik_eb", C=0.5)
        np.testing.assert_allclose(fraction_covered(fam, fam.centers[0]), fam.in_J.mean())

    def test_zero_width(self):
        p = brownian_motion_prior(16)
        fam = pointwise_intervals(p, np.ones(16), 1.0, M=0.0, C=0.0)
        assert fraction_covered(fam, fam.centers[0] + 1) == 0.0

    def test_hb_union(self):
        p = power_law_prior(128, 2)
        y = observe(p, np.sqrt(128) * np.arange(1, 129) ** -1.5, 9)
        fam = pointwise_intervals(p, y, "hb", M=1.0, C=0.5, subgrid_size=8)
        assert fam.centers.shape == (8, 128)
        # a point covered by any one scale is covered by the union
        one = pointwise_intervals(p, y, float(fam.scales[3]), M=1.0, C=0.5)
        truth = from_coefficients(p, np.sqrt(128) * np.arange(1, 129) ** -1.5)
        assert np.all(fam.covers(truth) | ~one.covers(truth))
