import math

import numpy as np
import pytest

from normex.bounds import (
    BoundCurve,
    berry_esseen_K,
    bound_curve,
    density_bound_k2,
    find_K_max,
)
from normex.core import NormexApprox
from normex.errors import DomainError
from normex.oracle import empirical_quantile


class TestBerryEsseenK:
    def test_zero_at_support_edge(self):
        assert berry_esseen_K(52, 2.5, 1.0) == 0.0
        assert berry_esseen_K(52, 2.5, 0.5) == 0.0

    def test_nonnegative_and_finite(self):
        for x in (10.0, 52.0, 86.0, 200.0, 1000.0):
            v = berry_esseen_K(52, 2.5, x)
            assert 0.0 <= v < 1.0

    def test_alpha_range_gate(self):
        with pytest.raises(DomainError):
            berry_esseen_K(52, 2.0, 80.0)
        with pytest.raises(DomainError):
            berry_esseen_K(52, 3.5, 80.0)
        assert berry_esseen_K(52, 3.5, 80.0, extrapolate=True) > 0.0

    def test_constant_scales_linearly(self):
        base = berry_esseen_K(52, 2.5, 86.0)
        doubled = berry_esseen_K(52, 2.5, 86.0, c=2 * 0.4693)
        assert abs(doubled - 2.0 * base) < 1e-12

    def test_uniform_form_dominates(self):
        for x in (70.0, 86.0, 120.0):
            nonuni = berry_esseen_K(52, 2.5, x)
            uni = berry_esseen_K(52, 2.5, x, uniform_form=True)
            assert uni >= nonuni

    def test_unimodal_shape(self):
        xs = np.linspace(52.0, 300.0, 120)
        ks = np.array([berry_esseen_K(52, 2.5, float(x)) for x in xs])
        i = int(np.argmax(ks))
        rising = np.diff(ks[: i + 1])
        falling = np.diff(ks[i:])
        assert np.all(rising >= -1e-6)
        assert np.all(falling <= 1e-6)


class TestKMax:
    def test_published_maximum_52(self):
        x_max, k_max = find_K_max(52, 2.5)
        assert abs(x_max - 86.0) <= 2.0
        assert abs(k_max - 0.049) <= 0.0015

    def test_decreasing_in_n(self):
        _, k52 = find_K_max(52, 2.5)
        _, k1000 = find_K_max(1000, 2.5)
        assert k1000 < k52

    def test_location_proportional_to_n(self):
        ratios = [find_K_max(n, 2.5)[0] / n for n in (52, 250, 1000)]
        cv = np.std(ratios) / np.mean(ratios)
        assert cv <= 0.05


class TestBoundCurve:
    def test_reporting_grid(self):
        curve, x_max, k_max = bound_curve(52, 2.5, points=200)
        assert isinstance(curve, BoundCurve)
        assert curve.x.size == 200
        assert curve.x[0] == 52.0
        assert abs(curve.x[-1] - 3.0 * x_max) < 1e-9
        assert np.all(curve.K >= 0.0)
        # K is negligible at the left edge x = n (the conditional centers
        # all sit above x there, so the damping is fully active)
        assert curve.K[0] <= 0.02 * k_max
        assert abs(np.max(curve.K) - k_max) < 1e-3


class TestDominationAgainstSimulation:
    @pytest.mark.parametrize("n", [52, 250])
    def test_observed_error_within_bound(self, sims, n):
        emp = sims(n, 2.5)
        approx = NormexApprox(n=n, alpha=2.5)
        qs = np.linspace(0.5, 0.999, 50)
        xs = emp.values[(qs * emp.n_samples).astype(int)]
        N = emp.n_samples
        for x in xs:
            x = float(x)
            g = approx.cdf(x)
            f_emp = float(emp.cdf_at(x))
            se = math.sqrt(max(f_emp * (1.0 - f_emp), 1e-12) / N)
            bound = berry_esseen_K(n, 2.5, x) + 3.0 * se
            assert abs(f_emp - g) <= bound


class TestDensityBoundK2:
    def test_zero_below_support(self):
        assert density_bound_k2(52, 1.5, 40.0) == 0.0

    def test_dominates_observed_gap(self, sims):
        emp = sims(52, 1.5)
        x95 = empirical_quantile(emp, 0.95).point
        approx = NormexApprox(n=52, alpha=1.5)
        observed = abs(float(emp.cdf_at(x95)) - approx.cdf(x95))
        bound = density_bound_k2(52, 1.5, x95, approx=approx)
        print(f"\n(52, 1.5) at q=0.95: observed gap {observed:.2e}, bound {bound:.3f}")
        assert bound >= observed

    def test_alpha_gate(self):
        with pytest.raises(DomainError):
            density_bound_k2(52, 2.5, 100.0)

    def test_increases_with_x(self):
        approx = NormexApprox(n=52, alpha=1.5)
        b1 = density_bound_k2(52, 1.5, 150.0, approx=approx)
        b2 = density_bound_k2(52, 1.5, 300.0, approx=approx)
        assert 0.0 < b1 < b2

    @pytest.mark.xfail(
        strict=True,
        reason="the 1/(n-k) prefactor is offset by the integral factor "
        "growing with n (the conditioning threshold and the x-range both "
        "scale up), so the bound ratio at matched quantiles is ~0.88, "
        "not ~0.5; the companion test pins the measured behaviour",
    )
    def test_half_ratio_at_matched_quantiles(self, sims):
        e52 = sims(52, 1.5)
        e104 = sims(104, 1.5, n_samples=10**5, seed=8)
        x52 = empirical_quantile(e52, 0.95).point
        x104 = empirical_quantile(e104, 0.95).point
        ratio = density_bound_k2(104, 1.5, x104) / density_bound_k2(52, 1.5, x52)
        assert 0.45 <= ratio <= 0.55

    def test_ratio_at_matched_quantiles_measured(self, sims):
        # the bound does tighten with n at matched quantile levels, but the
        # n-dependence of the conditioning profile keeps the ratio well
        # above the bare prefactor ratio (n52-k)/(n104-k) ~ 0.49
        e52 = sims(52, 1.5)
        e104 = sims(104, 1.5, n_samples=10**5, seed=8)
        x52 = empirical_quantile(e52, 0.95).point
        x104 = empirical_quantile(e104, 0.95).point
        ratio = density_bound_k2(104, 1.5, x104) / density_bound_k2(52, 1.5, x52)
        print(f"\nbound ratio n=104 vs n=52 at q=0.95: {ratio:.3f}")
        assert 0.7 <= ratio <= 1.0
