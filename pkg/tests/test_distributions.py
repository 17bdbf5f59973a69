import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import erfc

from normex.distributions import (
    ParetoModel,
    RiskMeasure,
    StableSpec,
    log_gamma,
    normal_cdf,
    normal_pdf,
    normal_quantile,
    pareto_cdf,
    pareto_pdf,
    pareto_quantile,
    pareto_skew_kurt,
    pareto_var_es,
    stable_cdf,
    stable_quantile,
)
from normex.errors import DomainError, UndefinedMomentError

Q_GRID = [0.5, 0.9, 0.95, 0.99, 0.995]


class TestParetoBasics:
    def test_cdf_support_edge(self):
        assert pareto_cdf(ParetoModel(2.5), 1.0) == 0.0
        assert pareto_cdf(ParetoModel(2.5), 0.2) == 0.0

    def test_cdf_values(self):
        assert abs(pareto_cdf(ParetoModel(1.0), 2.0) - 0.5) < 1e-15
        assert abs(pareto_cdf(ParetoModel(2.5), 10.0) - (1.0 - 10.0**-2.5)) < 1e-15

    def test_cdf_against_simulation(self):
        # inverse-transform sample reproduces the analytic CDF at x = 10
        rng = np.random.default_rng(123)
        x = (1.0 - rng.random(10**6)) ** (-1.0 / 2.5)
        emp = np.mean(x <= 10.0)
        truth = pareto_cdf(ParetoModel(2.5), 10.0)
        assert abs(emp - truth) < 4.0 * math.sqrt(truth * (1 - truth) / 10**6)

    def test_quantile_values(self):
        assert abs(pareto_quantile(ParetoModel(1.0), 0.5) - 2.0) < 1e-15
        assert abs(pareto_quantile(ParetoModel(2.0), 0.99) - 10.0) < 1e-12
        assert abs(pareto_quantile(ParetoModel(2.5), 0.95) - 0.05**-0.4) < 1e-12

    def test_quantile_domain(self):
        for bad in (0.0, 1.0, -0.2, 1.7):
            with pytest.raises(DomainError):
                pareto_quantile(ParetoModel(2.0), bad)

    @pytest.mark.parametrize("alpha", [0.6, 1.2, 2.5, 4.0])
    def test_round_trip(self, alpha):
        m = ParetoModel(alpha)
        z = np.array(Q_GRID)
        back = pareto_cdf(m, pareto_quantile(m, z))
        assert np.max(np.abs(back - z)) < 1e-8

    def test_cdf_monotone(self):
        m = ParetoModel(1.5)
        xs = np.linspace(0.5, 50.0, 400)
        c = pareto_cdf(m, xs)
        assert np.all(np.diff(c) >= 0.0)
        assert np.all((c >= 0.0) & (c <= 1.0))


class TestVarEs:
    def test_closed_forms(self):
        var, es = pareto_var_es(ParetoModel(2.0), 0.99)
        assert abs(var - 10.0) < 1e-12
        assert abs(es - 20.0) < 1e-12

    def test_derived_cell_and_integral_cross_check(self):
        m = ParetoModel(2.5)
        var, es = pareto_var_es(m, 0.995)
        assert abs(var - 0.005**-0.4) < 1e-12
        assert abs(es - 2.5 / 1.5 * var) < 1e-12
        # ES as the tail average of VaR levels
        integral, _ = quad(lambda b: (1.0 - b) ** -0.4, 0.995, 1.0)
        assert abs(es - integral / 0.005) < 1e-8

    def test_es_undefined_at_or_below_one(self):
        assert abs(pareto_quantile(ParetoModel(1.0), 0.9) - 10.0) < 1e-12
        with pytest.raises(UndefinedMomentError):
            pareto_var_es(ParetoModel(1.0), 0.9)

    @pytest.mark.parametrize("alpha", [1.1, 1.5, 2.5, 4.0])
    def test_es_dominates_var(self, alpha):
        m = ParetoModel(alpha)
        for q in Q_GRID:
            var, es = pareto_var_es(m, q)
            assert es >= var

    def test_risk_measure_dispatch(self):
        m = ParetoModel(2.0)
        assert abs(RiskMeasure("VaR", 0.99).of_pareto(m) - 10.0) < 1e-12
        assert abs(RiskMeasure("ES", 0.99).of_pareto(m) - 20.0) < 1e-12
        with pytest.raises(DomainError):
            RiskMeasure("TVaR", 0.99)
        with pytest.raises(DomainError):
            RiskMeasure("VaR", 1.2)


class TestMoments:
    def test_moment_gates(self):
        m = ParetoModel(0.8)
        with pytest.raises(UndefinedMomentError):
            m.mean
        m = ParetoModel(1.5)
        assert abs(m.mean - 3.0) < 1e-12
        with pytest.raises(UndefinedMomentError):
            m.variance
        m = ParetoModel(2.5)
        assert m.variance > 0
        with pytest.raises(UndefinedMomentError):
            m.skewness
        with pytest.raises(UndefinedMomentError):
            ParetoModel(3.0).skewness
        with pytest.raises(UndefinedMomentError):
            ParetoModel(4.0).excess_kurtosis

    def test_skew_kurt_values(self):
        m4 = ParetoModel(4.0)
        assert abs(m4.skewness - 10.0 * math.sqrt(0.5)) < 1e-12
        with pytest.raises(UndefinedMomentError):
            pareto_skew_kurt(m4)
        m5 = ParetoModel(5.0)
        g1, g2 = pareto_skew_kurt(m5)
        assert abs(g1 - 6.0 * math.sqrt(0.6)) < 1e-12
        assert abs(g2 - 70.8) < 1e-10

    @pytest.mark.parametrize("alpha", [4.0, 5.0, 6.5])
    def test_skewness_against_quadrature(self, alpha):
        m = ParetoModel(alpha)

        def moment(p):
            val, _ = quad(
                lambda u: ((1.0 - u) ** (-1.0 / alpha) - m.mean) ** p, 0.0, 1.0,
                limit=200,
            )
            return val

        var = moment(2)
        assert abs(var - m.variance) < 1e-9 * m.variance
        g1 = moment(3) / var**1.5
        assert abs(g1 - m.skewness) < 1e-6 * abs(m.skewness)
        if alpha > 4.0:
            g2 = moment(4) / var**2 - 3.0
            assert abs(g2 - m.excess_kurtosis) < 1e-5 * abs(m.excess_kurtosis)

    def test_alpha_validation(self):
        with pytest.raises(DomainError):
            ParetoModel(0.0)
        with pytest.raises(DomainError):
            ParetoModel(-1.0)


class TestNormalHelpers:
    def test_values(self):
        assert abs(normal_cdf(0.0) - 0.5) < 1e-15
        assert abs(normal_pdf(0.0) - 1.0 / math.sqrt(2.0 * math.pi)) < 1e-15
        assert abs(normal_quantile(0.95) - 1.6448536269514722) < 1e-9

    def test_round_trip(self):
        qs = np.array([1e-6, 0.01, 0.3, 0.5, 0.9, 0.999999])
        assert np.max(np.abs(normal_cdf(normal_quantile(qs)) - qs)) < 1e-10

    def test_reference_accuracy(self):
        mp = pytest.importorskip("mpmath")
        mp.mp.dps = 30
        for x in (-6.0, -1.0, 0.3, 2.0, 5.5):
            ref = float(mp.ncdf(x))
            assert abs(normal_cdf(x) - ref) <= 1e-12 * max(ref, 1e-12) + 1e-15

    def test_quantile_domain(self):
        with pytest.raises(DomainError):
            normal_quantile(0.0)
        with pytest.raises(DomainError):
            normal_quantile(1.0)


class TestLogGamma:
    def test_known_values(self):
        assert abs(log_gamma(1.0)) < 1e-14
        assert abs(log_gamma(0.5) - 0.5 * math.log(math.pi)) < 1e-13
        assert abs(log_gamma(10.0) - math.log(362880.0)) < 1e-11

    def test_high_precision_reference(self):
        mp = pytest.importorskip("mpmath")
        mp.mp.dps = 40
        for x in (0.1, 0.7, 1.0, 2.5, 17.0, 1234.5, 1e6):
            ref = float(mp.loggamma(x))
            assert abs(log_gamma(x) - ref) <= 1e-12 * max(abs(ref), 1.0)

    def test_domain(self):
        with pytest.raises(DomainError):
            log_gamma(0.0)
        with pytest.raises(DomainError):
            log_gamma(-3.0)


class TestStable:
    def test_spec_validation(self):
        with pytest.raises(DomainError):
            StableSpec(alpha=2.0)
        with pytest.raises(DomainError):
            StableSpec(alpha=0.0)
        with pytest.raises(DomainError):
            StableSpec(alpha=1.5, beta=0.5)

    def test_levy_closed_form(self):
        # alpha = 1/2, beta = 1 is the Levy law: CDF = erfc(1/sqrt(2x))
        spec = StableSpec(alpha=0.5)
        xs = np.array([0.05, 0.3, 1.0, 2.1981, 10.0, 250.0])
        truth = erfc(1.0 / np.sqrt(2.0 * xs))
        got = stable_cdf(spec, xs)
        assert np.max(np.abs(got - truth)) <= 1e-6

    def test_levy_support_edge(self):
        assert stable_cdf(StableSpec(alpha=0.5), 1e-9) < 1e-12

    def test_levy_median(self):
        z = stable_quantile(StableSpec(alpha=0.5), 0.5)
        assert abs(z - 2.198109338317732) < 1e-6

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5, 1.9])
    def test_quantile_round_trip(self, alpha):
        spec = StableSpec(alpha=alpha)
        for q in (0.05, 0.5, 0.9, 0.99):
            z = stable_quantile(spec, q)
            assert abs(stable_cdf(spec, z) - q) < 1e-6

    def test_median_maps_to_half(self):
        spec = StableSpec(alpha=1.5)
        med = stable_quantile(spec, 0.5)
        assert abs(stable_cdf(spec, med) - 0.5) < 1e-6

    def test_quantile_domain(self):
        with pytest.raises(DomainError):
            stable_quantile(StableSpec(alpha=1.5), 1.0)

    def test_cdf_monotone(self):
        spec = StableSpec(alpha=1.5)
        xs = np.linspace(-5.0, 30.0, 120)
        c = stable_cdf(spec, xs)
        assert np.all(np.diff(c) >= -1e-12)
        assert np.all((c >= 0.0) & (c <= 1.0))

    def test_parameterization_against_normalized_pareto_sums(self):
        # The norming constants are only correct in this parameterization:
        # (S_n - b_n) / (n^{1/a} C_a) must match the stable CDF.
        from normex.baselines import gclt_constants

        n, N = 2000, 200_000
        rng = np.random.default_rng(11)
        for alpha, tol in ((0.5, 0.01), (1.5, 0.03)):
            consts = gclt_constants(n, alpha)
            total = np.zeros(N)
            for lo in range(0, N, 20_000):
                u = 1.0 - rng.random((20_000, n))
                total[lo : lo + 20_000] = np.sum(u ** (-1.0 / alpha), axis=1)
            z = np.sort((total - consts.b_n) / (n ** (1.0 / alpha) * consts.C_alpha))
            spec = StableSpec(alpha=alpha)
            for q in (0.1, 0.5, 0.9, 0.99):
                emp = z[int(q * N)]
                assert abs(stable_cdf(spec, emp) - q) < tol


def test_subadditivity_diagnostic(sims):
    # VaR of the sum vs sum of VaRs at alpha = 2.5, n = 52, q = 0.999:
    # asymptotic subadditivity should already show at this depth
    emp = sims(52, 2.5)
    z_sum = float(emp.values[int(0.999 * emp.n_samples) - 1])
    z_single = float(pareto_quantile(ParetoModel(2.5), 0.999))
    assert z_sum / (52.0 * z_single) <= 1.05
