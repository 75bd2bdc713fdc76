import math

import numpy as np
import pytest

from kerrlattice.coherence import (
    CoherenceBudget,
    SwapRates,
    coherence_fraction,
    decoherence_prep,
    decoherence_swap,
)

# regression anchor for the device-default budget at |alpha|^2 = 10,
# frozen from the brute-force sum below
FRACTION_AT_10 = 0.6117182427022023


def brute_force_fraction(alpha, budget):
    """Independent oracle: per-term math.exp, reversed-order fsum."""
    lam = abs(alpha) ** 2
    terms = []
    for n in range(budget.n_terms, -1, -1):
        log_w = -lam + n * math.log(lam) - math.lgamma(n + 1) if lam > 0 else (
            0.0 if n == 0 else -math.inf
        )
        d_prep = math.exp(
            -budget.prep_time * (n / budget.t1_eff + n**2 / budget.tphi_eff)
        )
        d5a = math.exp(-budget.dt5a * n / budget.rates.swap_coefficient_5a)
        d5b = math.exp(-budget.dt5b * n / budget.rates.swap_coefficient_5b)
        terms.append(math.exp(log_w) * d_prep * d5a * d5b)
    return math.fsum(terms)


class TestSwapRates:
    def test_reproduces_documented_coefficients(self):
        r = SwapRates()
        assert r.swap_coefficient_5a == pytest.approx(3.42e-6, rel=0.01)
        assert r.swap_coefficient_5b == pytest.approx(7.67e-6, rel=0.01)
        # the backed-out rates are much tighter than the 1% requirement
        assert r.swap_coefficient_5a == pytest.approx(3.42e-6, rel=1e-4)
        assert r.swap_coefficient_5b == pytest.approx(7.67e-6, rel=1e-4)


class TestDecoherencePrep:
    def test_identity_at_zero(self):
        assert decoherence_prep(0, CoherenceBudget()) == 1.0

    def test_device_point(self):
        # (0.02+0.002+0.02+0.002) us * (10/2us + 100/100us) = 0.264
        b = CoherenceBudget()
        assert decoherence_prep(10, b) == pytest.approx(math.exp(-0.264), rel=1e-12)

    def test_doubling_times_squares_factor(self):
        b = CoherenceBudget()
        doubled = CoherenceBudget(
            dt1=2 * b.dt1, dt2=2 * b.dt2, dt3=2 * b.dt3, dt4=2 * b.dt4
        )
        assert decoherence_prep(7, doubled) == pytest.approx(
            decoherence_prep(7, b) ** 2, rel=1e-12
        )

    def test_negative_n_rejected(self):
        with pytest.raises(ValueError):
            decoherence_prep(-1, CoherenceBudget())


class TestDecoherenceSwap:
    def test_identity_at_zero(self):
        assert decoherence_swap(0, 1e-8, 3.42e-6) == 1.0

    def test_cpw_lc_step(self):
        assert decoherence_swap(1, 0.01e-6, 3.42e-6) == pytest.approx(0.99708, abs=1e-5)

    def test_lc_mech_step(self):
        assert decoherence_swap(1, 0.16e-6, 7.67e-6) == pytest.approx(0.97936, abs=1e-5)


class TestCoherenceFraction:
    def test_vacuum(self):
        assert coherence_fraction(0.0, CoherenceBudget()) == pytest.approx(1.0)

    def test_above_sixty_percent_at_10(self):
        val = coherence_fraction(np.sqrt(10), CoherenceBudget())
        assert val > 0.60

    def test_brute_force_oracle_and_regression(self):
        b = CoherenceBudget()
        val = coherence_fraction(np.sqrt(10), b)
        oracle = brute_force_fraction(np.sqrt(10), b)
        assert val == pytest.approx(oracle, abs=1e-12)
        assert val == pytest.approx(FRACTION_AT_10, abs=1e-12)

    def test_monotone_in_alpha(self):
        b = CoherenceBudget()
        vals = [coherence_fraction(a, b) for a in np.linspace(0.2, 6.0, 25)]
        assert all(x >= y - 1e-12 for x, y in zip(vals, vals[1:]))

    def test_monotone_in_each_duration(self):
        base = CoherenceBudget()
        alpha = np.sqrt(10)
        ref = coherence_fraction(alpha, base)
        for name in ("dt1", "dt2", "dt3", "dt4", "dt5a", "dt5b"):
            longer = CoherenceBudget(**{name: getattr(base, name) * 3})
            assert coherence_fraction(alpha, longer) < ref

    def test_factors_in_unit_interval(self):
        b = CoherenceBudget()
        for n in (0, 1, 5, 20, 100):
            assert 0.0 < decoherence_prep(n, b) <= 1.0
            assert 0.0 < decoherence_swap(n, b.dt5a, b.rates.swap_coefficient_5a) <= 1.0
        for a in (0.0, 1.0, 3.0, 6.0):
            assert 0.0 < coherence_fraction(a, b) <= 1.0

    def test_n_terms_coverage_guard(self):
        with pytest.raises(ValueError):
            coherence_fraction(10.0, CoherenceBudget(n_terms=500))
