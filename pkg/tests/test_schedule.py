import numpy as np
import pytest

from kerrlattice.schedule import PiecewiseLinear, ScheduleDomainError


def test_interpolation():
    s = PiecewiseLinear([0.0, 1.0, 3.0], [0.0, 2.0, 2.0])
    assert s(0.5) == pytest.approx(1.0)
    assert s(2.0) == pytest.approx(2.0)


def test_domain_error():
    s = PiecewiseLinear([0.0, 1.0], [1.0, 1.0])
    with pytest.raises(ScheduleDomainError):
        s(1.5)
    with pytest.raises(ScheduleDomainError):
        s(-0.5)
    # round-off slack just beyond the ends is tolerated
    assert s(1.0 + 1e-12) == pytest.approx(1.0)


def test_integral_exact_on_segments():
    s = PiecewiseLinear([0.0, 2.0, 4.0], [0.0, 4.0, 0.0])
    assert s.integral(0.0, 4.0) == pytest.approx(8.0)
    assert s.integral(1.0, 3.0) == pytest.approx(1.0 + 4.0 + 1.0)
    assert s.integral(3.0, 1.0) == pytest.approx(-6.0)


def test_constant():
    s = PiecewiseLinear.constant(3.5, 0.0, 2.0)
    assert s(1.3) == 3.5
    assert s.integral(0.0, 2.0) == pytest.approx(7.0)


def test_breakpoints_must_increase():
    with pytest.raises(ValueError):
        PiecewiseLinear([0.0, 0.0, 1.0], [1.0, 2.0, 3.0])
