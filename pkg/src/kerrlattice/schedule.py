"""Piecewise-linear time functions for control parameters."""

from __future__ import annotations

import numpy as np


class ScheduleDomainError(ValueError):
    """Raised when a schedule is evaluated outside its time domain."""


class PiecewiseLinear:
    """Piecewise-linear function of time.

    Defined by strictly increasing breakpoints and the values taken there;
    between breakpoints the value is linearly interpolated.  Evaluation
    outside [t_start, t_end] raises ScheduleDomainError (a small relative
    slack absorbs float round-off from step accumulation).
    """

    __slots__ = ("times", "values", "_slack")

    def __init__(self, times, values):
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape or times.size < 1:
            raise ValueError("times and values must be equal-length 1-d arrays")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("breakpoints must be strictly increasing")
        self.times = times
        self.values = values
        span = float(times[-1] - times[0])
        self._slack = 1e-9 * max(span, abs(float(times[-1])), 1e-15)

    @classmethod
    def constant(cls, value, t_start, t_end):
        return cls([t_start, t_end], [value, value])

    @property
    def domain(self):
        return float(self.times[0]), float(self.times[-1])

    def __call__(self, t):
        t0, t1 = self.domain
        if t < t0 - self._slack or t > t1 + self._slack:
            raise ScheduleDomainError(
                f"t={t!r} outside schedule domain [{t0!r}, {t1!r}]"
            )
        return float(np.interp(t, self.times, self.values))

    def integral(self, a, b):
        """Exact integral over [a, b] (trapezoid on the linear segments)."""
        if b < a:
            return -self.integral(b, a)
        # integration grid: interval ends plus interior breakpoints
        inside = self.times[(self.times > a) & (self.times < b)]
        grid = np.concatenate(([a], inside, [b]))
        vals = np.array([self(t) for t in grid])
        return float(np.trapezoid(vals, grid))
