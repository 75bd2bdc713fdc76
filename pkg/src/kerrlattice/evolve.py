"""Time integration: classic RK4 for the Lindblad master equation on
density matrices and for Schroedinger dynamics on pure states.

d rho/dt = -i [H/hbar, rho] + sum_j (1/T1) D[c_j] rho + sum_j (1/Tphi) G[c_j] rho

with D[c] r = c r c^d - {c^d c, r}/2 (amplitude damping) and
G[c] r = n r n - {n^2, r}/2, n = c^d c (pure dephasing).  Damping rates
follow chi(t) through the linear T1/Tphi flux model and are evaluated at
the RK4 sub-stage times, like H(t) itself (set freeze_rates_per_step to
evaluate them once per step at the step start instead).

Hermiticity is enforced by symmetrization rho <- (rho + rho^d)/2 every
step; the trace is monitored every step and a drift beyond 1e-6 aborts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numba import njit

from .fock import DensityMatrix, LatticeSpec, PureState, site_operators
from .model import AbhParams, HamiltonianBuilder, from_mhz

TRACE_ABORT = 1e-6
DEFAULT_DT = 1e-11
DEFAULT_CHECKPOINT_EVERY = 5e-11


class NumericalAbort(RuntimeError):
    """Integration aborted on a numerical-hygiene violation (trace drift)."""


@dataclass(frozen=True)
class DampingModel:
    """Linear flux dependence of T1 and Tphi between chi = 0 and chi = chi_max.

    Defaults are the device values: T1 = 3 us, Tphi = 1 s at chi = 0 and
    T1 = 1.5 us, Tphi = 100 us at chi = chi_max.  Interpolation is linear
    in the time constants, not the rates (Tphi ~ 0.5 s at mid-ramp).
    """

    t1_at_zero: float = 3e-6
    t1_at_max: float = 1.5e-6
    tphi_at_zero: float = 1.0
    tphi_at_max: float = 100e-6
    chi_max: float = from_mhz(40.0)

    def __post_init__(self):
        for name in ("t1_at_zero", "t1_at_max", "tphi_at_zero", "tphi_at_max", "chi_max"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def damping_at(chi: float, model: DampingModel) -> tuple[float, float]:
    """(T1, Tphi) at Kerr strength chi, linearly interpolated."""
    slack = 1e-9 * model.chi_max
    if chi < -slack or chi > model.chi_max + slack:
        raise ValueError(f"chi = {chi} outside [0, chi_max = {model.chi_max}]")
    s = min(max(chi / model.chi_max, 0.0), 1.0)
    t1 = model.t1_at_zero + s * (model.t1_at_max - model.t1_at_zero)
    tphi = model.tphi_at_zero + s * (model.tphi_at_max - model.tphi_at_zero)
    return t1, tphi


@dataclass
class Trajectory:
    """Checkpoint record of one integration."""

    times: np.ndarray
    records: dict
    final_state: object = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("checkpoint times must be strictly increasing")

    def record(self, name: str) -> np.ndarray:
        return self.records[name]


@njit(cache=True)
def _commutator_damping(hr, rho, wmat, damped):
    """out = -i (hr - hr^dagger) - wmat o rho, fused single pass."""
    n = hr.shape[0]
    out = np.empty_like(hr)
    for i in range(n):
        for j in range(n):
            v = -1j * (hr[i, j] - np.conj(hr[j, i]))
            if damped:
                v -= wmat[i, j] * rho[i, j]
            out[i, j] = v
    return out


@njit(cache=True)
def _add_jump(out, rho, w, pre, d, post, weight):
    """out += weight * c rho c^dagger for the mode at tensor slot (pre, d, post)."""
    for a in range(pre):
        for n in range(d - 1):
            wn = weight * w[n]
            for b in range(post):
                row = (a * d + n) * post + b
                row_src = (a * d + n + 1) * post + b
                for a2 in range(pre):
                    for n2 in range(d - 1):
                        wnn = wn * w[n2]
                        col = (a2 * d + n2) * post
                        col_src = (a2 * d + n2 + 1) * post
                        for b2 in range(post):
                            out[row, col + b2] += wnn * rho[row_src, col_src + b2]


class _SiteKernel:
    """Precomputed per-lattice structures for the dissipator terms.

    The anticommutator and dephasing parts are diagonal-sandwich maps, so
    they reduce to one elementwise multiply with a rate-weighted matrix
    (memoized on the rate values; holds reuse it, ramps rebuild).  The jump
    term c_j rho c_j^dagger is a weighted shifted copy along the site's
    tensor axes, much cheaper than two sparse products.
    """

    def __init__(self, lattice: LatticeSpec):
        d = lattice.local_dim
        m = lattice.sites
        self.shape6 = []
        for j in range(1, m + 1):
            pre = d ** (j - 1)
            post = d ** (m - j)
            self.shape6.append((pre, d, post))
        self.w = np.sqrt(np.arange(1.0, d))  # <n|c|n+1> = sqrt(n+1)
        nds = site_operators(lattice)["number_diagonals"]
        self.anti = [0.5 * (nd[:, None] + nd[None, :]) for nd in nds]
        self.deph = [0.5 * (nd[:, None] - nd[None, :]) ** 2 for nd in nds]
        self._zero = np.zeros((lattice.dimension, lattice.dimension))
        # kernels are shared between concurrent runs on the same lattice;
        # keep (key, matrix) in one attribute so readers see a consistent pair
        self._rate_cache = (None, None)

    def damping_matrix(self, gamma1s, gammaphis):
        key = (tuple(gamma1s), tuple(gammaphis))
        cached_key, cached_mat = self._rate_cache
        if key == cached_key:
            return cached_mat
        if not any(gamma1s) and not any(gammaphis):
            mat = None
        else:
            mat = sum(
                g1 * a + gp * dp
                for g1, gp, a, dp in zip(gamma1s, gammaphis, self.anti, self.deph)
            )
            mat = np.ascontiguousarray(mat)
        self._rate_cache = (key, mat)
        return mat


@lru_cache(maxsize=32)
def _site_kernel(lattice: LatticeSpec) -> _SiteKernel:
    return _SiteKernel(lattice)


def _lindblad_deriv(rho, h_csr, kernel, gamma1s, gammaphis):
    """Right-hand side on raw arrays.  Assumes rho Hermitian (so the
    commutator is Hr - (Hr)^dagger, one sparse product instead of two)."""
    hr = h_csr @ rho
    wmat = kernel.damping_matrix(gamma1s, gammaphis)
    out = _commutator_damping(
        hr, rho, kernel._zero if wmat is None else wmat, wmat is not None
    )
    for j, g1 in enumerate(gamma1s):
        if g1 != 0.0:
            pre, d, post = kernel.shape6[j]
            _add_jump(out, rho, kernel.w, pre, d, post, g1)
    return out


def lindblad_rhs(rho, h, lattice: LatticeSpec, rates) -> np.ndarray:
    """d rho/dt for Hermitian rho under H/hbar = h and per-site rates.

    rates: sequence of (1/T1, 1/Tphi) pairs, one per site.  Returns the raw
    derivative array (traceless to float precision).
    """
    rho_arr = rho.values if isinstance(rho, DensityMatrix) else np.asarray(rho)
    h_csr = h.matrix if hasattr(h, "matrix") else h
    if rho_arr.shape[0] != h_csr.shape[0] or rho_arr.shape[0] != lattice.dimension:
        raise ValueError("dimension mismatch between rho, H, and lattice")
    rates = list(rates)
    if len(rates) != lattice.sites:
        raise ValueError("need one (1/T1, 1/Tphi) pair per site")
    return _lindblad_deriv(
        rho_arr,
        h_csr,
        _site_kernel(lattice),
        tuple(r[0] for r in rates),
        tuple(r[1] for r in rates),
    )


def _checkpoint_steps(n_steps: int, dt: float, every: float):
    stride = max(1, int(round(every / dt)))
    marks = set(range(0, n_steps + 1, stride))
    marks.add(n_steps)
    return marks


def _step_count(t0: float, t1: float, dt: float) -> int:
    span = t1 - t0
    if span < 0:
        raise ValueError("t_span must be increasing")
    n = int(round(span / dt))
    if abs(n * dt - span) > 1e-6 * max(span, dt):
        raise ValueError(
            f"t_span width {span:.6e} is not an integer multiple of dt = {dt:.1e}"
        )
    return n


def evolve_density(
    rho0: DensityMatrix,
    params: AbhParams,
    damping: DampingModel | None,
    dt: float = DEFAULT_DT,
    t_span: tuple[float, float] = (0.0, 0.0),
    checkpoint_every: float = DEFAULT_CHECKPOINT_EVERY,
    observables: dict | None = None,
    freeze_rates_per_step: bool = False,
) -> Trajectory:
    """RK4 integration of the master equation with time-dependent controls.

    observables: mapping name -> f(state_array, t) evaluated at checkpoints
    (state_array is the raw 2-d density array).  Pass damping=None for
    closed-system density evolution.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    lattice = params.lattice
    builder = HamiltonianBuilder(params)
    kernel = _site_kernel(lattice)
    m = lattice.sites

    t0, t1 = t_span
    n_steps = _step_count(t0, t1, dt)
    observables = observables or {}
    if "trace_re" in observables:
        raise ValueError("'trace_re' is recorded automatically")
    marks = _checkpoint_steps(n_steps, dt, checkpoint_every)

    def rates_at(t):
        if damping is None:
            return (0.0,) * m, (0.0,) * m
        t1_, tphi_ = damping_at(params.chi_at(t), damping)
        return (1.0 / t1_,) * m, (1.0 / tphi_,) * m

    def deriv(rho, t, frozen):
        g1s, gps = frozen if frozen is not None else rates_at(t)
        return _lindblad_deriv(rho, builder.matrix_at(t), kernel, g1s, gps)

    rho = rho0.values.astype(complex).copy()
    times, recs = [], {name: [] for name in observables}
    recs["trace_re"] = []

    def take_checkpoint(t):
        times.append(t)
        recs["trace_re"].append(float(np.trace(rho).real))
        for name, fn in observables.items():
            recs[name].append(fn(rho, t))

    take_checkpoint(t0)
    max_trace_dev = abs(np.trace(rho).real - 1.0)
    for i in range(n_steps):
        t = t0 + i * dt
        frozen = rates_at(t) if freeze_rates_per_step else None
        k1 = deriv(rho, t, frozen)
        k2 = deriv(rho + (0.5 * dt) * k1, t + 0.5 * dt, frozen)
        k3 = deriv(rho + (0.5 * dt) * k2, t + 0.5 * dt, frozen)
        k4 = deriv(rho + dt * k3, t + dt, frozen)
        rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
        dev = abs(np.trace(rho).real - 1.0)
        max_trace_dev = max(max_trace_dev, dev)
        if not np.isfinite(dev) or dev > TRACE_ABORT:
            raise NumericalAbort(
                f"trace drifted to |tr-1| = {dev:.3e} at t = {t + dt:.3e} s "
                f"(step {i + 1}/{n_steps}, dt = {dt:.1e})"
            )
        if (i + 1) in marks:
            take_checkpoint(t0 + (i + 1) * dt)

    return Trajectory(
        times=np.asarray(times),
        records={k: np.asarray(v) for k, v in recs.items()},
        final_state=DensityMatrix(rho, lattice),
        meta={"dt": dt, "steps": n_steps, "max_trace_deviation": max_trace_dev},
    )


def evolve_pure(
    psi0: PureState,
    params: AbhParams,
    dt: float = DEFAULT_DT,
    t_span: tuple[float, float] = (0.0, 0.0),
    checkpoint_every: float = DEFAULT_CHECKPOINT_EVERY,
    observables: dict | None = None,
) -> Trajectory:
    """RK4 on d psi/dt = -i (H/hbar) psi, renormalizing every step."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    builder = HamiltonianBuilder(params)
    t0, t1 = t_span
    n_steps = _step_count(t0, t1, dt)
    observables = observables or {}
    if "norm" in observables:
        raise ValueError("'norm' is recorded automatically")
    marks = _checkpoint_steps(n_steps, dt, checkpoint_every)

    def deriv(psi, t):
        return -1j * (builder.matrix_at(t) @ psi)

    psi = psi0.amplitudes.astype(complex).copy()
    times, recs = [], {name: [] for name in observables}
    recs["norm"] = []
    max_norm_dev = 0.0

    def take_checkpoint(t, norm):
        times.append(t)
        recs["norm"].append(norm)
        for name, fn in observables.items():
            recs[name].append(fn(psi, t))

    take_checkpoint(t0, float(np.linalg.norm(psi)))
    for i in range(n_steps):
        t = t0 + i * dt
        k1 = deriv(psi, t)
        k2 = deriv(psi + (0.5 * dt) * k1, t + 0.5 * dt)
        k3 = deriv(psi + (0.5 * dt) * k2, t + 0.5 * dt)
        k4 = deriv(psi + dt * k3, t + dt)
        psi += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        norm = float(np.linalg.norm(psi))
        max_norm_dev = max(max_norm_dev, abs(norm - 1.0))
        if not np.isfinite(norm) or abs(norm - 1.0) > TRACE_ABORT:
            raise NumericalAbort(
                f"norm drifted to |n-1| = {abs(norm - 1.0):.3e} at "
                f"t = {t + dt:.3e} s (step {i + 1}/{n_steps}, dt = {dt:.1e})"
            )
        psi /= norm
        if (i + 1) in marks:
            take_checkpoint(t0 + (i + 1) * dt, norm)

    return Trajectory(
        times=np.asarray(times),
        records={k: np.asarray(v) for k, v in recs.items()},
        final_state=PureState(psi, params.lattice),
        meta={"dt": dt, "steps": n_steps, "max_norm_deviation": max_norm_dev},
    )
