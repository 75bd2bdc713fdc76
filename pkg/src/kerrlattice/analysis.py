"""Observables and diagnostics.

Fidelity conventions (both appear, with different jobs):
  * overlap_fidelity returns the MODULUS |<ref|psi>| (for a density input,
    sqrt(<ref|rho|ref>)), the quantity plotted in the protocol traces.
  * uhlmann_fidelity returns the SQUARED Uhlmann fidelity
    [tr sqrt(sqrt(rho) rho' sqrt(rho))]^2, which the superfidelity bounds
    bracket.  It is a small-instance test oracle, guarded to dim <= 64;
    production comparisons use the cheap bounds.

Wigner convention: W(x, p) = (1/pi) tr[rho D(beta) P D(beta)^dagger] with
beta = (x + i p)/sqrt(2) and P the photon-number parity, so that
integral W dx dp = 1 and the vacuum peaks at 1/pi.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from .fock import DensityMatrix, LatticeSpec, PureState, site_operators

UHLMANN_MAX_DIM = 64


def _as_vector(state) -> np.ndarray:
    if isinstance(state, PureState):
        return state.amplitudes
    arr = np.asarray(state)
    if arr.ndim != 1:
        raise TypeError("expected a pure state (1-d amplitudes)")
    return arr


def _as_matrix(rho) -> np.ndarray:
    if isinstance(rho, DensityMatrix):
        return rho.values
    if isinstance(rho, PureState):
        a = rho.amplitudes
        return np.outer(a, a.conj())
    arr = np.asarray(rho)
    if arr.ndim != 2:
        raise TypeError("expected a density matrix (2-d values)")
    return arr


def _is_pure(state) -> bool:
    if isinstance(state, PureState):
        return True
    if isinstance(state, DensityMatrix):
        return False
    return np.asarray(state).ndim == 1


def overlap_fidelity(state, reference) -> float:
    """|<reference|state>| for pure input, sqrt(<ref|rho|ref>) for density input."""
    ref = _as_vector(reference)
    if not _is_pure(state):
        rho = _as_matrix(state)
        if rho.shape[0] != ref.size:
            raise ValueError("dimension mismatch")
        val = np.real(np.vdot(ref, rho @ ref))
        return float(np.sqrt(max(val, 0.0)))
    vec = _as_vector(state)
    if vec.size != ref.size:
        raise ValueError("dimension mismatch")
    return float(abs(np.vdot(ref, vec)))


def trace_of(rho) -> complex:
    return complex(np.trace(_as_matrix(rho)))


def purity(rho) -> float:
    """tr rho^2 (computed as the squared Frobenius norm of Hermitian rho)."""
    m = _as_matrix(rho)
    return float(np.vdot(m, m).real)


def superfidelity_bounds(rho, rho_prime) -> tuple[float, float]:
    """Cheap (lower, upper) brackets on the squared Uhlmann fidelity.

    upper = tr(r r') + sqrt((1 - tr r^2)(1 - tr r'^2))
    lower = tr(r r') + sqrt(2) sqrt((tr r r')^2 - tr(r^2 r'^2))
    Inner square-root arguments are clamped at zero (floating negatives
    appear near purity).
    """
    a = _as_matrix(rho)
    b = _as_matrix(rho_prime)
    t_ab = float(np.vdot(a.conj().T, b).real)  # tr(a b), a Hermitian
    t_a2 = purity(a)
    t_b2 = purity(b)
    upper = t_ab + np.sqrt(max(0.0, (1.0 - t_a2) * (1.0 - t_b2)))
    t_a2b2 = float(np.trace(a @ a @ b @ b).real)
    lower = t_ab + np.sqrt(2.0) * np.sqrt(max(0.0, t_ab**2 - t_a2b2))
    return float(lower), float(upper)


def uhlmann_fidelity(rho, rho_prime) -> float:
    """Exact squared Uhlmann fidelity [tr sqrt(sqrt(r) r' sqrt(r))]^2.

    Small-instance oracle only (dim <= 64): eigen-decompose, take the
    nuclear norm of sqrt(rho) sqrt(rho').
    """
    a = _as_matrix(rho)
    b = _as_matrix(rho_prime)
    if a.shape[0] > UHLMANN_MAX_DIM:
        raise ValueError(f"uhlmann_fidelity is guarded to dim <= {UHLMANN_MAX_DIM}")

    def _sqrtm(m):
        w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
        w = np.clip(w, 0.0, None)
        return (v * np.sqrt(w)) @ v.conj().T

    s = np.linalg.svd(_sqrtm(a) @ _sqrtm(b), compute_uv=False)
    return float(np.sum(s) ** 2)


def single_particle_correlator(state, site_i: int, site_j: int, lattice: LatticeSpec) -> complex:
    """<c_i^dagger c_j> between two (1-based) sites."""
    for s in (site_i, site_j):
        if not 1 <= s <= lattice.sites:
            raise ValueError(f"site {s} out of range 1..{lattice.sites}")
    anns = site_operators(lattice)["annihilators"]
    ai = anns[site_i - 1].matrix
    aj = anns[site_j - 1].matrix
    if _is_pure(state):
        vec = _as_vector(state)
        return complex(np.vdot(ai @ vec, aj @ vec))
    rho = _as_matrix(state)
    k = (ai.conj().T @ aj).tocsr()  # c_i^dagger c_j
    return complex(k.multiply(rho.T).sum())


def number_fluctuations(state, site: int, lattice: LatticeSpec) -> float:
    """Normal-ordered on-site fluctuation <c^d c^d c c> - <c^d c>^2."""
    nd = site_operators(lattice)["number_diagonals"][site - 1]
    if _is_pure(state):
        probs = np.abs(_as_vector(state)) ** 2
    else:
        probs = np.real(np.diag(_as_matrix(state)))
    mean_n = float(probs @ nd)
    mean_nn1 = float(probs @ (nd * (nd - 1.0)))
    return mean_nn1 - mean_n**2


def total_number_variance(state, lattice: LatticeSpec) -> float:
    """Site-summed full number variance sum_j (<n_j^2> - <n_j>^2).

    For the N-quanta W-state this equals N^2 (M-1)/M.
    """
    diags = site_operators(lattice)["number_diagonals"]
    if _is_pure(state):
        probs = np.abs(_as_vector(state)) ** 2
    else:
        probs = np.real(np.diag(_as_matrix(state)))
    total = 0.0
    for nd in diags:
        mean_n = float(probs @ nd)
        mean_n2 = float(probs @ (nd * nd))
        total += mean_n2 - mean_n**2
    return total


def quadrature_variance(state, theta: float) -> float:
    """Var(X_theta) with X_theta = (c e^{-i theta} + c^d e^{i theta})/sqrt(2).

    Single-mode input (reduce first); the vacuum value is 1/2.
    """
    m = _as_matrix(state)
    d = m.shape[0]
    a = np.diag(np.sqrt(np.arange(1.0, d)), 1)
    x = (a * np.exp(-1j * theta) + a.conj().T * np.exp(1j * theta)) / np.sqrt(2.0)
    mean_x = float(np.trace(m @ x).real)
    mean_x2 = float(np.trace(m @ (x @ x)).real)
    return mean_x2 - mean_x**2


def min_quadrature_variance(state, n_angles: int = 181) -> tuple[float, float]:
    """(min variance, argmin theta) over a scan of quadrature angles in [0, pi)."""
    thetas = np.linspace(0.0, np.pi, n_angles, endpoint=False)
    variances = [quadrature_variance(state, th) for th in thetas]
    k = int(np.argmin(variances))
    return float(variances[k]), float(thetas[k])


@dataclass
class WignerGrid:
    """Rectangular (x, p) grid carrying Wigner values."""

    x_min: float = -6.0
    x_max: float = 6.0
    p_min: float = -6.0
    p_max: float = 6.0
    n_x: int = 121
    n_p: int = 121
    values: np.ndarray | None = field(default=None)

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_x)

    @property
    def ps(self) -> np.ndarray:
        return np.linspace(self.p_min, self.p_max, self.n_p)

    def integral(self) -> float:
        dx = (self.x_max - self.x_min) / (self.n_x - 1)
        dp = (self.p_max - self.p_min) / (self.n_p - 1)
        return float(np.sum(self.values) * dx * dp)


def wigner(rho_single_mode, grid: WignerGrid | None = None, mass_warning: float = 0.95) -> WignerGrid:
    """Wigner function via the displaced-parity expectation.

    W(x, p) = (1/pi) tr[rho D(beta) P D(beta)^d] = (1/pi) tr[rho D(2 beta) P]
    at beta = (x+ip)/sqrt(2).  The displacement matrix elements are the
    closed-form associated-Laguerre expressions, which are exact for the
    truncated density matrix (a truncated matrix exponential is not, and
    misbehaves once the displaced state hits the cutoff).  Warns if the grid
    captures less than `mass_warning` of the state.
    """
    rho = _as_matrix(rho_single_mode)
    d = rho.shape[0]
    if grid is None:
        grid = WignerGrid()
    xs, ps = np.meshgrid(grid.xs, grid.ps)
    gamma = np.sqrt(2.0) * (xs + 1j * ps)  # 2 beta
    gsq = np.abs(gamma) ** 2
    envelope = np.exp(-0.5 * gsq)
    log_fact = gammaln(np.arange(d) + 1.0)
    acc = np.zeros_like(gamma)
    for n in range(d):
        sign = (-1.0) ** n
        for m in range(n, d):
            k = m - n
            base = (
                np.exp(0.5 * (log_fact[n] - log_fact[m]))
                * envelope
                * eval_genlaguerre(n, k, gsq)
            )
            if m == n:
                acc += sign * rho[n, m] * base
            else:
                # <m|D|n> and <n|D|m> share the Laguerre factor
                acc += sign * rho[n, m] * base * gamma**k
                acc += ((-1.0) ** m) * rho[m, n] * base * (-np.conj(gamma)) ** k
    values = np.real(acc) / np.pi
    out = WignerGrid(
        grid.x_min, grid.x_max, grid.p_min, grid.p_max, grid.n_x, grid.n_p, values
    )
    if out.integral() < mass_warning:
        warnings.warn(
            f"Wigner grid captures only {out.integral():.3f} of the state; "
            "enlarge the window",
            stacklevel=2,
        )
    return out
