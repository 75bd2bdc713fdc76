"""Attractive Bose-Hubbard model with time-dependent controls.

H/hbar = sum_j [eps_j n_j - (chi(t)/2) n_j (n_j - 1)]
         - sum_links kappa_l(t) (c_i^d c_j + h.c.)

Unit convention: every frequency handed to this module is ANGULAR (rad/s).
User-facing numbers in configs and the printed device values are cyclic
(MHz / GHz); convert with from_mhz / from_ghz at the boundary.  The 25 ns
Kerr revival at chi/2pi = 40 MHz fixes this interpretation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .fock import LatticeSpec, SparseOperator, site_operators

TWO_PI = 2.0 * math.pi

# Operationalized "much less than" thresholds (documented constants).
NONLINEARITY_RATIO_MAX = 0.2


def from_mhz(f_mhz: float) -> float:
    """Cyclic MHz -> angular rad/s."""
    return TWO_PI * f_mhz * 1e6


def from_ghz(f_ghz: float) -> float:
    return TWO_PI * f_ghz * 1e9


def _as_time_function(value):
    if callable(value):
        return value
    v = float(value)
    return lambda t: v


@dataclass(frozen=True)
class AbhParams:
    """Model parameters: Kerr strength chi(t), per-link hoppings, detunings.

    chi: scalar or callable t -> rad/s (must stay >= 0)
    kappa: one scalar/callable per lattice link, in lattice.links() order
    site_offsets: per-site detuning eps_j (rad/s), default all zero
    """

    lattice: LatticeSpec
    chi: object
    kappa: tuple
    site_offsets: tuple = field(default=None)

    def __post_init__(self):
        links = self.lattice.links()
        kappa = tuple(self.kappa)
        if len(kappa) != len(links):
            raise ValueError(
                f"need {len(links)} kappa entries for this lattice, got {len(kappa)}"
            )
        object.__setattr__(self, "kappa", kappa)
        offs = self.site_offsets
        if offs is None:
            offs = (0.0,) * self.lattice.sites
        offs = tuple(float(x) for x in offs)
        if len(offs) != self.lattice.sites:
            raise ValueError("site_offsets length must equal sites")
        object.__setattr__(self, "site_offsets", offs)

    def chi_at(self, t: float) -> float:
        v = _as_time_function(self.chi)(t)
        if v < 0:
            raise ValueError(f"chi(t={t}) = {v} is negative")
        return v

    def kappa_at(self, t: float):
        vals = tuple(_as_time_function(k)(t) for k in self.kappa)
        if any(v < 0 for v in vals):
            raise ValueError(f"kappa(t={t}) has a negative entry: {vals}")
        return vals


class HamiltonianBuilder:
    """Precomputed pieces of H(t)/hbar for fast repeated builds.

    The diagonal splits into a static detuning part and a Kerr part scaled
    by chi(t); each link contributes -kappa_l(t) times a fixed hopping
    operator.  Consecutive evaluations with identical control values reuse
    the previous sparse matrix (ramps change it, holds do not).
    """

    def __init__(self, params: AbhParams):
        self.params = params
        lat = params.lattice
        ops = site_operators(lat)
        self._num_diags = ops["number_diagonals"]
        self._hops = [h.matrix for h in ops["hoppings"]]
        self._eps_diag = np.sum(
            [e * nd for e, nd in zip(params.site_offsets, self._num_diags)], axis=0
        )
        self._kerr_diag = np.sum([nd * (nd - 1.0) for nd in self._num_diags], axis=0)
        self._last_key = None
        self._last_matrix = None

    def controls_at(self, t: float):
        return self.params.chi_at(t), self.params.kappa_at(t)

    def matrix_at(self, t: float):
        chi, kappas = self.controls_at(t)
        key = (chi, kappas)
        if key == self._last_key:
            return self._last_matrix
        diag = self._eps_diag - 0.5 * chi * self._kerr_diag
        h = sp.diags(diag.astype(complex), format="csr")
        for k, hop in zip(kappas, self._hops):
            if k != 0.0:
                h = h - k * hop
        h = h.tocsr()
        self._last_key = key
        self._last_matrix = h
        return h


def build_hamiltonian(params: AbhParams, t: float) -> SparseOperator:
    """H(t)/hbar as a sparse operator (Hermitian, conserves total number)."""
    return SparseOperator(HamiltonianBuilder(params).matrix_at(t))


def tau(kappa: float, chi: float, n_quanta: int) -> float:
    """Dimensionless control kappa'' / (chi (N-1))."""
    if n_quanta <= 1:
        raise ValueError("tau is undefined for N <= 1")
    if chi == 0:
        raise ValueError("tau is undefined for chi = 0")
    return kappa / (chi * (n_quanta - 1))


@dataclass(frozen=True)
class CriticalPoints:
    tau1: float
    tau2: float


def critical_taus(sites: int) -> CriticalPoints:
    """Boundaries of the cat (tau < tau1) and superfluid (tau > tau2) regimes.

    tau1 ~ 0.25 independent of lattice size; tau2 equals tau1 at M=2, is
    taken at the conservative 0.3 for 3 <= M <= 5, and follows the closed
    form [2 M sin^2(pi/M)]^-1 for M > 5.
    """
    if sites < 2:
        raise ValueError("critical taus need at least 2 sites")
    tau1 = 0.25
    if sites == 2:
        tau2 = 0.25
    elif sites <= 5:
        tau2 = 0.3
    else:
        tau2 = 1.0 / (2.0 * sites * math.sin(math.pi / sites) ** 2)
    return CriticalPoints(tau1, tau2)


def min_fock_component(chi_max: float, kappa_max: float) -> int:
    """Smallest Fock component that crosses the transition: ceil(4 k/chi + 1)."""
    if chi_max <= 0:
        raise ValueError("chi_max must be positive")
    return int(math.ceil(4.0 * kappa_max / chi_max + 1.0 - 1e-9))


def adiabatic_chi_rate_limit(kappa_max: float, tau2: float, n_quanta: int) -> float:
    """Upper bound on dchi/dt: kappa_max^2 / (10 tau2 (n-1)), rad/s^2."""
    if n_quanta < 2:
        raise ValueError("need n >= 2")
    return kappa_max**2 / (10.0 * tau2 * (n_quanta - 1))


def min_ramp_up_duration(kappa_max: float, tau2: float, n_quanta: int) -> float:
    """Shortest adiabatic ramp-up time implied by the rate limit.

    The chi window that must be traversed at the limited rate is
    kappa_max/(n-1), giving 10 tau2 / kappa_max: 0.040 tau2 us at
    kappa_max/2pi = 40 MHz, the bound the protocol's 10 ns ramp sits at.
    """
    window = kappa_max / (n_quanta - 1)
    return window / adiabatic_chi_rate_limit(kappa_max, tau2, n_quanta)


def disorder_bound(tau2: float) -> float:
    """Largest tolerable on-site energy spread, 2pi x 4/tau2 MHz in rad/s."""
    if tau2 <= 0:
        raise ValueError("tau2 must be positive")
    return TWO_PI * 4e6 / tau2


def check_disorder(site_offsets, tau2: float):
    """(spread, bound, ok) for a set of per-site detunings."""
    offs = [float(x) for x in site_offsets]
    spread = (max(offs) - min(offs)) if offs else 0.0
    bound = disorder_bound(tau2)
    return spread, bound, spread <= bound


@dataclass(frozen=True)
class NonlinearityCheck:
    ratio: float
    passed: bool


def validate_nonlinearity(chi: float, omega_c0: float, alpha_sq: float) -> NonlinearityCheck:
    """Check chi << omega_c0 / (2 |alpha|^2), needed to drop higher-order
    terms of the circuit nonlinearity.  Operationalized as
    ratio = 2 chi |alpha|^2 / omega_c0 <= 0.2."""
    if omega_c0 <= 0:
        raise ValueError("omega_c0 must be positive")
    ratio = 2.0 * chi * alpha_sq / omega_c0
    return NonlinearityCheck(ratio=ratio, passed=ratio <= NONLINEARITY_RATIO_MAX)
