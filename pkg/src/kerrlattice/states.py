"""Initial and analytic reference states.

Coherent states, Kerr cats, W/GHZ entangled-coherent references, normal-mode
product states, and generalized (number-dependent-phase) coherent states.
All constructors return unit-norm states; cat/ECS normalization keeps the
exact branch cross terms, so small-amplitude tests remain valid.
"""

from __future__ import annotations

import enum

import numpy as np

from .fock import LatticeSpec, PureState, tensor_product

# Largest |alpha|^2 admitted per unit of cutoff.  At the design working
# point (|alpha|^2 = 10, cutoff 20) the truncated tail mass is < 2e-3.
AMPLITUDE_CUTOFF_RATIO = 0.6


class AmplitudeCutoffError(ValueError):
    """Coherent amplitude too large for the requested Fock cutoff."""


class ReferenceKind(enum.Enum):
    W_ECS = "w_ecs"
    W_ESCS = "w_escs"
    GHZ_ECS = "ghz_ecs"
    W_STATE = "w_state"


def check_amplitude(alpha: complex, cutoff: int) -> None:
    if abs(alpha) ** 2 > AMPLITUDE_CUTOFF_RATIO * cutoff:
        raise AmplitudeCutoffError(
            f"|alpha|^2 = {abs(alpha)**2:.3f} exceeds "
            f"{AMPLITUDE_CUTOFF_RATIO} * cutoff = {AMPLITUDE_CUTOFF_RATIO * cutoff:.1f}"
        )


def _coherent_amplitudes(alpha: complex, cutoff: int) -> np.ndarray:
    """Truncated, unnormalized expansion e^{-|a|^2/2} a^n / sqrt(n!)."""
    amps = np.empty(cutoff + 1, dtype=complex)
    amps[0] = 1.0
    for n in range(1, cutoff + 1):
        amps[n] = amps[n - 1] * alpha / np.sqrt(n)
    return amps * np.exp(-abs(alpha) ** 2 / 2)


def coherent_state(alpha: complex, cutoff: int) -> PureState:
    """Single-mode coherent state |alpha>, truncated and renormalized."""
    check_amplitude(alpha, cutoff)
    state = PureState(_coherent_amplitudes(alpha, cutoff), LatticeSpec(1, cutoff))
    return state.normalize()


def generalized_coherent(alpha: complex, phases, cutoff: int) -> PureState:
    """Coherent expansion with a number-dependent phase e^{i phi_n} per |n>."""
    check_amplitude(alpha, cutoff)
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (cutoff + 1,):
        raise ValueError("phases must be defined for n = 0..cutoff")
    amps = _coherent_amplitudes(alpha, cutoff) * np.exp(1j * phases)
    return PureState(amps, LatticeSpec(1, cutoff)).normalize()


def kerr_cat_reference(alpha: complex, cutoff: int) -> PureState:
    """Two-branch cat (e^{-i pi/4}|i a> + e^{i pi/4}|-i a>)/sqrt(2), normalized.

    This is the state a Kerr pi pulse produces from |alpha>; equivalently
    generalized_coherent with phi_n = pi n(n-1)/2.
    """
    check_amplitude(alpha, cutoff)
    amps = np.exp(-1j * np.pi / 4) * _coherent_amplitudes(1j * alpha, cutoff)
    amps += np.exp(1j * np.pi / 4) * _coherent_amplitudes(-1j * alpha, cutoff)
    return PureState(amps, LatticeSpec(1, cutoff)).normalize()


def normal_mode_coherent(alpha: complex, lattice: LatticeSpec) -> PureState:
    """Coherent state of amplitude alpha in the k=0 normal mode.

    Equals the product |alpha/sqrt(M)> at every site (uniform phase).
    """
    m = lattice.sites
    site_alpha = alpha / np.sqrt(m)
    check_amplitude(site_alpha, lattice.cutoff)
    site = coherent_state(site_alpha, lattice.cutoff)
    return tensor_product([site] * m)


def coherent_branch_superposition(branches, lattice: LatticeSpec) -> PureState:
    """Normalized superposition of coherent-product branches.

    branches: iterable of (coefficient, per-site amplitude tuple).  Exact
    cross terms are kept; the state is normalized at the end.
    """
    amps = np.zeros(lattice.dimension, dtype=complex)
    for coeff, site_alphas in branches:
        site_alphas = tuple(site_alphas)
        if len(site_alphas) != lattice.sites:
            raise ValueError("branch amplitude tuple length must equal sites")
        vec = np.ones(1, dtype=complex)
        for a in site_alphas:
            check_amplitude(a, lattice.cutoff)
            vec = np.kron(vec, _coherent_amplitudes(a, lattice.cutoff))
        amps += coeff * vec
    return PureState(amps, lattice).normalize()


def _validate_blocks(blocks, lattice: LatticeSpec):
    blocks = [tuple(int(s) for s in b) for b in blocks]
    flat = [s for b in blocks for s in b]
    if sorted(flat) != list(range(1, lattice.sites + 1)) or any(
        not b for b in blocks
    ):
        raise ValueError("blocks must partition sites 1..M")
    for b in blocks:
        if list(b) != list(range(b[0], b[0] + len(b))):
            raise ValueError(f"block {b} is not a contiguous run of sites")
    return blocks


def ecs_reference(
    kind: ReferenceKind,
    alpha: complex,
    lattice: LatticeSpec,
    blocks=None,
    n_quanta: int | None = None,
    branch_phases=None,
) -> PureState:
    """Analytic reference state of the requested kind.

    W_ECS:   (1/sqrt(R)) sum_l |alpha>_l x vacuum, with |alpha>_l the coherent
             state of block l's lowest normal mode (product of
             |alpha/sqrt(len(block))> over the block, uniform phase).
    W_ESCS:  same with the two-branch Kerr cat per block instead.
    GHZ_ECS: one lattice-wide block; e^{-i pi/4} prod_j |i a/sqrt(M)>
             + e^{i pi/4} prod_j |-i a/sqrt(M)>, over sqrt(2).
    W_STATE: (1/sqrt(M)) sum_j |N>_j x vacuum (needs n_quanta=N).

    branch_phases: optional per-branch complex factors multiplying the W-type
    branch coefficients (the overall state is renormalized).
    """
    m = lattice.sites
    if blocks is None:
        blocks = [[j] for j in range(1, m + 1)]
    blocks = _validate_blocks(blocks, lattice)
    r = len(blocks)

    if kind is ReferenceKind.W_STATE:
        if n_quanta is None:
            raise ValueError("W_STATE needs n_quanta")
        if n_quanta > lattice.cutoff:
            raise ValueError("n_quanta exceeds cutoff")
        amps = np.zeros(lattice.dimension, dtype=complex)
        for j in range(1, m + 1):
            occ = [0] * m
            occ[j - 1] = n_quanta
            amps[lattice.basis_index(occ)] += 1.0
        return PureState(amps, lattice).normalize()

    if kind is ReferenceKind.GHZ_ECS:
        if r != 1:
            raise ValueError("GHZ_ECS takes a single block spanning the lattice")
        site_amp = 1j * alpha / np.sqrt(m)
        branches = [
            (np.exp(-1j * np.pi / 4), (site_amp,) * m),
            (np.exp(1j * np.pi / 4), (-site_amp,) * m),
        ]
        return coherent_branch_superposition(branches, lattice)

    if branch_phases is None:
        branch_phases = [1.0] * r
    branch_phases = list(branch_phases)
    if len(branch_phases) != r:
        raise ValueError("branch_phases length must equal the number of blocks")

    def block_amps(block, a):
        per_site = a / np.sqrt(len(block))
        return tuple(per_site if (j in block) else 0.0 for j in range(1, m + 1))

    branches = []
    for phase, block in zip(branch_phases, blocks):
        if kind is ReferenceKind.W_ECS:
            branches.append((phase, block_amps(block, alpha)))
        elif kind is ReferenceKind.W_ESCS:
            branches.append(
                (phase * np.exp(-1j * np.pi / 4), block_amps(block, 1j * alpha))
            )
            branches.append(
                (phase * np.exp(1j * np.pi / 4), block_amps(block, -1j * alpha))
            )
        else:
            raise ValueError(f"unsupported reference kind: {kind}")
    return coherent_branch_superposition(branches, lattice)
