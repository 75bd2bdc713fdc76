"""Truncated-Fock-space linear algebra.

Basis convention (fixed, all modules depend on it): the tensor index is
mixed-radix with site 1 most significant, i.e. for local dimension
d = cutoff+1 the basis state |n_1, ..., n_M> sits at index
n_1*d^(M-1) + n_2*d^(M-2) + ... + n_M.  This matches chained np.kron with
the site-1 factor first.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class LatticeSpec:
    """One-dimensional chain of bosonic modes with a per-site Fock cutoff.

    sites:    number of lattice sites M >= 1
    cutoff:   maximum occupation per site (local basis size cutoff+1)
    periodic: close the chain with a link from site M to site 1
    """

    sites: int
    cutoff: int
    periodic: bool = False

    def __post_init__(self):
        if self.sites < 1:
            raise ValueError("sites must be >= 1")
        if self.cutoff < 1:
            raise ValueError("cutoff must be >= 1")

    @property
    def local_dim(self) -> int:
        return self.cutoff + 1

    @property
    def dimension(self) -> int:
        return self.local_dim**self.sites

    def links(self):
        """Nearest-neighbour links as 1-based (i, j) pairs.

        Periodic closure adds (M, 1); for M == 2 that would duplicate the
        single physical pair, so the chain then has exactly one link.
        """
        pairs = [(j, j + 1) for j in range(1, self.sites)]
        if self.periodic and self.sites > 2:
            pairs.append((self.sites, 1))
        return pairs

    def basis_index(self, occupations) -> int:
        occ = tuple(int(n) for n in occupations)
        if len(occ) != self.sites:
            raise ValueError("occupation tuple length must equal sites")
        if any(n < 0 or n > self.cutoff for n in occ):
            raise ValueError("occupation outside [0, cutoff]")
        return int(np.ravel_multi_index(occ, (self.local_dim,) * self.sites))

    def occupations(self, index: int):
        return tuple(
            int(v) for v in np.unravel_index(index, (self.local_dim,) * self.sites)
        )

    def site_number_diagonal(self, site: int) -> np.ndarray:
        """Occupation number of `site` (1-based) along the tensor basis."""
        if not 1 <= site <= self.sites:
            raise ValueError(f"site {site} out of range 1..{self.sites}")
        d = self.local_dim
        n_local = np.arange(d, dtype=float)
        pre = d ** (site - 1)
        post = d ** (self.sites - site)
        return np.tile(np.repeat(n_local, post), pre)


class SparseOperator:
    """Complex sparse matrix on the (tensor-product) Fock space.

    Thin wrapper over a scipy CSR matrix; duplicate (row, col) entries are
    coalesced by summation at construction.
    """

    __slots__ = ("matrix",)

    def __init__(self, matrix):
        m = sp.csr_matrix(matrix, dtype=complex)
        if m.shape[0] != m.shape[1]:
            raise ValueError("operator must be square")
        m.sum_duplicates()
        self.matrix = m

    @classmethod
    def from_entries(cls, dimension: int, entries) -> "SparseOperator":
        rows, cols, vals = [], [], []
        for r, c, v in entries:
            if not (0 <= r < dimension and 0 <= c < dimension):
                raise ValueError(f"entry ({r}, {c}) outside dimension {dimension}")
            rows.append(r)
            cols.append(c)
            vals.append(v)
        m = sp.coo_matrix(
            (np.asarray(vals, dtype=complex), (rows, cols)),
            shape=(dimension, dimension),
        )
        return cls(m.tocsr())

    @classmethod
    def identity(cls, dimension: int) -> "SparseOperator":
        return cls(sp.identity(dimension, dtype=complex, format="csr"))

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def entries(self):
        coo = self.matrix.tocoo()
        return list(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))

    def dag(self) -> "SparseOperator":
        return SparseOperator(self.matrix.conj().T.tocsr())

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(vec)

    def __add__(self, other):
        return SparseOperator(self.matrix + other.matrix)

    def __sub__(self, other):
        return SparseOperator(self.matrix - other.matrix)

    def __mul__(self, scalar):
        return SparseOperator(self.matrix * scalar)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, SparseOperator):
            return SparseOperator(self.matrix @ other.matrix)
        return self.matrix @ np.asarray(other)


@dataclass
class PureState:
    """State vector on the tensor Fock basis (see module docstring for order)."""

    amplitudes: np.ndarray
    lattice: LatticeSpec

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.size != self.lattice.dimension:
            raise ValueError("amplitude vector does not match lattice dimension")
        self.amplitudes = amps

    @property
    def dimension(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> "PureState":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return PureState(self.amplitudes / n, self.lattice)

    def overlap(self, other: "PureState") -> complex:
        """<self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(
            np.outer(self.amplitudes, self.amplitudes.conj()), self.lattice
        )

    def expectation(self, op: SparseOperator) -> complex:
        return complex(np.vdot(self.amplitudes, op.apply(self.amplitudes)))


@dataclass
class DensityMatrix:
    """Dense Hermitian trace-one matrix on the tensor Fock basis."""

    values: np.ndarray
    lattice: LatticeSpec

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("density matrix must be square")
        if v.shape[0] != self.lattice.dimension:
            raise ValueError("density matrix does not match lattice dimension")
        self.values = v

    @property
    def dimension(self) -> int:
        return self.values.shape[0]

    def trace(self) -> complex:
        return complex(np.trace(self.values))

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.values - self.values.conj().T)))

    def min_eigenvalue(self) -> float:
        # expensive; call only at user-requested checkpoints
        return float(np.linalg.eigvalsh(0.5 * (self.values + self.values.conj().T))[0])

    def validate(self, trace_tol=1e-8, herm_tol=1e-10, eig_tol=None):
        if abs(self.trace() - 1.0) > trace_tol:
            raise ValueError(f"trace deviates from 1 by {abs(self.trace() - 1.0):.3e}")
        if self.hermiticity_defect() > herm_tol:
            raise ValueError(f"hermiticity defect {self.hermiticity_defect():.3e}")
        if eig_tol is not None and self.min_eigenvalue() < -eig_tol:
            raise ValueError(f"min eigenvalue {self.min_eigenvalue():.3e}")
        return self

    def expectation(self, op: SparseOperator) -> complex:
        # tr(rho K) = sum_{rc} K_rc rho_cr
        return complex(op.matrix.multiply(self.values.T).sum())


def annihilation(cutoff: int) -> SparseOperator:
    """Single-mode annihilation operator, <n-1|c|n> = sqrt(n)."""
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    n = np.arange(1, cutoff + 1, dtype=float)
    return SparseOperator(
        sp.diags(np.sqrt(n).astype(complex), offsets=1, format="csr")
    )


def creation(cutoff: int) -> SparseOperator:
    return annihilation(cutoff).dag()


def number_operator(cutoff: int) -> SparseOperator:
    n = np.arange(cutoff + 1, dtype=complex)
    return SparseOperator(sp.diags(n, offsets=0, format="csr"))


def lift_to_site(op: SparseOperator, site: int, lattice: LatticeSpec) -> SparseOperator:
    """Embed a single-mode operator at `site` (1-based): I x ... x op x ... x I."""
    if op.dimension != lattice.local_dim:
        raise ValueError("operator dimension does not match the local Fock space")
    if not 1 <= site <= lattice.sites:
        raise ValueError(f"site {site} out of range 1..{lattice.sites}")
    d = lattice.local_dim
    left = sp.identity(d ** (site - 1), dtype=complex, format="csr")
    right = sp.identity(d ** (lattice.sites - site), dtype=complex, format="csr")
    return SparseOperator(sp.kron(sp.kron(left, op.matrix), right, format="csr"))


def tensor_product(states) -> PureState:
    """Tensor product of single-mode pure states (site 1 first)."""
    states = list(states)
    if not states:
        raise ValueError("need at least one factor")
    cutoff = states[0].lattice.cutoff
    amps = states[0].amplitudes
    for s in states[1:]:
        if s.lattice.cutoff != cutoff:
            raise ValueError("all factors must share the same cutoff")
        amps = np.kron(amps, s.amplitudes)
    return PureState(amps, LatticeSpec(len(states), cutoff))


def partial_trace(rho: DensityMatrix, keep_site: int, lattice: LatticeSpec) -> DensityMatrix:
    """Reduced density matrix of `keep_site` (1-based), tracing all others."""
    if rho.dimension != lattice.dimension:
        raise ValueError("density matrix does not match lattice")
    if not 1 <= keep_site <= lattice.sites:
        raise ValueError(f"site {keep_site} out of range 1..{lattice.sites}")
    d = lattice.local_dim
    pre = d ** (keep_site - 1)
    post = d ** (lattice.sites - keep_site)
    r6 = rho.values.reshape(pre, d, post, pre, d, post)
    reduced = np.einsum("aibajb->ij", r6)
    return DensityMatrix(reduced, LatticeSpec(1, lattice.cutoff))


def reduced_from_pure(psi: PureState, keep_site: int) -> DensityMatrix:
    """Single-site reduced density matrix of a pure state (no full rho built)."""
    lat = psi.lattice
    d = lat.local_dim
    pre = d ** (keep_site - 1)
    post = d ** (lat.sites - keep_site)
    v = psi.amplitudes.reshape(pre, d, post)
    reduced = np.einsum("aib,ajb->ij", v, v.conj())
    return DensityMatrix(reduced, LatticeSpec(1, lat.cutoff))


class NormalModeMap:
    """Coherent-amplitude map between the two normal modes of a 2-site chain.

    Normal modes A1 = (a1+a2)/sqrt(2), A2 = (a1-a2)/sqrt(2).  A product of
    coherent states with normal-mode amplitudes (b1, b2) equals the local
    product |(b1+b2)/sqrt(2)>_1 |(b1-b2)/sqrt(2)>_2 and vice versa (the map
    is an involution).
    """

    def __init__(self, lattice: LatticeSpec):
        if lattice.sites != 2:
            raise ValueError(
                "normal-mode amplitude map supports M=2 only; use "
                "states.normal_mode_coherent for uniform k=0 drive at general M"
            )
        self.lattice = lattice

    @staticmethod
    def local_from_normal(beta1: complex, beta2: complex):
        s = np.sqrt(2.0)
        return ((beta1 + beta2) / s, (beta1 - beta2) / s)

    @staticmethod
    def normal_from_local(alpha1: complex, alpha2: complex):
        s = np.sqrt(2.0)
        return ((alpha1 + alpha2) / s, (alpha1 - alpha2) / s)


def normal_mode_state_map(lattice: LatticeSpec) -> NormalModeMap:
    return NormalModeMap(lattice)


@lru_cache(maxsize=32)
def site_operators(lattice: LatticeSpec):
    """Cached per-lattice operator set used by the integrator and analysis.

    Returns a dict with per-site lifted annihilators, per-site occupation
    diagonals, the total-number diagonal, and per-link hopping operators
    c_i^d c_j + c_j^d c_i.
    """
    ann_local = annihilation(lattice.cutoff)
    anns = [lift_to_site(ann_local, j, lattice) for j in range(1, lattice.sites + 1)]
    num_diags = [
        lattice.site_number_diagonal(j) for j in range(1, lattice.sites + 1)
    ]
    hops = []
    for (i, j) in lattice.links():
        hop = anns[i - 1].dag() @ anns[j - 1]
        hops.append(SparseOperator(hop.matrix + hop.matrix.conj().T))
    return {
        "annihilators": anns,
        "number_diagonals": num_diags,
        "total_number_diagonal": np.sum(num_diags, axis=0),
        "hoppings": hops,
    }
