"""Preparation protocol: schedules for steps 1-4, the step-3 timing solver,
end-to-end runs, and validity checks.

Timeline of a plan (all segments linear ramps, continuous at boundaries):

  step 1  ramp_up               chi: 0 -> chi_max, all couplings at kappa_max
  step 2  decouple_inter_block  inter-block couplings: kappa_max -> 0
  hold                          everything flat (exposes the free-evolution
                                time T* that selects the final state)
  step 3  ramp_down             chi: chi_max -> 0 over T_s3
  step 4  decouple_intra_block  intra-block couplings: kappa_max -> kappa_floor
  tail                          optional flat free evolution

Zero-duration segments are skipped, so e.g. ramp_down=0 leaves chi parked
at chi_max for the rest of the run.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .analysis import overlap_fidelity, purity as purity_of, single_particle_correlator
from .evolve import (
    DEFAULT_CHECKPOINT_EVERY,
    DEFAULT_DT,
    DampingModel,
    Trajectory,
    evolve_density,
    evolve_pure,
)
from .fock import LatticeSpec, partial_trace, reduced_from_pure
from .model import (
    AbhParams,
    check_disorder,
    critical_taus,
    from_mhz,
    min_fock_component,
    min_ramp_up_duration,
    validate_nonlinearity,
)
from .schedule import PiecewiseLinear
from .states import ReferenceKind, ecs_reference, normal_mode_coherent

# |alpha|^2 below this leaves non-negligible weight on Fock components that
# never cross the transition
ALPHA_SQ_SUFFICIENT = 10.0


@dataclass(frozen=True)
class ProtocolPlan:
    """Durations, control levels, and target of one preparation run."""

    lattice: LatticeSpec
    blocks: tuple
    target: ReferenceKind
    ramp_up: float = 10e-9
    decouple_inter_block: float = 2e-9
    hold: float = 0.0
    ramp_down: float = 35e-9
    decouple_intra_block: float = 2e-9
    tail: float = 0.0
    chi_max: float = from_mhz(40.0)
    kappa_max: float = from_mhz(40.0)
    kappa_floor: float = from_mhz(0.1)

    def __post_init__(self):
        durations = (
            self.ramp_up,
            self.decouple_inter_block,
            self.hold,
            self.ramp_down,
            self.decouple_intra_block,
            self.tail,
        )
        if any(d < 0 for d in durations):
            raise ValueError("all durations must be >= 0")
        object.__setattr__(
            self, "blocks", tuple(tuple(int(s) for s in b) for b in self.blocks)
        )

    @property
    def duration(self) -> float:
        return (
            self.ramp_up
            + self.decouple_inter_block
            + self.hold
            + self.ramp_down
            + self.decouple_intra_block
            + self.tail
        )

    def segments(self):
        """(duration, chi_end, inter_kappa_end, intra_kappa_end) per step."""
        return [
            (self.ramp_up, self.chi_max, self.kappa_max, self.kappa_max),
            (self.decouple_inter_block, self.chi_max, 0.0, self.kappa_max),
            (self.hold, self.chi_max, 0.0, self.kappa_max),
            (self.ramp_down, 0.0, 0.0, self.kappa_max),
            (self.decouple_intra_block, 0.0, 0.0, self.kappa_floor),
            (self.tail, 0.0, 0.0, self.kappa_floor),
        ]


def default_plan(
    target: ReferenceKind,
    lattice: LatticeSpec,
    blocks=None,
    hold: float = 0.0,
    tail: float = 0.0,
) -> ProtocolPlan:
    """The device-parameter plan: 10 ns ramp-up, 2 ns decouples, and the
    target-selecting ramp-down (35 ns for W_ECS, 10.6 ns for W_ESCS)."""
    if target is ReferenceKind.W_ECS:
        ramp_down = 35e-9
    elif target is ReferenceKind.W_ESCS:
        ramp_down = 10.6e-9
    else:
        raise ValueError(f"no default plan for target {target}")
    if blocks is None:
        blocks = [[j] for j in range(1, lattice.sites + 1)]
    return ProtocolPlan(
        lattice=lattice,
        blocks=tuple(tuple(b) for b in blocks),
        target=target,
        hold=hold,
        ramp_down=ramp_down,
        tail=tail,
    )


def solve_ramp_down(t_star: float, chi_max: float, ramp=None) -> float:
    """Duration T_s3 satisfying int_0^{T_s3} chi(t) dt = chi_max * t_star.

    t_star is the free-evolution time at which the desired state occurs when
    chi is held; matching the accumulated Kerr phase makes the ramped-down
    run end in the same state.  ramp=None means the linear ramp
    chi(t) = chi_max (1 - t/T_s3), for which T_s3 = 2 t_star exactly.
    A custom ramp is a shape u: [0,1] -> [0,1], u(0) = 1, non-increasing
    (checked; non-monotone shapes are rejected); T_s3 is then found by
    bisection on the integral to 1e-12 relative.
    """
    if t_star <= 0:
        raise ValueError("t_star must be positive")
    if ramp is None:
        return 2.0 * t_star
    s_grid = np.linspace(0.0, 1.0, 257)
    u_grid = np.array([float(ramp(s)) for s in s_grid])
    if abs(u_grid[0] - 1.0) > 1e-9:
        raise ValueError("ramp shape must start at u(0) = 1")
    if np.any(np.diff(u_grid) > 1e-12) or np.any(u_grid < -1e-12):
        raise ValueError("ramp shape must be non-increasing and non-negative")

    def accumulated(duration):
        val, _ = quad(lambda t: ramp(t / duration), 0.0, duration, limit=200)
        return val  # in units of chi_max

    target = t_star
    lo = t_star  # u <= 1 so the integral over t_star is <= target
    hi = t_star
    while accumulated(hi) < target:
        hi *= 2.0
        if hi > 1e6 * t_star:
            raise ValueError("ramp shape integrates to ~0; cannot match timing")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if accumulated(mid) < target:
            lo = mid
        else:
            hi = mid
        if (hi - lo) <= 1e-12 * hi:
            break
    return 0.5 * (lo + hi)


def build_schedules(plan: ProtocolPlan):
    """(chi schedule, per-link kappa schedules) as piecewise-linear functions."""
    site_block = {}
    for b_idx, block in enumerate(plan.blocks):
        for s in block:
            site_block[s] = b_idx
    if sorted(site_block) != list(range(1, plan.lattice.sites + 1)):
        raise ValueError("blocks must partition sites 1..M")

    def assemble(start_value, per_segment_targets):
        ts, vs = [0.0], [start_value]
        t = 0.0
        for (dur, *_), target in zip(plan.segments(), per_segment_targets):
            if dur == 0.0:
                continue
            t += dur
            ts.append(t)
            vs.append(target)
        if len(ts) == 1:  # zero-duration plan
            ts.append(1e-15)
            vs.append(start_value)
        return PiecewiseLinear(ts, vs)

    segs = plan.segments()
    chi = assemble(0.0, [s[1] for s in segs])
    kappas = []
    for (i, j) in plan.lattice.links():
        inter = site_block[i] != site_block[j]
        col = 2 if inter else 3
        kappas.append(assemble(plan.kappa_max, [s[col] for s in segs]))
    return chi, kappas


@dataclass
class PlanCheck:
    name: str
    passed: bool
    detail: str


def check_plan(
    plan: ProtocolPlan,
    alpha: complex,
    site_offsets=None,
    omega_c0: float = 2 * np.pi * 7.5e9,
) -> list[PlanCheck]:
    """Validity report: adiabatic ramp-up, disorder, circuit nonlinearity,
    and amplitude-vs-cutoff margin."""
    lat = plan.lattice
    checks = []
    if lat.sites >= 2:
        taus = critical_taus(lat.sites)
        n_min = min_fock_component(plan.chi_max, plan.kappa_max)
        dt1_min = min_ramp_up_duration(plan.kappa_max, taus.tau2, max(n_min, 2))
        checks.append(
            PlanCheck(
                "adiabatic_ramp_up",
                plan.ramp_up >= dt1_min * (1.0 - 1e-9),
                f"ramp_up = {plan.ramp_up:.3e} s vs minimum {dt1_min:.3e} s (n = {n_min})",
            )
        )

        offs = site_offsets if site_offsets is not None else (0.0,) * lat.sites
        spread, bound, ok = check_disorder(offs, taus.tau2)
        checks.append(
            PlanCheck(
                "disorder",
                ok,
                f"spread = {spread:.3e} rad/s vs bound {bound:.3e} rad/s",
            )
        )

    nl = validate_nonlinearity(plan.chi_max, omega_c0, abs(alpha) ** 2)
    checks.append(
        PlanCheck(
            "nonlinearity",
            nl.passed,
            f"2 chi |alpha|^2 / omega_c0 = {nl.ratio:.3f} (limit 0.2)",
        )
    )

    min_block = min(len(b) for b in plan.blocks)
    branch_site_sq = abs(alpha) ** 2 / min_block
    margin_ok = branch_site_sq <= 0.6 * lat.cutoff
    checks.append(
        PlanCheck(
            "amplitude_cutoff_margin",
            margin_ok,
            f"max per-site |alpha|^2 = {branch_site_sq:.2f} vs 0.6*cutoff = {0.6 * lat.cutoff:.1f}",
        )
    )
    return checks


def run_protocol(
    plan: ProtocolPlan,
    alpha: complex,
    damped: bool = True,
    dt: float = DEFAULT_DT,
    checkpoint_every: float = DEFAULT_CHECKPOINT_EVERY,
    damping: DampingModel | None = None,
    min_eig_every: float | None = None,
) -> Trajectory:
    """Integrate the full plan from the normal-mode coherent start.

    Records at every checkpoint: fidelity and squared fidelity against the
    non-squeezed reference of the plan's target kind, Re/Im of <c_1^d c_2>,
    trace (norm for undamped runs), and purity.  The trajectory's
    `final_reduced_site1` metadata entry holds the site-1 reduced density
    matrix of the terminal state for Wigner rendering.  A plan that violates
    the adiabatic bound or uses |alpha|^2 < 10 produces a warning record in
    `meta["warnings"]`, not an abort.
    """
    lat = plan.lattice
    warnings_list = []
    for chk in check_plan(plan, alpha):
        if not chk.passed:
            warnings_list.append(f"{chk.name}: {chk.detail}")
    if abs(alpha) ** 2 < ALPHA_SQ_SUFFICIENT:
        warnings_list.append(
            f"|alpha|^2 = {abs(alpha)**2:.2f} < {ALPHA_SQ_SUFFICIENT}: low Fock "
            "components will not cross the transition"
        )
    for w in warnings_list:
        warnings.warn(w, stacklevel=2)

    chi_sched, kappa_scheds = build_schedules(plan)
    params = AbhParams(lattice=lat, chi=chi_sched, kappa=tuple(kappa_scheds))
    psi0 = normal_mode_coherent(alpha, lat)
    reference = ecs_reference(plan.target, alpha, lat, plan.blocks)

    corr_possible = lat.sites >= 2

    def corr(state):
        if not corr_possible:
            return 0.0j
        return single_particle_correlator(state, 1, 2, lat)

    observables = {
        "fidelity": lambda s, t: overlap_fidelity(s, reference),
        "corr_re": lambda s, t: corr(s).real,
        "corr_im": lambda s, t: corr(s).imag,
    }
    if damped:
        observables["purity"] = lambda rho, t: purity_of(rho)
        if min_eig_every is not None:
            stride = max(1, int(round(min_eig_every / checkpoint_every)))
            counter = {"k": -1}

            def min_eig(rho, t):
                counter["k"] += 1
                if counter["k"] % stride:
                    return np.nan
                return float(np.linalg.eigvalsh(rho)[0])

            observables["min_eig"] = min_eig
        model = damping or DampingModel(chi_max=plan.chi_max)
        traj = evolve_density(
            psi0.to_density(),
            params,
            model,
            dt=dt,
            t_span=(0.0, plan.duration),
            checkpoint_every=checkpoint_every,
            observables=observables,
        )
        final_reduced = partial_trace(traj.final_state, 1, lat)
    else:
        observables["purity"] = lambda psi, t: 1.0
        traj = evolve_pure(
            psi0,
            params,
            dt=dt,
            t_span=(0.0, plan.duration),
            checkpoint_every=checkpoint_every,
            observables=observables,
        )
        final_reduced = reduced_from_pure(traj.final_state, 1)

    traj.records["fidelity_sq"] = traj.records["fidelity"] ** 2
    if "trace_re" not in traj.records:  # pure run: the state is renormalized
        traj.records["trace_re"] = traj.records["norm"]
    traj.meta.update(
        warnings=warnings_list,
        plan=plan,
        alpha=alpha,
        damped=damped,
        final_reduced_site1=final_reduced,
    )
    return traj
