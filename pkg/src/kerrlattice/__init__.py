"""Desk-scale simulator for entangled squeezed-cat preparation in a lattice
of Kerr-nonlinear coupled bosonic modes: open-system (Lindblad) dynamics,
protocol scheduling, analysis, and analytic oracles."""

__version__ = "0.1.0"

from .analysis import (
    WignerGrid,
    min_quadrature_variance,
    number_fluctuations,
    overlap_fidelity,
    purity,
    quadrature_variance,
    single_particle_correlator,
    superfidelity_bounds,
    total_number_variance,
    trace_of,
    uhlmann_fidelity,
    wigner,
)
from .coherence import CoherenceBudget, SwapRates, coherence_fraction, decoherence_prep, decoherence_swap
from .evolve import (
    DampingModel,
    NumericalAbort,
    Trajectory,
    damping_at,
    evolve_density,
    evolve_pure,
    lindblad_rhs,
)
from .fock import (
    DensityMatrix,
    LatticeSpec,
    PureState,
    SparseOperator,
    annihilation,
    creation,
    lift_to_site,
    normal_mode_state_map,
    number_operator,
    partial_trace,
    reduced_from_pure,
    tensor_product,
)
from .model import (
    AbhParams,
    CriticalPoints,
    adiabatic_chi_rate_limit,
    build_hamiltonian,
    critical_taus,
    disorder_bound,
    from_ghz,
    from_mhz,
    min_fock_component,
    min_ramp_up_duration,
    tau,
    validate_nonlinearity,
)
from .oracles import (
    beamsplitter_exact,
    beamsplitter_output_state,
    exact_ground_state,
    kerr_evolution_exact,
    superfluid_sector,
    w_state_sector,
)
from .protocol import (
    ProtocolPlan,
    check_plan,
    default_plan,
    run_protocol,
    solve_ramp_down,
)
from .schedule import PiecewiseLinear, ScheduleDomainError
from .states import (
    AmplitudeCutoffError,
    ReferenceKind,
    coherent_branch_superposition,
    coherent_state,
    ecs_reference,
    generalized_coherent,
    kerr_cat_reference,
    normal_mode_coherent,
)
