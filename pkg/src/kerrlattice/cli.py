"""Config-driven experiment runner.

Commands: run-protocol, oracle-check, coherence-budget, ground-state-sweep,
wigner.  Each takes a JSON config (all physical quantities carry unit
suffixes in their key names: chi_max_mhz, dt_s, ...), writes CSV data plus
a manifest.json with the fully resolved config, and is deterministic:
identical config and seed give byte-identical outputs.

Exit codes: 0 ok, 2 config error, 3 numerical abort / failed oracle check.
KERRLATTICE_WORKERS controls sweep fan-out (default 1).
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    WignerGrid,
    overlap_fidelity,
    single_particle_correlator,
    total_number_variance,
    wigner,
)
from .coherence import CoherenceBudget, coherence_fraction
from .evolve import DampingModel, NumericalAbort, evolve_pure
from .fock import DensityMatrix, LatticeSpec, PureState, tensor_product
from .model import AbhParams, from_mhz
from .oracles import (
    beamsplitter_output_state,
    exact_ground_state,
    kerr_evolution_exact,
    sector_hamiltonian,
    superfluid_sector,
    w_state_sector,
)
from .protocol import ProtocolPlan, default_plan, run_protocol
from .states import ReferenceKind, coherent_state, kerr_cat_reference

TRAJECTORY_HEADER = "t_s, fidelity, fidelity_sq, corr_re, corr_im, trace_re, purity"
WIGNER_HEADER = "x, p, w"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class ConfigError(ValueError):
    """Invalid experiment configuration."""


# ---------------------------------------------------------------------------
# config schema and validation

DEFAULTS = {
    "run-protocol": {
        "lattice": {"sites": 2, "cutoff": 20, "periodic": False},
        "plan": {
            "target": "w_ecs",
            "blocks": None,
            "ramp_up_ns": 10.0,
            "decouple_inter_block_ns": 2.0,
            "hold_ns": 0.0,
            "ramp_down_ns": None,
            "decouple_intra_block_ns": 2.0,
            "tail_ns": 0.0,
            "chi_max_mhz": 40.0,
            "kappa_max_mhz": 40.0,
            "kappa_floor_mhz": 0.1,
        },
        "alpha_abs_sq": 10.0,
        "alpha_phase_rad": 0.0,
        "damped": True,
        "damping": {
            "t1_at_zero_us": 3.0,
            "t1_at_max_us": 1.5,
            "tphi_at_zero_s": 1.0,
            "tphi_at_max_us": 100.0,
        },
        "dt_s": 1e-11,
        "checkpoint_every_s": 5e-11,
        "seed": 1234,
    },
    "oracle-check": {
        "alpha_abs": 2.0,
        "cutoff": 16,
        "dt_s": 1e-12,
        "chi_mhz": 40.0,
        "kappa_mhz": 40.0,
        "seed": 1234,
    },
    "coherence-budget": {
        "alpha_abs_min": 0.5,
        "alpha_abs_max": 6.0,
        "n_points": 56,
        "budget": {
            "dt1_us": 0.02,
            "dt2_us": 0.002,
            "dt3_us": 0.02,
            "dt4_us": 0.002,
            "dt5a_us": 0.01,
            "dt5b_us": 0.16,
            "t1_eff_us": 2.0,
            "tphi_eff_us": 100.0,
            "n_terms": 1000,
        },
        "seed": 1234,
    },
    "ground-state-sweep": {
        "sites": 2,
        "n_total": 6,
        "periodic": True,
        "tau_min": 0.01,
        "tau_max": 10.0,
        "n_points": 13,
        "log_spacing": True,
        "seed": 1234,
    },
    "wigner": {
        "source": {
            "state": "kerr_cat",  # kerr_cat | coherent | rho_npy
            "alpha_abs": 2.0,
            "alpha_phase_rad": 0.0,
            "cutoff": 20,
            "rho_npy": None,
        },
        "grid": {
            "x_min": -6.0,
            "x_max": 6.0,
            "p_min": -6.0,
            "p_max": 6.0,
            "n_x": 121,
            "n_p": 121,
        },
        "seed": 1234,
    },
}


def _check_leaf_type(where, default, value):
    """Supplied leaf values must match the schema prototype's type.

    None-valued prototypes mark nullable free-form fields (blocks,
    ramp_down_ns, rho_npy) that downstream code validates itself.
    """
    if default is None or value is None:
        return
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where} expects a boolean, got {value!r}")
    elif isinstance(default, (int, float)):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where} expects a number, got {value!r}")
    elif isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{where} expects a string, got {value!r}")


def _merge_validate(defaults, supplied, path=""):
    """Deep-merge supplied keys over defaults, rejecting unknown keys."""
    merged = copy.deepcopy(defaults)
    for key, value in supplied.items():
        where = f"{path}.{key}" if path else key
        if key not in defaults:
            raise ConfigError(f"unknown config key: {where}")
        if isinstance(defaults[key], dict) and defaults[key]:
            if not isinstance(value, dict):
                raise ConfigError(f"{where} must be an object")
            merged[key] = _merge_validate(defaults[key], value, where)
        else:
            _check_leaf_type(where, defaults[key], value)
            merged[key] = value
    return merged


def load_config(command: str, config_path: str | None, overrides) -> dict:
    supplied = {}
    if config_path:
        try:
            text = Path(config_path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        try:
            supplied = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"{config_path}: line {exc.lineno}, col {exc.colno}: {exc.msg}"
            ) from exc
        if not isinstance(supplied, dict):
            raise ConfigError(f"{config_path}: top level must be a JSON object")
    cmd = supplied.pop("command", None)
    if cmd is not None and cmd != command:
        raise ConfigError(f"config is for command {cmd!r}, invoked as {command!r}")
    config = _merge_validate(DEFAULTS[command], supplied)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override must be key=value: {item!r}")
        dotted, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = config
        parts = dotted.split(".")
        for part in parts[:-1]:
            if not isinstance(node, dict) or part not in node:
                raise ConfigError(f"unknown override path: {dotted}")
            node = node[part]
        if not isinstance(node, dict) or parts[-1] not in node:
            raise ConfigError(f"unknown override path: {dotted}")
        node[parts[-1]] = value
    # re-validate so overrides get the same type checks as file values
    return _merge_validate(DEFAULTS[command], config)


def _worker_count() -> int:
    raw = os.environ.get("KERRLATTICE_WORKERS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(
            f"KERRLATTICE_WORKERS must be an integer, got {raw!r}"
        ) from exc
    return max(1, n)


# ---------------------------------------------------------------------------
# output helpers

def _fmt(x: float) -> str:
    return format(float(x), ".12e")


def _write_manifest(out_dir: Path, command: str, config: dict, outputs) -> None:
    manifest = {
        "command": command,
        "config": config,
        "outputs": sorted(outputs),
        "version": __version__,
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )


def _write_trajectory_csv(path: Path, traj) -> None:
    recs = traj.records
    with path.open("w") as fh:
        fh.write(TRAJECTORY_HEADER + "\n")
        for i, t in enumerate(traj.times):
            row = [
                _fmt(t),
                _fmt(recs["fidelity"][i]),
                _fmt(recs["fidelity_sq"][i]),
                _fmt(recs["corr_re"][i]),
                _fmt(recs["corr_im"][i]),
                _fmt(recs["trace_re"][i]),
                _fmt(recs["purity"][i]),
            ]
            fh.write(", ".join(row) + "\n")


def _write_wigner_csv(path: Path, grid: WignerGrid) -> None:
    with path.open("w") as fh:
        fh.write(WIGNER_HEADER + "\n")
        for ip, p in enumerate(grid.ps):
            for ix, x in enumerate(grid.xs):
                fh.write(
                    ", ".join([_fmt(x), _fmt(p), _fmt(grid.values[ip, ix])]) + "\n"
                )


# ---------------------------------------------------------------------------
# commands

def _cmd_run_protocol(config: dict, out_dir: Path):
    lat_cfg = config["lattice"]
    lattice = LatticeSpec(
        int(lat_cfg["sites"]), int(lat_cfg["cutoff"]), bool(lat_cfg["periodic"])
    )
    plan_cfg = config["plan"]
    try:
        target = ReferenceKind(plan_cfg["target"])
    except ValueError as exc:
        raise ConfigError(f"plan.target: {exc}") from exc
    base = default_plan(target, lattice, blocks=plan_cfg["blocks"])
    ramp_down = plan_cfg["ramp_down_ns"]
    plan = ProtocolPlan(
        lattice=lattice,
        blocks=base.blocks,
        target=target,
        ramp_up=plan_cfg["ramp_up_ns"] * 1e-9,
        decouple_inter_block=plan_cfg["decouple_inter_block_ns"] * 1e-9,
        hold=plan_cfg["hold_ns"] * 1e-9,
        ramp_down=base.ramp_down if ramp_down is None else ramp_down * 1e-9,
        decouple_intra_block=plan_cfg["decouple_intra_block_ns"] * 1e-9,
        tail=plan_cfg["tail_ns"] * 1e-9,
        chi_max=from_mhz(plan_cfg["chi_max_mhz"]),
        kappa_max=from_mhz(plan_cfg["kappa_max_mhz"]),
        kappa_floor=from_mhz(plan_cfg["kappa_floor_mhz"]),
    )
    alpha = math.sqrt(config["alpha_abs_sq"]) * np.exp(
        1j * config["alpha_phase_rad"]
    )
    dmp_cfg = config["damping"]
    damping = DampingModel(
        t1_at_zero=dmp_cfg["t1_at_zero_us"] * 1e-6,
        t1_at_max=dmp_cfg["t1_at_max_us"] * 1e-6,
        tphi_at_zero=dmp_cfg["tphi_at_zero_s"],
        tphi_at_max=dmp_cfg["tphi_at_max_us"] * 1e-6,
        chi_max=plan.chi_max,
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        traj = run_protocol(
            plan,
            alpha,
            damped=bool(config["damped"]),
            dt=float(config["dt_s"]),
            checkpoint_every=float(config["checkpoint_every_s"]),
            damping=damping,
        )
    outputs = []
    _write_trajectory_csv(out_dir / "trajectory.csv", traj)
    outputs.append("trajectory.csv")
    np.save(out_dir / "final_site1_rho.npy", traj.meta["final_reduced_site1"].values)
    outputs.append("final_site1_rho.npy")
    if traj.meta["warnings"]:
        (out_dir / "warnings.txt").write_text(
            "".join(w + "\n" for w in traj.meta["warnings"])
        )
        outputs.append("warnings.txt")
    print(
        f"run-protocol: {len(traj.times)} checkpoints, terminal fidelity "
        f"{traj.records['fidelity'][-1]:.4f}"
    )
    return outputs


def _cmd_coherence_budget(config: dict, out_dir: Path):
    b = config["budget"]
    budget = CoherenceBudget(
        dt1=b["dt1_us"] * 1e-6,
        dt2=b["dt2_us"] * 1e-6,
        dt3=b["dt3_us"] * 1e-6,
        dt4=b["dt4_us"] * 1e-6,
        dt5a=b["dt5a_us"] * 1e-6,
        dt5b=b["dt5b_us"] * 1e-6,
        t1_eff=b["t1_eff_us"] * 1e-6,
        tphi_eff=b["tphi_eff_us"] * 1e-6,
        n_terms=int(b["n_terms"]),
    )
    amps = np.linspace(
        config["alpha_abs_min"], config["alpha_abs_max"], int(config["n_points"])
    )
    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            fracs = list(pool.map(lambda a: coherence_fraction(a, budget), amps))
    else:
        fracs = [coherence_fraction(a, budget) for a in amps]
    path = out_dir / "coherence.csv"
    with path.open("w") as fh:
        fh.write("alpha_abs, fraction\n")
        for a, f in zip(amps, fracs):
            fh.write(f"{_fmt(a)}, {_fmt(f)}\n")
    print(
        f"coherence-budget: {len(amps)} points, "
        f"fraction({amps[-1]:.2f}) = {fracs[-1]:.4f}"
    )
    return ["coherence.csv"]


def _cmd_ground_state_sweep(config: dict, out_dir: Path):
    sites = int(config["sites"])
    n_total = int(config["n_total"])
    periodic = bool(config["periodic"])
    n_pts = int(config["n_points"])
    if config["log_spacing"]:
        taus = np.geomspace(config["tau_min"], config["tau_max"], n_pts)
    else:
        taus = np.linspace(config["tau_min"], config["tau_max"], n_pts)

    lattice = LatticeSpec(sites, max(n_total, 1), periodic=periodic)

    def one(tau_value):
        gs = exact_ground_state(sites, n_total, float(tau_value), periodic=periodic)
        w_ov = gs.subspace_overlap(w_state_sector(gs.occupations, n_total))
        sf_ov = gs.subspace_overlap(
            superfluid_sector(gs.occupations, sites, n_total)
        )
        emb = gs.embed(lattice)
        var = total_number_variance(emb, lattice)
        corr = (
            abs(single_particle_correlator(emb, 1, 2, lattice)) if sites >= 2 else 0.0
        )
        return w_ov, sf_ov, var, corr, gs.energy

    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, taus))
    else:
        rows = [one(t) for t in taus]
    path = out_dir / "ground_state.csv"
    with path.open("w") as fh:
        fh.write(
            "tau, w_overlap, superfluid_overlap, total_number_variance, "
            "corr_abs, energy\n"
        )
        for t, row in zip(taus, rows):
            fh.write(", ".join([_fmt(t)] + [_fmt(v) for v in row]) + "\n")
    print(f"ground-state-sweep: {n_pts} taus for M={sites}, N={n_total}")
    return ["ground_state.csv"]


def _cmd_wigner(config: dict, out_dir: Path):
    src = config["source"]
    kind = src["state"]
    if kind == "rho_npy":
        if not src["rho_npy"]:
            raise ConfigError("source.rho_npy path required for state=rho_npy")
        values = np.load(src["rho_npy"])
        rho = DensityMatrix(values, LatticeSpec(1, values.shape[0] - 1))
    else:
        alpha = src["alpha_abs"] * np.exp(1j * src["alpha_phase_rad"])
        cutoff = int(src["cutoff"])
        if kind == "kerr_cat":
            state = kerr_cat_reference(alpha, cutoff)
        elif kind == "coherent":
            state = coherent_state(alpha, cutoff)
        else:
            raise ConfigError(f"unknown source.state: {kind!r}")
        rho = state.to_density()
    g = config["grid"]
    grid = WignerGrid(
        x_min=g["x_min"],
        x_max=g["x_max"],
        p_min=g["p_min"],
        p_max=g["p_max"],
        n_x=int(g["n_x"]),
        n_p=int(g["n_p"]),
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        result = wigner(rho, grid)
    _write_wigner_csv(out_dir / "wigner.csv", result)
    print(f"wigner: {grid.n_x}x{grid.n_p} grid, integral = {result.integral():.4f}")
    return ["wigner.csv"]


def _cmd_oracle_check(config: dict, out_dir: Path):
    """Oracle-vs-integrator suite; any disagreement fails the run (exit 3)."""
    alpha = float(config["alpha_abs"])
    cutoff = int(config["cutoff"])
    dt = float(config["dt_s"])
    chi = from_mhz(config["chi_mhz"])
    kappa = from_mhz(config["kappa_mhz"])
    rng = np.random.default_rng(int(config["seed"]))
    checks = []

    # Kerr phase accumulation vs analytic evolution
    lat1 = LatticeSpec(1, cutoff)
    params1 = AbhParams(lattice=lat1, chi=chi, kappa=())
    psi0 = PureState(coherent_state(alpha, cutoff).amplitudes, lat1)
    for theta in (np.pi / 4, np.pi, 2 * np.pi):
        span = round(theta / chi / dt) * dt
        traj = evolve_pure(psi0, params1, dt=dt, t_span=(0.0, span))
        target = kerr_evolution_exact(alpha, span * chi, cutoff)
        fid = overlap_fidelity(traj.final_state, target)
        checks.append(
            (f"kerr_theta_{theta:.3f}", fid, 1.0 - 1e-8, fid >= 1.0 - 1e-8)
        )

    # beamsplitter transfer on a coherent product vs analytic amplitudes
    lat2 = LatticeSpec(2, cutoff)
    params2 = AbhParams(lattice=lat2, chi=0.0, kappa=(kappa,))
    for theta in (np.pi / 8, np.pi / 4, np.pi / 2):
        a_in = (0.6 * alpha, -0.8 * alpha)
        psi_in = tensor_product(
            [coherent_state(a_in[0], cutoff), coherent_state(a_in[1], cutoff)]
        )
        span = round(theta / kappa / dt) * dt
        traj = evolve_pure(psi_in, params2, dt=dt, t_span=(0.0, span))
        target = beamsplitter_output_state([(1.0, a_in)], span * kappa, lat2)
        fid = overlap_fidelity(traj.final_state, target)
        checks.append(
            (f"beamsplitter_theta_{theta:.3f}", fid, 1.0 - 1e-6, fid >= 1.0 - 1e-6)
        )

    # ground-state energies are variational minima
    gs = exact_ground_state(2, 4, 0.15)
    h, _ = sector_hamiltonian(2, 4, 0.15)
    ok = True
    worst = np.inf
    for _ in range(200):
        v = rng.standard_normal(h.shape[0]) + 1j * rng.standard_normal(h.shape[0])
        v /= np.linalg.norm(v)
        e = float(np.real(v.conj() @ h @ v))
        worst = min(worst, e - gs.energy)
        ok = ok and e >= gs.energy - 1e-10
    checks.append(("ground_state_variational", worst, 0.0, ok))

    report = {
        "checks": [
            {"name": n, "value": v, "threshold": thr, "passed": bool(p)}
            for n, v, thr, p in checks
        ],
        "all_passed": all(p for *_x, p in checks),
    }
    (out_dir / "oracle_report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n"
    )
    for name, value, _thr, passed in checks:
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {value:.10f}")
    if not report["all_passed"]:
        raise NumericalAbort("oracle check failed")
    return ["oracle_report.json"]


COMMANDS = {
    "run-protocol": _cmd_run_protocol,
    "oracle-check": _cmd_oracle_check,
    "coherence-budget": _cmd_coherence_budget,
    "ground-state-sweep": _cmd_ground_state_sweep,
    "wigner": _cmd_wigner,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kerrlattice",
        description="Kerr-lattice entangled-cat preparation simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument(
            "--override",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="dotted config override, repeatable",
        )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.command, args.config, args.override)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        outputs = COMMANDS[args.command](config, out_dir)
        _write_manifest(out_dir, args.command, config, outputs + ["manifest.json"])
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
