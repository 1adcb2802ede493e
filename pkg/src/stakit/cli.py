"""Command-line interface: design, propagate, check, sweep.

Designs and verification reports are JSON; trajectories and sweep summaries
are CSV with a leading units comment line.  Floats are written with Python's
shortest round-trip representation, so identical runs produce byte-identical
files.  Exit codes: 0 success, 1 verification failure, 2 usage error,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import fock, ho_design, tls_design
from .curves import PolynomialCurve, TimeGrid, fit_polynomial, BoundaryConstraint, sampled_derivative
from .propagation import core, schedules
from .units import HBAR

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3

DEFAULT_FOCK_DIM = 128
DEFAULT_SAMPLES = 201
DEFAULT_REL_TOL = 1e-10


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Validated run parameters shared by propagate, check and sweep."""

    system: str | None
    method: str | None
    fock_dim: int
    rel_tol: float
    samples: int
    state: int | None
    out: str | None
    time_unit: str
    jobs: int = 1

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        rel_tol = getattr(args, "rel_tol", DEFAULT_REL_TOL)
        samples = getattr(args, "samples", DEFAULT_SAMPLES)
        if samples < 2:
            raise UsageError("--samples must be at least 2")
        return cls(
            system=getattr(args, "system", None),
            method=getattr(args, "method", None),
            fock_dim=getattr(args, "fock_dim", DEFAULT_FOCK_DIM),
            rel_tol=rel_tol,
            samples=samples,
            state=getattr(args, "state", None),
            out=getattr(args, "out", None),
            time_unit=args.time_unit,
            jobs=getattr(args, "jobs", 1),
        )


@dataclass
class CheckReport:
    """Verification battery results with per-criterion pass/fail entries."""

    system: str
    kind: str
    design_residual_max: float
    endpoint_commutator_relative: float
    invariance_residual: float
    norm_drift: float
    adiabaticity_metric: float
    truncation_delta: float | None
    criteria: dict
    extras: dict

    def to_dict(self) -> dict:
        doc = {
            "system": self.system,
            "kind": self.kind,
            "design_residual_max": self.design_residual_max,
            "endpoint_commutator_relative": self.endpoint_commutator_relative,
            "invariance_residual": self.invariance_residual,
            "norm_drift": self.norm_drift,
            "adiabaticity_metric": self.adiabaticity_metric,
            "truncation_delta": self.truncation_delta,
        }
        doc.update(self.extras)
        doc["criteria"] = self.criteria
        doc["all_pass"] = self.all_pass
        return doc

    @property
    def all_pass(self) -> bool:
        return all(entry["pass"] for entry in self.criteria.values())


def _units_line(label: str) -> str:
    return f"# units: hbar=1, m=1, time unit = {label}"


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: str, header: list[str], rows: list[list], unit_label: str) -> None:
    lines = [_units_line(unit_label), ",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _theta_ramp(t_f: float) -> PolynomialCurve:
    """Cubic mixing-angle smoothstep pi -> 0 with flat endpoints."""
    return fit_polynomial(
        [
            BoundaryConstraint(0.0, 0, np.pi),
            BoundaryConstraint(0.0, 1, 0.0),
            BoundaryConstraint(t_f, 0, 0.0),
            BoundaryConstraint(t_f, 1, 0.0),
        ],
        degree=3,
    )


# ----------------------------------------------------------------- design --

def cmd_design(args) -> int:
    if args.system == "ho":
        doc = _design_ho(args)
    else:
        doc = _design_tls(args)
    doc["units"] = {"hbar": 1, "m": 1, "time": args.time_unit}
    text = json.dumps(doc, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return EXIT_OK


def _design_ho(args) -> dict:
    if args.omega0 is None or args.omegaf is None:
        raise UsageError("design ho requires --omega0 and --omegaf")
    if args.method == "invariant":
        design = ho_design.design_expansion(args.omega0, args.omegaf, args.tf, degree=args.degree)
        doc = {"system": "oscillator", "method": "invariant", **design.to_dict()}
        ts = np.linspace(0.0, args.tf, 1001)
        w2 = np.array([ho_design.omega_squared(design, t) for t in ts])
        print(f"# b(t_f) = {design.b(args.tf)!r}", file=sys.stderr)
        print(f"# min omega^2 = {float(w2.min())!r} (trap inverted: {bool(w2.min() < 0)})", file=sys.stderr)
        return doc
    ramp = ho_design.design_ramp(args.omega0, args.omegaf, args.tf)
    doc = {
        "system": "oscillator",
        "method": "counterdiabatic",
        "omega0": args.omega0,
        "omega_f": args.omegaf,
        "t_f": args.tf,
        "omega_coefficients": ramp.omega.coefficients.tolist(),
    }
    print(f"# omega'(0) = {ramp.omega(0.0, 1)!r}, omega'(t_f) = {ramp.omega(args.tf, 1)!r}", file=sys.stderr)
    return doc


def _design_tls(args) -> dict:
    if args.method == "invariant":
        if args.preset == "fig1":
            design = tls_design.preset_fig1(args.tf, omega0=args.omega0 or 1.0)
        elif args.preset == "fig2":
            design = tls_design.preset_fig2(args.tf, omega0=args.omega0 or 1.0)
        else:
            raise UsageError("design tls needs --preset fig1|fig2 for the invariant method")
        doc = {"system": "two_level", "method": "invariant", **design.to_dict()}
        grid = TimeGrid.uniform(args.tf, DEFAULT_SAMPLES)
        controls = tls_design.controls_from_angles(design, grid)
        report = tls_design.commutator_endpoint_report(design, controls)
        print(f"# peak Omega_R = {float(np.max(controls.omega_r.values))!r}", file=sys.stderr)
        print(
            f"# endpoint commutators (relative): {report.relative_start!r}, {report.relative_end!r}",
            file=sys.stderr,
        )
        return doc
    theta = _theta_ramp(args.tf)
    omega_scale = args.omega0 or 1.0
    doc = {
        "system": "two_level",
        "method": "counterdiabatic",
        "t_f": args.tf,
        "theta_coefficients": theta.coefficients.tolist(),
        "omega_coefficients": [omega_scale],
        "phi_coefficients": [0.0],
        "Omega0": omega_scale,
    }
    print(f"# theta'(0) = {theta(0.0, 1)!r}, theta'(t_f) = {theta(args.tf, 1)!r}", file=sys.stderr)
    return doc


# -------------------------------------------------------------- file load --

@dataclass
class LoadedDesign:
    system: str          # oscillator | two_level
    kind: str            # invariant | tracking
    t_f: float
    payload: object      # ErmakovDesign / OmegaRamp / AngleDesign / mixing tuple
    raw: dict


def _load_design(path: str) -> LoadedDesign:
    with open(path) as fh:
        raw = json.load(fh)
    system = raw.get("system")
    if system == "oscillator":
        if "b_coefficients" in raw:
            design = ho_design.ErmakovDesign.from_dict(raw)
            return LoadedDesign("oscillator", "invariant", design.t_f, design, raw)
        if "omega_coefficients" in raw:
            ramp = ho_design.OmegaRamp(
                omega=PolynomialCurve(np.asarray(raw["omega_coefficients"], dtype=float)),
                t_f=float(raw["t_f"]),
            )
            return LoadedDesign("oscillator", "tracking", ramp.t_f, ramp, raw)
        raise UsageError("oscillator design needs b_coefficients or omega_coefficients")
    if system == "two_level":
        if "gamma_coefficients" in raw:
            design = tls_design.AngleDesign.from_dict(raw)
            return LoadedDesign("two_level", "invariant", design.t_f, design, raw)
        if "theta_coefficients" in raw:
            theta = PolynomialCurve(np.asarray(raw["theta_coefficients"], dtype=float))
            omega = PolynomialCurve(np.asarray(raw["omega_coefficients"], dtype=float))
            phi = PolynomialCurve(np.asarray(raw.get("phi_coefficients", [0.0]), dtype=float))
            return LoadedDesign("two_level", "tracking", float(raw["t_f"]), (theta, omega, phi), raw)
        raise UsageError("two-level design needs gamma_coefficients or theta_coefficients")
    raise UsageError(f"unknown design system {system!r}")


def _resolve_method(loaded: LoadedDesign, method: str | None) -> str:
    if method is None:
        return "invariant" if loaded.kind == "invariant" else "counterdiabatic"
    if loaded.kind == "invariant" and method != "invariant":
        raise UsageError(f"method {method} needs a counterdiabatic design file (reference schedule)")
    if loaded.kind == "tracking" and method == "invariant":
        raise UsageError("method invariant needs an invariant design file")
    return method


# --------------------------------------------------------------- propagate --

def cmd_propagate(args) -> int:
    config = RunConfig.from_args(args)
    loaded = _load_design(args.design)
    method = _resolve_method(loaded, config.method)
    if loaded.system == "two_level":
        header, rows = _propagate_tls(loaded, method, config)
    else:
        header, rows = _propagate_ho(loaded, method, config)
    if config.out:
        _write_csv(config.out, header, rows, config.time_unit)
    final = ", ".join(f"{h}={_fmt(v)}" for h, v in zip(header, rows[-1]))
    print(f"final row: {final}")
    return EXIT_OK


def _tls_initial_state(selector: int) -> np.ndarray:
    if selector == 1:
        return np.array([0.0, 1.0], dtype=complex)
    if selector == 2:
        return np.array([1.0, 0.0], dtype=complex)
    raise UsageError("--state for the two-level system must be 1 or 2")


def _propagate_tls(loaded: LoadedDesign, method: str, config: RunConfig):
    grid = TimeGrid.uniform(loaded.t_f, config.samples)
    psi0 = _tls_initial_state(config.state if config.state is not None else 1)
    if method == "invariant":
        design: tls_design.AngleDesign = loaded.payload
        schedule = schedules.tls_invariant_schedule(design)
        controls = tls_design.controls_from_angles(design, grid)
        modes = core.TLSInvariantModes(design, controls)
        alpha = tls_design.lr_phases_on_grid(design, controls)
    else:
        theta, omega, phi = loaded.payload
        schedule = schedules.tls_mixing_schedule(
            theta, omega, phi, include_h1=(method == "counterdiabatic")
        )
        controls = _mixing_controls(theta, omega, phi, grid)
        modes = core.TLSMixingModes(theta, omega, grid, phi)
        alpha = np.array([modes.phases(j)[0] for j in range(grid.n_samples)])
    record = core.propagate(schedule, psi0, grid, rel_tol=config.rel_tol)
    p1, p2 = core.two_level_populations(record)
    ad = core.adiabatic_reference(controls)
    moduli, phases = core.mode_transport_check(record, modes, 0)
    header = ["t", "P1", "P2", "P1_ad", "P2_ad", "overlap_mode_plus", "phase_mode_plus", "alpha_plus"]
    rows = [
        [
            float(grid.nodes[j]),
            float(p1[j]),
            float(p2[j]),
            float(ad[j, 0]),
            float(ad[j, 1]),
            float(moduli[j]),
            float(phases[j]),
            float(alpha[j]),
        ]
        for j in range(grid.n_samples)
    ]
    return header, rows


def _propagate_ho(loaded: LoadedDesign, method: str, config: RunConfig):
    grid = TimeGrid.uniform(loaded.t_f, config.samples)
    n_dim = config.fock_dim
    level = config.state if config.state is not None else 0
    if not 0 <= level < n_dim:
        raise UsageError("--state must be a Fock index below --fock-dim")
    psi0 = fock.StateVector.basis_state(n_dim, level)
    if method == "invariant":
        design: ho_design.ErmakovDesign = loaded.payload
        schedule = schedules.ho_invariant_schedule(design, n_dim)
        modes = core.HOInvariantModes(design, grid, n_dim, level + 1)
    else:
        ramp: ho_design.OmegaRamp = loaded.payload
        schedule = schedules.ho_berry_schedule(ramp, n_dim, counterdiabatic=(method == "counterdiabatic"))
        modes = core.HOReferenceModes(ramp, grid, n_dim, level + 1)
    record = core.propagate(schedule, psi0, grid, rel_tol=config.rel_tol)
    moduli, _ = core.mode_transport_check(record, modes, level)
    pops = core.populations(record, levels=[0, 1, 2, 3])
    norms = np.linalg.norm(record.states, axis=1)
    header = ["t", f"fidelity_to_mode_{level}", "pop_0", "pop_1", "pop_2", "pop_3", "norm"]
    rows = [
        [
            float(grid.nodes[j]),
            float(moduli[j] ** 2),
            float(pops[j, 0]),
            float(pops[j, 1]),
            float(pops[j, 2]),
            float(pops[j, 3]),
            float(norms[j]),
        ]
        for j in range(grid.n_samples)
    ]
    return header, rows


# ------------------------------------------------------------------ check --

CHECK_THRESHOLDS = {
    "design_residual": 1e-10,
    "auxiliary_residual": 1e-12,
    "endpoint_commutator": 1e-10,
    "invariance_residual": 1e-8,
    "norm_drift": 1e-8,
    "truncation_delta": 1e-8,
}


def cmd_check(args) -> int:
    config = RunConfig.from_args(args)
    loaded = _load_design(args.design)
    if loaded.system == "two_level":
        report = _check_tls(loaded, config)
    else:
        report = _check_ho(loaded, config)
    text = json.dumps(report.to_dict(), indent=2)
    if config.out:
        with open(config.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    if not report.all_pass:
        failing = [name for name, entry in report.criteria.items() if not entry["pass"]]
        print(f"FAILED: {', '.join(failing)}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def _criterion(value: float, threshold: float) -> dict:
    return {"value": value, "threshold": threshold, "pass": bool(value <= threshold)}


def _check_tls(loaded: LoadedDesign, config: RunConfig) -> CheckReport:
    grid = TimeGrid.uniform(loaded.t_f, config.samples)
    fine = TimeGrid.uniform(loaded.t_f, max(config.samples, 1001))
    psi0 = np.array([0.0, 1.0], dtype=complex)
    if loaded.kind == "invariant":
        design: tls_design.AngleDesign = loaded.payload
        schedule = schedules.tls_invariant_schedule(design)
        controls = tls_design.controls_from_angles(design, grid)
        aux = 0.0
        scale = HBAR * max(np.max(np.abs(controls.delta.values)), np.max(controls.omega_r.values))
        for node in range(1, grid.n_samples - 1):
            mismatch = (
                tls_design.reconstruct_hamiltonian(design, controls, node).matrix
                - tls_design.hamiltonian(controls, node).matrix
            )
            aux = max(aux, float(np.max(np.abs(mismatch))) / scale)
        endpoint = tls_design.commutator_endpoint_report(design, controls)
        endpoint_rel = max(endpoint.relative_start, endpoint.relative_end)
        invariant_fn = schedules.tls_invariant_evaluator(design)
        metric = tls_design.adiabaticity_metric(controls)
        aux_entry = _criterion(aux, CHECK_THRESHOLDS["auxiliary_residual"])
    else:
        theta, omega, phi = loaded.payload
        schedule = schedules.tls_mixing_schedule(theta, omega, phi, include_h1=True)
        controls = _mixing_controls(theta, omega, phi, grid)
        h1_end = max(
            np.max(np.abs(_mixing_h1(theta, omega, phi, 0.0))),
            np.max(np.abs(_mixing_h1(theta, omega, phi, loaded.t_f))),
        ) / (HBAR * max(np.max(controls.omega_r.values), 1e-300))
        aux_entry = _criterion(float(h1_end), CHECK_THRESHOLDS["auxiliary_residual"] * 100)
        endpoint_rel = _tracking_endpoint_commutator(schedule, theta, phi, loaded.t_f)
        invariant_fn = schedules.tls_mixing_invariant_evaluator(theta, phi)
        metric = tls_design.adiabaticity_metric(controls)
    record = core.propagate(schedule, psi0, grid, rel_tol=config.rel_tol)
    residual = core.invariance_residual(schedule, invariant_fn, fine)
    return CheckReport(
        system="two_level",
        kind=loaded.kind,
        design_residual_max=aux_entry["value"],
        endpoint_commutator_relative=endpoint_rel,
        invariance_residual=residual,
        norm_drift=record.norm_drift,
        adiabaticity_metric=metric,
        truncation_delta=None,
        criteria={
            "auxiliary_residual": aux_entry,
            "endpoint_commutator": _criterion(endpoint_rel, CHECK_THRESHOLDS["endpoint_commutator"]),
            "invariance_residual": _criterion(residual, CHECK_THRESHOLDS["invariance_residual"]),
            "norm_drift": _criterion(record.norm_drift, CHECK_THRESHOLDS["norm_drift"]),
        },
        extras={},
    )


def _mixing_controls(theta, omega, phi, grid) -> tls_design.TLSControls:
    from .curves import SampledScalar

    ts = grid.nodes
    th = theta(ts)
    om = omega(ts)
    return tls_design.TLSControls(
        grid=grid,
        delta=SampledScalar(grid, om * np.cos(th)),
        omega_r=SampledScalar(grid, np.abs(om * np.sin(th))),
        phi=SampledScalar(grid, np.broadcast_to(phi(ts), ts.shape).copy()),
    )


def _mixing_h1(theta, omega, phi, t: float) -> np.ndarray:
    provider = schedules.TLSMixingCoefficients.from_curves(theta, omega, phi, include_h0=False, include_h1=True)
    c = provider.coefficients(t)
    return (c @ schedules.tls_basis().reshape(3, -1)).reshape(2, 2)


def _tracking_endpoint_commutator(schedule, theta, phi, t_f: float) -> float:
    invariant_fn = schedules.tls_mixing_invariant_evaluator(theta, phi)
    worst = 0.0
    for t in (0.0, t_f):
        h = schedule.evaluate(t)
        i_mat = invariant_fn(t)
        norm = np.linalg.norm(h @ i_mat - i_mat @ h)
        scale = max(np.linalg.norm(h) * np.linalg.norm(i_mat), 1e-300)
        worst = max(worst, float(norm / scale))
    return worst


def _check_ho(loaded: LoadedDesign, config: RunConfig) -> CheckReport:
    grid = TimeGrid.uniform(loaded.t_f, config.samples)
    fine = TimeGrid.uniform(loaded.t_f, max(config.samples, 1001))
    n_dim = config.fock_dim
    if loaded.kind == "invariant":
        design: ho_design.ErmakovDesign = loaded.payload
        schedule = schedules.ho_invariant_schedule(design, n_dim)
        invariant_fn = schedules.ho_invariant_evaluator(design, n_dim)
        ts = fine.nodes
        b = design.b(ts)
        bdd = design.b(ts, order=2)
        w2 = np.array([ho_design.omega_squared(design, float(t)) for t in ts])
        ermakov = np.max(np.abs(bdd + w2 * b - design.omega0**2 / b**3)) / design.omega0**2
        design_entry = _criterion(float(ermakov), CHECK_THRESHOLDS["design_residual"])
        metric = _ho_adiabaticity(w2, fine)
        min_w2 = float(np.min(w2))
    else:
        ramp: ho_design.OmegaRamp = loaded.payload
        schedule = schedules.ho_berry_schedule(ramp, n_dim, counterdiabatic=True)
        invariant_fn = schedules.ho_berry_invariant_evaluator(ramp, n_dim)
        ts = fine.nodes
        w = ramp.omega(ts)
        wd = ramp.omega(ts, order=1)
        design_entry = _criterion(
            float(max(abs(wd[0]), abs(wd[-1])) / np.max(np.abs(wd)) if np.max(np.abs(wd)) > 0 else 0.0),
            CHECK_THRESHOLDS["design_residual"] * 100,
        )
        metric = float(np.max(np.abs(wd) / w**2))
        min_w2 = float(np.min(w**2))
    endpoint_rel = _ho_endpoint_commutator(schedule, invariant_fn, loaded.t_f)
    level = config.state if config.state is not None else 0
    psi0 = fock.StateVector.basis_state(n_dim, level)
    record = core.propagate(schedule, psi0, grid, rel_tol=config.rel_tol)
    residual = core.invariance_residual(schedule, invariant_fn, fine, truncation_margin=schedule.bandwidth)
    fid_lo = _final_mode_fidelity(loaded, n_dim, level, grid, config)
    fid_hi = _final_mode_fidelity(loaded, 2 * n_dim, level, grid, config)
    truncation = abs(fid_hi - fid_lo)
    return CheckReport(
        system="oscillator",
        kind=loaded.kind,
        design_residual_max=design_entry["value"],
        endpoint_commutator_relative=endpoint_rel,
        invariance_residual=residual,
        norm_drift=record.norm_drift,
        adiabaticity_metric=metric,
        truncation_delta=truncation,
        criteria={
            "design_residual": design_entry,
            "endpoint_commutator": _criterion(endpoint_rel, CHECK_THRESHOLDS["endpoint_commutator"]),
            "invariance_residual": _criterion(residual, CHECK_THRESHOLDS["invariance_residual"]),
            "norm_drift": _criterion(record.norm_drift, CHECK_THRESHOLDS["norm_drift"]),
            "truncation_delta": _criterion(truncation, CHECK_THRESHOLDS["truncation_delta"]),
        },
        extras={"min_omega_squared": min_w2, "trap_inverted": bool(min_w2 < 0)},
    )


def _ho_adiabaticity(w2: np.ndarray, grid: TimeGrid) -> float:
    if np.any(w2 <= 0):
        return float("inf")
    w = np.sqrt(w2)
    wd = sampled_derivative(w, grid.spacing)
    return float(np.max(np.abs(wd) / w**2))


def _ho_endpoint_commutator(schedule, invariant_fn, t_f: float) -> float:
    worst = 0.0
    for t in (0.0, t_f):
        h = schedule.evaluate(t)
        i_mat = invariant_fn(t)
        norm = np.linalg.norm(h @ i_mat - i_mat @ h)
        scale = max(np.linalg.norm(h) * np.linalg.norm(i_mat), 1e-300)
        worst = max(worst, float(norm / scale))
    return worst


def _final_mode_fidelity(loaded: LoadedDesign, n_dim: int, level: int, grid: TimeGrid, config: RunConfig) -> float:
    psi0 = fock.StateVector.basis_state(n_dim, level)
    if loaded.kind == "invariant":
        design = loaded.payload
        schedule = schedules.ho_invariant_schedule(design, n_dim)
        h_final = fock.build_operator(ho_design.hamiltonian_form(design, loaded.t_f), n_dim, design.omega0)
    else:
        ramp = loaded.payload
        schedule = schedules.ho_berry_schedule(ramp, n_dim, counterdiabatic=True)
        w_f = ramp.omega(loaded.t_f)
        h_final = fock.build_operator(
            ho_design.QuadraticForm(0.5, 0.5 * w_f**2, 0.0), n_dim, ramp.omega0
        )
    record = core.propagate(schedule, psi0, grid, rel_tol=config.rel_tol)
    target = fock.eigenpairs(h_final, level + 1)[level][1]
    return core.fidelity(record.final_state, target)


# ------------------------------------------------------------------ sweep --

def cmd_sweep(args) -> int:
    config = RunConfig.from_args(args)
    tf_values = _parse_tf_list(args.tf)
    if not tf_values:
        raise UsageError("sweep needs a non-empty --tf list")
    jobs = max(1, config.jobs)

    def run_row(t_f: float):
        try:
            if config.system == "tls":
                return _sweep_row_tls(t_f, args.preset, config)
            return _sweep_row_ho(t_f, args, config)
        except Exception as exc:
            width = 3 if config.system == "tls" else 4
            return [t_f] + [float("nan")] * width + [f"{type(exc).__name__}: {exc}"]

    if jobs == 1:
        rows = [run_row(t_f) for t_f in tf_values]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(run_row, tf_values))
    rows.sort(key=lambda row: row[0])
    if config.system == "tls":
        header = ["t_f", "final_infidelity", "peak_omega_r", "adiabaticity_metric", "error"]
    else:
        header = ["t_f", "final_infidelity", "min_omega_sq", "trap_inverted", "adiabaticity_metric", "error"]
    if config.out:
        _write_csv(config.out, header, rows, config.time_unit)
    for row in rows:
        print(",".join(_fmt(v) for v in row))
    return EXIT_OK


def _parse_tf_list(spec: str) -> list[float]:
    try:
        values = [float(tok) for tok in spec.split(",") if tok.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --tf list: {spec!r}") from exc
    if any(v <= 0 for v in values):
        raise UsageError("sweep t_f values must be positive")
    return values


def _sweep_row_tls(t_f: float, preset_name: str, config: RunConfig) -> list:
    preset = tls_design.preset_fig2 if preset_name == "fig2" else tls_design.preset_fig1
    design = preset(t_f)
    grid = TimeGrid.uniform(t_f, config.samples)
    controls = tls_design.controls_from_angles(design, grid)
    schedule = schedules.tls_invariant_schedule(design)
    record = core.propagate(schedule, np.array([0, 1], dtype=complex), grid, rel_tol=config.rel_tol)
    _, p2 = core.two_level_populations(record)
    return [
        t_f,
        float(max(1.0 - p2[-1], 0.0)),
        float(np.max(controls.omega_r.values)),
        tls_design.adiabaticity_metric(controls),
        "",
    ]


def _sweep_row_ho(t_f: float, args, config: RunConfig) -> list:
    if args.omega0 is None or args.omegaf is None:
        raise UsageError("sweep ho requires --omega0 and --omegaf")
    design = ho_design.design_expansion(args.omega0, args.omegaf, t_f, degree=args.degree)
    n_dim = config.fock_dim
    level = config.state if config.state is not None else 0
    grid = TimeGrid.uniform(t_f, config.samples)
    schedule = schedules.ho_invariant_schedule(design, n_dim)
    record = core.propagate(schedule, fock.StateVector.basis_state(n_dim, level), grid, rel_tol=config.rel_tol)
    h_final = fock.build_operator(ho_design.hamiltonian_form(design, t_f), n_dim, design.omega0)
    target = fock.eigenpairs(h_final, level + 1)[level][1]
    infidelity = max(1.0 - core.fidelity(record.final_state, target), 0.0)
    ts = np.linspace(0.0, t_f, 1001)
    w2 = np.array([ho_design.omega_squared(design, float(t)) for t in ts])
    fine = TimeGrid.uniform(t_f, 1001)
    return [
        t_f,
        float(infidelity),
        float(np.min(w2)),
        bool(np.min(w2) < 0),
        _ho_adiabaticity(w2, fine),
        "",
    ]


# ------------------------------------------------------------------- main --

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stakit",
        description="Design and verify shortcut-to-adiabaticity protocols.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--time-unit", default="arb", help="unit label for reports")

    p_design = sub.add_parser("design", help="create a design/schedule JSON document")
    p_design.add_argument("system", choices=["ho", "tls"])
    p_design.add_argument("--tf", type=float, required=True, help="protocol duration")
    p_design.add_argument("--omega0", type=float, help="initial frequency / Rabi scale")
    p_design.add_argument("--omegaf", type=float, help="final frequency (oscillator)")
    p_design.add_argument("--degree", type=int, default=5, help="polynomial degree for b(t)")
    p_design.add_argument("--preset", choices=["fig1", "fig2"], help="two-level preset")
    p_design.add_argument(
        "--method",
        choices=["invariant", "counterdiabatic"],
        default="invariant",
        help="invariant design or counterdiabatic reference schedule",
    )
    p_design.add_argument("--out", help="output JSON path")
    add_common(p_design)
    p_design.set_defaults(func=cmd_design)

    p_prop = sub.add_parser("propagate", help="propagate a design and emit a trajectory CSV")
    p_prop.add_argument("design", help="design JSON path")
    p_prop.add_argument("--method", choices=["invariant", "counterdiabatic", "reference_only"])
    p_prop.add_argument("--fock-dim", type=int, default=DEFAULT_FOCK_DIM)
    p_prop.add_argument("--rel-tol", type=float, default=DEFAULT_REL_TOL)
    p_prop.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    p_prop.add_argument("--state", type=int, help="initial state (two-level: 1|2, oscillator: Fock n)")
    p_prop.add_argument("--out", help="output CSV path")
    add_common(p_prop)
    p_prop.set_defaults(func=cmd_propagate)

    p_check = sub.add_parser("check", help="run the verification battery for a design")
    p_check.add_argument("design", help="design JSON path")
    p_check.add_argument("--fock-dim", type=int, default=DEFAULT_FOCK_DIM)
    p_check.add_argument("--rel-tol", type=float, default=DEFAULT_REL_TOL)
    p_check.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    p_check.add_argument("--state", type=int)
    p_check.add_argument("--out", help="output JSON path")
    add_common(p_check)
    p_check.set_defaults(func=cmd_check)

    p_sweep = sub.add_parser("sweep", help="repeat a protocol across durations")
    p_sweep.add_argument("system", choices=["ho", "tls"])
    p_sweep.add_argument("--tf", required=True, help="comma-separated t_f values")
    p_sweep.add_argument("--preset", choices=["fig1", "fig2"], default="fig1")
    p_sweep.add_argument("--omega0", type=float)
    p_sweep.add_argument("--omegaf", type=float)
    p_sweep.add_argument("--degree", type=int, default=5)
    p_sweep.add_argument("--fock-dim", type=int, default=64)
    p_sweep.add_argument("--rel-tol", type=float, default=DEFAULT_REL_TOL)
    p_sweep.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    p_sweep.add_argument("--state", type=int)
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.add_argument("--out", help="output CSV path")
    add_common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RuntimeError, ValueError, FileNotFoundError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
