"""Batch command-line front end.

Subcommands::

    attitude-vi simulate --config run.json --out traj.csv
    attitude-vi simulate --sweep --config a.json --config b.json --out outdir/ [--jobs 2]
    attitude-vi compare  --config run.json --out diag.csv [--project]
    attitude-vi solve    --inertia 2.5,2,1.5 --h 0.01 --pi 2.5,4,4.5 [solver flags]

The run summary (or the solve result) is one JSON object on stdout. Errors
are one JSON line on stderr, ``{"error": <category>, "message": ...}``, with
exit codes 2 (config/usage), 3 (solver non-convergence), 4 (I/O).

Config schema (JSON)::

    {
      "inertia":   [J1, J2, J3]  or  [[...], [...], [...]],     # kg m^2, required
      "attitude0": {"matrix": [[...], [...], [...]]}
                   or {"axis": [x, y, z], "angle": rad},          # default identity
      "omega0":    [wx, wy, wz]   (rad/s)    -- exactly one of omega0 / pi0
      "pi0":       [px, py, pz]   (kg m^2/s)
      "h":         step [s], required
      "steps":     number of steps, required
      "torque":    {"kind": "zero"}                               # default
                   {"kind": "constant", "value": [...]}
                   {"kind": "sinusoidal", "amplitude": [...], "frequency": [...], "phase": [...]}
                   {"kind": "tabulated", "times": [...], "values": [[...], ...]}
      "solver":    {"alpha": 1.0, "tol": 1e-12, "max_iters": 50,
                    "w0_strategy": "momentum_guess", "jacobian": "exact"}
      "output":    {"decimation": 1}
    }
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from attitude_vi.baseline import DiagnosticsSeries, compute_diagnostics, propagate_rk4
from attitude_vi.integrator import TorqueSchedule, Trajectory, propagate
from attitude_vi.rigid_body import AttitudeState, InertiaError, InertiaPair
from attitude_vi.so3 import exp_so3, validate_rotation
from attitude_vi.solver import SolverError, SolverOptions, newton_solve

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4

_NUM = {"type": "number"}
_VEC3 = {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3}
_MAT3 = {"type": "array", "items": _VEC3, "minItems": 3, "maxItems": 3}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["inertia", "h", "steps"],
    "properties": {
        "inertia": {"oneOf": [_VEC3, _MAT3]},
        "attitude0": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["matrix"],
                    "properties": {"matrix": _MAT3},
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["axis", "angle"],
                    "properties": {"axis": _VEC3, "angle": _NUM},
                },
            ]
        },
        "omega0": _VEC3,
        "pi0": _VEC3,
        "h": _NUM,
        "steps": {"type": "integer"},
        "torque": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["zero", "constant", "sinusoidal", "tabulated"]},
                "value": _VEC3,
                "amplitude": _VEC3,
                "frequency": _VEC3,
                "phase": _VEC3,
                "times": {"type": "array", "items": _NUM, "minItems": 1},
                "values": {"type": "array", "items": _VEC3, "minItems": 1},
            },
            "additionalProperties": False,
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "alpha": _NUM,
                "tol": _NUM,
                "max_iters": {"type": "integer"},
                "w0_strategy": {"enum": ["momentum_guess", "zero"]},
                "jacobian": {"enum": ["exact", "approx"]},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"decimation": {"type": "integer"}},
        },
    },
}

TRAJECTORY_COLUMNS = (
    ["step", "t"]
    + [f"r{i}{j}" for i in (1, 2, 3) for j in (1, 2, 3)]
    + ["pi_x", "pi_y", "pi_z", "energy", "ortho_defect", "det_defect",
       "spm_x", "spm_y", "spm_z", "newton_iters", "newton_residual"]
)

_COMPARE_FIELDS = ["energy", "pi_norm", "spm_x", "spm_y", "spm_z", "ortho_defect", "det_defect"]


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending field."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class _IOFailure(Exception):
    """Reading a config or writing an output file failed."""


@dataclass(frozen=True)
class SimConfig:
    inertia: InertiaPair
    R0: np.ndarray
    Pi0: np.ndarray
    h: float
    steps: int
    torque: TorqueSchedule
    solver: SolverOptions
    decimation: int = 1

    @property
    def initial_state(self) -> AttitudeState:
        return AttitudeState(self.R0, self.Pi0, 0.0)


def _polar(R: np.ndarray) -> np.ndarray:
    U, _, Vt = np.linalg.svd(R)
    return U @ Vt


def _parse_attitude(spec: dict | None) -> np.ndarray:
    if spec is None:
        return np.eye(3)
    if "matrix" in spec:
        R = np.asarray(spec["matrix"], dtype=np.float64)
        check = validate_rotation(R, 1e-6)
        if not check:
            raise ConfigError(
                f"not a rotation matrix (||R^T R - I||_F = {check.defect:.3e}, det = {check.det:.3g})",
                "attitude0.matrix")
        return _polar(R)
    axis = np.asarray(spec["axis"], dtype=np.float64)
    n = np.linalg.norm(axis)
    if n == 0.0:
        if spec["angle"] != 0:
            raise ConfigError("axis must be nonzero", "attitude0.axis")
        return np.eye(3)
    return exp_so3(axis / n * float(spec["angle"]))


def _parse_torque(spec: dict | None) -> TorqueSchedule:
    if spec is None:
        return TorqueSchedule.zero()
    kind = spec["kind"]
    needed = {
        "zero": (),
        "constant": ("value",),
        "sinusoidal": ("amplitude", "frequency"),
        "tabulated": ("times", "values"),
    }[kind]
    for key in needed:
        if key not in spec:
            raise ConfigError(f"'{key}' is required for kind '{kind}'", "torque")
    try:
        if kind == "zero":
            return TorqueSchedule.zero()
        if kind == "constant":
            return TorqueSchedule.constant(spec["value"])
        if kind == "sinusoidal":
            return TorqueSchedule.sinusoidal(
                spec["amplitude"], spec["frequency"], spec.get("phase", [0.0, 0.0, 0.0]))
        return TorqueSchedule.tabulated(spec["times"], spec["values"])
    except ValueError as exc:
        raise ConfigError(str(exc), "torque") from None


def parse_config(text: str) -> SimConfig:
    """Parse and validate a JSON config document, applying defaults.

    Raises:
        ConfigError: on malformed JSON, schema violations (with the field
            path) or physically invalid values.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON ({exc})") from None
    errors = list(jsonschema.Draft202012Validator(CONFIG_SCHEMA).iter_errors(doc))
    if errors:
        # Not best_match(): for oneOf it descends into one arbitrary alternative.
        top = max(errors, key=jsonschema.exceptions.relevance)
        path = ".".join(str(p) for p in top.absolute_path) or "<root>"
        raise ConfigError(top.message, path)

    if ("omega0" in doc) == ("pi0" in doc):
        raise ConfigError("exactly one of 'omega0' or 'pi0' is required", "<root>")

    h = float(doc["h"])
    if not h > 0.0 or not np.isfinite(h):
        raise ConfigError("h must be positive", "h")
    steps = int(doc["steps"])
    if steps < 1:
        raise ConfigError("steps must be >= 1", "steps")

    inertia_raw = np.asarray(doc["inertia"], dtype=np.float64)
    try:
        if inertia_raw.ndim == 1:
            inertia = InertiaPair.from_principal(inertia_raw)
        else:
            inertia = InertiaPair.from_j(inertia_raw)
    except (InertiaError, ValueError) as exc:
        raise ConfigError(str(exc), "inertia") from None

    R0 = _parse_attitude(doc.get("attitude0"))
    if "omega0" in doc:
        Pi0 = inertia.J @ np.asarray(doc["omega0"], dtype=np.float64)
    else:
        Pi0 = np.asarray(doc["pi0"], dtype=np.float64)

    torque = _parse_torque(doc.get("torque"))
    try:
        torque.check_horizon(0.0, steps * h)
    except ValueError as exc:
        raise ConfigError(str(exc), "torque") from None

    try:
        solver = SolverOptions(**doc.get("solver", {}))
    except ValueError as exc:
        raise ConfigError(str(exc), "solver") from None

    decimation = int(doc.get("output", {}).get("decimation", 1))
    if decimation < 1:
        raise ConfigError("decimation must be >= 1", "output.decimation")

    return SimConfig(inertia=inertia, R0=R0, Pi0=Pi0, h=h, steps=steps, torque=torque,
                     solver=solver, decimation=decimation)


def load_config(path) -> SimConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise _IOFailure(f"cannot read config {path}: {exc.strerror or exc}") from None
    return parse_config(text)


def _fmt(x) -> str:
    # repr of a Python float is the shortest string that round-trips.
    return repr(x)


def _write_rows(path, header, columns) -> None:
    rows = zip(*(c.tolist() for c in columns))
    try:
        with open(path, "w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(map(_fmt, row)) + "\n")
    except OSError as exc:
        raise _IOFailure(f"cannot write {path}: {exc.strerror or exc}") from None


def write_trajectory_csv(path, traj: Trajectory, diag: DiagnosticsSeries) -> None:
    n = len(traj)
    its = traj.newton_iterations if traj.newton_iterations is not None else np.zeros(n, np.int64)
    res = traj.newton_residual if traj.newton_residual is not None else np.zeros(n)
    columns = [traj.steps, traj.t]
    columns += [traj.R[:, i, j] for i in range(3) for j in range(3)]
    columns += [traj.Pi[:, i] for i in range(3)]
    columns += [diag.energy, diag.ortho_defect, diag.det_defect]
    columns += [diag.spatial_momentum[:, i] for i in range(3)]
    columns += [its, res]
    _write_rows(path, TRAJECTORY_COLUMNS, columns)


def _error(category: str, message: str, **extra) -> None:
    print(json.dumps({"error": category, "message": message, **extra}), file=sys.stderr)


def _solver_failure(exc: SolverError) -> int:
    extra = {"residual_norm": exc.residual_norm}
    if exc.step_index is not None:
        extra["step"] = exc.step_index
    _error("solver", str(exc), **extra)
    return EXIT_SOLVER


def _simulate(cfg: SimConfig, out_path) -> dict:
    start = time.perf_counter()
    traj = propagate(cfg.initial_state, cfg.torque, cfg.h, cfg.steps, cfg.inertia,
                     cfg.solver, decimation=cfg.decimation)
    elapsed = time.perf_counter() - start
    diag = compute_diagnostics(traj, cfg.inertia.J)
    write_trajectory_csv(out_path, traj, diag)
    final = traj.final
    return {
        "command": "simulate",
        "output": str(out_path),
        "steps": cfg.steps,
        "h": cfg.h,
        "final": {"t": final.t, "R": final.R.tolist(), "Pi": final.Pi.tolist()},
        "diagnostics": diag.summary(),
        "elapsed_s": elapsed,
    }


def run_simulate(cfg: SimConfig, out_path) -> int:
    """Integrate, write the trajectory CSV and print the summary JSON."""
    try:
        summary = _simulate(cfg, out_path)
    except SolverError as exc:
        return _solver_failure(exc)
    except _IOFailure as exc:
        _error("io", str(exc))
        return EXIT_IO
    print(json.dumps(summary))
    return EXIT_OK


def _sweep_one(args) -> tuple[str, int, dict]:
    config_path, out_path = args
    try:
        cfg = load_config(config_path)
        return config_path, EXIT_OK, _simulate(cfg, out_path)
    except ConfigError as exc:
        return config_path, EXIT_CONFIG, {"error": "config", "message": str(exc)}
    except SolverError as exc:
        return config_path, EXIT_SOLVER, {"error": "solver", "message": str(exc),
                                          "step": exc.step_index}
    except _IOFailure as exc:
        return config_path, EXIT_IO, {"error": "io", "message": str(exc)}


def run_sweep(config_paths: list[str], out_dir, jobs: int = 1) -> int:
    """Run independent configs, each to ``out_dir/<config stem>.csv``."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        _error("io", f"cannot create {out_dir}: {exc.strerror or exc}")
        return EXIT_IO
    work = [(p, out_dir / f"{Path(p).stem}.csv") for p in config_paths]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_one, work))
    else:
        results = [_sweep_one(w) for w in work]
    codes = [code for _, code, _ in results]
    print(json.dumps({
        "command": "sweep",
        "runs": [{"config": str(p), "exit": code, **body} for p, code, body in results],
    }))
    failed = [c for c in codes if c != EXIT_OK]
    if failed:
        _error("sweep", f"{len(failed)} of {len(codes)} runs failed")
        return failed[0]
    return EXIT_OK


def _method_summary(diag: DiagnosticsSeries) -> dict:
    return {
        "max_energy_drift": float(diag.energy_drift().max()),
        "max_spatial_momentum_drift": float(diag.spatial_momentum_drift().max()),
        "max_ortho_defect": float(diag.ortho_defect.max()),
        "max_det_defect": float(diag.det_defect.max()),
    }


def _ratio(a: float, b: float):
    if b == 0.0:
        return None if a == 0.0 else "inf"
    return a / b


def run_compare(cfg: SimConfig, out_path, project: bool = False) -> int:
    """Run the variational integrator and the RK4 baseline side by side.

    Writes a joined diagnostics CSV (one column group per method) and prints
    a summary of the maximum drifts and defects of each.
    """
    state = cfg.initial_state
    J = cfg.inertia.J
    try:
        runs = {"vi": propagate(state, cfg.torque, cfg.h, cfg.steps, cfg.inertia,
                                cfg.solver, decimation=cfg.decimation)}
    except SolverError as exc:
        return _solver_failure(exc)
    runs["rk4"] = propagate_rk4(state, cfg.torque, cfg.h, cfg.steps, cfg.inertia,
                                decimation=cfg.decimation)
    if project:
        runs["rk4p"] = propagate_rk4(state, cfg.torque, cfg.h, cfg.steps, cfg.inertia,
                                     project=True, decimation=cfg.decimation)
    diags = {name: compute_diagnostics(tr, J) for name, tr in runs.items()}

    vi = diags["vi"]
    header = ["step", "t"]
    columns = [vi.steps, vi.t]
    for name, d in diags.items():
        header += [f"{name}_{f}" for f in _COMPARE_FIELDS]
        columns += [d.energy, d.pi_norm, *d.spatial_momentum.T, d.ortho_defect, d.det_defect]
    header.append("vi_newton_iters")
    columns.append(vi.newton_iterations)
    try:
        _write_rows(out_path, header, columns)
    except _IOFailure as exc:
        _error("io", str(exc))
        return EXIT_IO

    methods = {name: _method_summary(d) for name, d in diags.items()}
    ratios = {
        name: {key: _ratio(m[key], methods["vi"][key]) for key in m}
        for name, m in methods.items() if name != "vi"
    }
    print(json.dumps({
        "command": "compare",
        "output": str(out_path),
        "steps": cfg.steps,
        "h": cfg.h,
        "methods": methods,
        "baseline_over_vi": ratios,
    }))
    return EXIT_OK


def _floats(text: str, name: str) -> np.ndarray:
    try:
        return np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}", name) from None


def parse_inertia_spec(text: str) -> InertiaPair:
    """``"J1,J2,J3"`` principal moments or nine row-major entries."""
    vals = _floats(text, "inertia")
    try:
        if vals.size == 3:
            return InertiaPair.from_principal(vals)
        if vals.size == 9:
            return InertiaPair.from_j(vals.reshape(3, 3))
    except (InertiaError, ValueError) as exc:
        raise ConfigError(str(exc), "inertia") from None
    raise ConfigError("expected 3 principal moments or 9 matrix entries", "inertia")


def run_solve(inertia: InertiaPair, h: float, pi, opts: SolverOptions) -> int:
    """Solve one implicit step equation and print the result as JSON."""
    try:
        res = newton_solve(inertia.Jd, h, pi, opts)
    except SolverError as exc:
        return _solver_failure(exc)
    print(json.dumps({
        "w": res.w.tolist(),
        "F": res.F.tolist(),
        "iterations": res.iterations,
        "residual_norm": res.residual_norm,
    }))
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _error("usage", message)
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="attitude-vi", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="integrate with the variational integrator")
    p.add_argument("--config", action="append", required=True,
                   help="JSON config (repeat with --sweep)")
    p.add_argument("--out", required=True, help="CSV path (directory with --sweep)")
    p.add_argument("--sweep", action="store_true", help="run several configs")
    p.add_argument("--jobs", type=int, default=1, help="parallel runs for --sweep")

    p = sub.add_parser("compare", help="variational vs RK4 baseline diagnostics")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--project", action="store_true",
                   help="also run RK4 with per-step polar reprojection")

    p = sub.add_parser("solve", help="solve one implicit step equation")
    p.add_argument("--inertia", required=True, help="J1,J2,J3 or 9 row-major entries")
    p.add_argument("--h", required=True, type=float)
    p.add_argument("--pi", required=True, help="px,py,pz")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-iters", type=int, default=50)
    p.add_argument("--w0-strategy", choices=["momentum_guess", "zero"], default="momentum_guess")
    p.add_argument("--jacobian", choices=["exact", "approx"], default="exact")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            if args.sweep:
                return run_sweep(args.config, args.out, args.jobs)
            if len(args.config) != 1:
                raise ConfigError("several --config given without --sweep")
            return run_simulate(load_config(args.config[0]), args.out)
        if args.command == "compare":
            return run_compare(load_config(args.config), args.out, args.project)
        inertia = parse_inertia_spec(args.inertia)
        pi = _floats(args.pi, "pi")
        if pi.size != 3:
            raise ConfigError("expected 3 components", "pi")
        if not args.h > 0:
            raise ConfigError("h must be positive", "h")
        try:
            opts = SolverOptions(alpha=args.alpha, tol=args.tol, max_iters=args.max_iters,
                                 w0_strategy=args.w0_strategy, jacobian=args.jacobian)
        except ValueError as exc:
            raise ConfigError(str(exc), "solver") from None
        return run_solve(inertia, args.h, pi, opts)
    except ConfigError as exc:
        _error("config", str(exc))
        return EXIT_CONFIG
    except _IOFailure as exc:
        _error("io", str(exc))
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
