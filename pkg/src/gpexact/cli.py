"""Command-line front end: scenario execution and data emission.

Subcommands: evolve, fock, spectrum, verify, scenario.  Configs and reports
are JSON; numeric series are CSV with headers, scientific notation, 17
significant digits, and no timestamps, so identical configs give bitwise
identical bodies.  GPX_LOG in {error, info, debug} controls verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import GpexactError
from .evolution import EvolveOptions, evolve, evolve_inverse, superpose
from .kernel import build_kernel_context, closed_form_kernel_1d
from .ehrenfest import integrate_moments, integrate_variations
from .model import build_model
from .moments import constants_of_motion, first_moments, norm_squared, \
    second_moments
from .oracle import OracleConfig, split_step_evolve
from .state import Axis, GridState, gaussian_packet, l2_distance, l2_norm, \
    load_state
from .symmetry import fock_state, ladder_apply, quasi_energy

log = logging.getLogger("gpexact")

DEFAULT_TOLS = {
    "norm": 1e-8,
    "roundtrip": 1e-8,
    "oracle": 1e-6,
    "ladder": 1e-6,
    "quasi_energy": 1e-5,
    "kernel": 1e-9,
}


def _fmt(v: float) -> str:
    return f"{v:.16e}"


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def emit_report(checks: list[dict]) -> dict:
    """Machine-readable report: per-check name, value, tolerance, flag."""
    return {"pass": all(c["pass"] for c in checks), "checks": checks}


def _check(name: str, value: float, tol: float) -> dict:
    ok = bool(value <= tol)
    log.info("check %-28s value=%.3e tol=%.1e %s",
             name, value, tol, "ok" if ok else "FAIL")
    return {"name": name, "value": float(value), "tolerance": float(tol),
            "pass": ok}


def _build_axis(cfg: dict, grid_override: int | None) -> Axis:
    grid = cfg.get("grid", {})
    num = int(grid_override or grid.get("n", 2048))
    return Axis(float(grid.get("lo", -12.0)), float(grid.get("hi", 12.0)), num)


def _build_state(cfg: dict, model, axis: Axis) -> GridState:
    spec = cfg.get("initial_state", {"kind": "gaussian"})
    kind = spec.get("kind", "gaussian")
    if kind == "gaussian":
        x0 = [float(spec.get("x0", 1.0))]
        p0 = [float(spec.get("p0", 0.0))]
        kt = model.kappa * float(spec.get("norm_sq", 1.0))
        alpha = spec.get("alpha")
        if alpha is None and model.example is not None:
            alpha = model.mass * model.example.Omega(kt)
        return gaussian_packet((axis,), model.hbar, x0, p0,
                               [float(alpha or 1.0)])
    if kind == "fock":
        return fock_state(model, int(spec.get("n", 0)), 0.0, axis=axis)
    if kind == "superposition":
        parts = spec["parts"]
        total = None
        for part in parts:
            sub = _build_state({"initial_state": part["state"]}, model, axis)
            term = complex(part.get("re", 1.0), part.get("im", 0.0)) * sub.psi
            total = term if total is None else total + term
        return GridState((axis,), total, 0.0, model.hbar)
    if kind == "file":
        return load_state(spec["path"])
    raise GpexactError(f"unknown initial state kind {kind!r}")


def _schedule(cfg: dict) -> list[float]:
    times = [float(t) for t in cfg.get("schedule", [0.5, 1.0])]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise GpexactError("schedule times must be strictly increasing")
    return times


def _task_evolve(cfg, model, psi, times, out, tols, opts) -> list[dict]:
    checks = []
    rows = []
    d = 2 * model.n
    pairs = [(i, j) for i in range(d) for j in range(i, d)]
    for k, t in enumerate(times):
        state = evolve(model, psi, t, opts)
        z = first_moments(state)
        dd = second_moments(state, z)
        rows.append([t, *z, *[dd[i, j] for i, j in pairs]])
        dens = np.abs(state.psi) ** 2
        _write_csv(out / f"density_t{k}.csv", ["x", "density"],
                   zip(state.axes[0].points, dens))
        checks.append(_check(f"norm_conservation_t{k}",
                             abs(norm_squared(state) - norm_squared(psi)),
                             tols["norm"]))
    header = ["t"] + [f"z{i}" for i in range(d)] \
        + [f"Delta{i}{j}" for i, j in pairs]
    _write_csv(out / "moments.csv", header, rows)
    return checks


def _task_roundtrip(cfg, model, psi, times, out, tols, opts) -> list[dict]:
    state = evolve(model, psi, times[-1], opts)
    back = evolve_inverse(model, state, psi.t, opts)
    return [_check("inverse_roundtrip", l2_distance(back, psi),
                   tols["roundtrip"])]


def _task_oracle(cfg, model, psi, times, out, tols, opts) -> list[dict]:
    t = times[-1]
    exact = evolve(model, psi, t, opts)
    dt0 = float(cfg.get("oracle_dt", 2.5e-4))
    rows = []
    err = math.nan
    for dt in (4 * dt0, 2 * dt0, dt0):
        ref = split_step_evolve(model, psi, t, OracleConfig(dt=dt))
        err = l2_distance(exact, ref)
        rows.append([dt, err])
    _write_csv(out / "oracle_error.csv", ["dt", "l2_error"], rows)
    slope = np.polyfit(np.log([r[0] for r in rows]),
                       np.log([r[1] for r in rows]), 1)[0]
    return [_check("oracle_l2", err, tols["oracle"]),
            _check("oracle_slope_defect", max(0.0, 1.9 - slope), 0.0)]


def _task_ladder(cfg, model, psi, times, out, tols, opts) -> list[dict]:
    checks = []
    axis = psi.axes[0]
    t = times[0]
    for n in range(int(cfg.get("ladder_levels", 2))):
        fn = fock_state(model, n, t, axis=axis)
        up = ladder_apply(model, +1, fn, opts=opts)
        ref = fock_state(model, n + 1, t, axis=axis)
        coeff = l2_norm(up)
        checks.append(_check(f"ladder_up_coeff_n{n}",
                             abs(coeff / math.sqrt(n + 1) - 1.0),
                             tols["ladder"]))
        checks.append(_check(f"ladder_up_state_n{n}",
                             l2_distance(up.with_psi(up.psi / coeff), ref),
                             10 * tols["ladder"]))
    return checks


def _task_quasi_energy(cfg, model, psi, times, out, tols, opts) -> list[dict]:
    params = model.example
    n_max = int(cfg.get("spectrum_levels", 3))
    rows = [[float(n), quasi_energy(model, n)] for n in range(n_max)]
    _write_csv(out / "quasi_energy.csv", ["n", "energy"], rows)
    T = 2.0 * math.pi / params.omega
    f0 = fock_state(model, 0, 0.0, axis=psi.axes[0])
    one_period = evolve(model, f0, T, opts)
    target = np.exp(-1j * rows[0][1] * T) * f0.psi
    phase_err = abs(np.angle(np.vdot(target, one_period.psi)))
    return [_check("quasi_energy_phase", phase_err, tols["quasi_energy"])]


def _task_kernel(cfg, model, psi, times, out, tols, opts) -> list[dict]:
    from .kernel import green_function
    cons = constants_of_motion(model, psi)
    t = times[-1]
    traj = integrate_moments(model, cons.kappa_tilde, cons.point, psi.t, t,
                             rtol=1e-12, atol=1e-14)
    var = integrate_variations(model, cons.kappa_tilde, psi.t, t,
                               rtol=1e-12, atol=1e-14)
    ctx = build_kernel_context(model, cons.kappa_tilde, traj, var, psi.t, t)
    rng = np.random.default_rng(0)
    xs = rng.normal(scale=1.5, size=100)
    ys = rng.normal(scale=1.5, size=100)
    got = green_function(ctx, xs, ys)
    ref = closed_form_kernel_1d(model.example, cons.kappa_tilde, traj,
                                xs, ys, t, psi.t)
    return [_check("kernel_crosscheck",
                   float(np.max(np.abs(got - ref))), tols["kernel"])]


TASKS = {
    "evolve": _task_evolve,
    "inverse-roundtrip": _task_roundtrip,
    "oracle-compare": _task_oracle,
    "ladder": _task_ladder,
    "quasi-energy": _task_quasi_energy,
    "kernel-crosscheck": _task_kernel,
}


def run_scenario(cfg: dict, out_dir: Path, tol_override: float | None = None,
                 grid_override: int | None = None,
                 threads: int = 1) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    model = build_model(cfg["model"])
    axis = _build_axis(cfg, grid_override)
    psi = _build_state(cfg, model, axis)
    times = _schedule(cfg)
    tols = dict(DEFAULT_TOLS)
    tols.update({k: float(v) for k, v in cfg.get("tolerances", {}).items()})
    if tol_override is not None:
        tols = {k: tol_override for k in tols}
    opts = EvolveOptions(threads=threads)

    checks = []
    for task in cfg.get("tasks", ["evolve"]):
        if task not in TASKS:
            raise GpexactError(f"unknown task {task!r}")
        log.info("running task %s", task)
        checks.extend(TASKS[task](cfg, model, psi, times, out_dir, tols, opts))
    report = emit_report(checks)
    with open(out_dir / "report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report


GOLDEN_SCENARIOS = {
    "driven-1d": {
        "model": {"example": "1d", "hbar": 1.0, "kappa": 0.5, "m": 1.0,
                  "k": 1.0, "e": 1.0, "E": 0.1, "omega": 0.5, "a": 0.2,
                  "b": 0.1, "c": 0.3},
        "grid": {"lo": -12.0, "hi": 12.0, "n": 1024},
        "initial_state": {"kind": "gaussian", "x0": 1.0, "p0": 0.2},
        "schedule": [0.5, 1.0],
        "tasks": ["evolve", "inverse-roundtrip", "kernel-crosscheck",
                  "ladder"],
    },
    "harmonic-limit": {
        "model": {"example": "1d", "hbar": 1.0, "kappa": 0.0, "m": 1.0,
                  "k": 1.0, "e": 1.0, "E": 0.0, "omega": 0.5, "a": 0.0,
                  "b": 0.0, "c": 0.0},
        "grid": {"lo": -12.0, "hi": 12.0, "n": 1024},
        "initial_state": {"kind": "fock", "n": 1},
        "schedule": [0.8],
        "tasks": ["evolve", "inverse-roundtrip", "kernel-crosscheck"],
    },
}


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise GpexactError(f"config file not found: {path}")
    except json.JSONDecodeError as err:
        raise GpexactError(f"malformed config {path}: {err}")


def _cmd_scenario(args) -> int:
    cfg = _load_config(args.config)
    report = run_scenario(cfg, Path(args.out), args.tol, args.grid,
                          args.threads)
    print("pass" if report["pass"] else "FAIL",
          f"({len(report['checks'])} checks)")
    return 0 if report["pass"] else 1


def _cmd_evolve(args) -> int:
    cfg = _load_config(args.config)
    cfg["tasks"] = ["evolve"]
    report = run_scenario(cfg, Path(args.out), args.tol, args.grid,
                          args.threads)
    return 0 if report["pass"] else 1


def _cmd_fock(args) -> int:
    cfg = _load_config(args.config) if args.config else \
        dict(GOLDEN_SCENARIOS["driven-1d"])
    model = build_model(cfg["model"])
    axis = _build_axis(cfg, args.grid)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    n = int(cfg.get("fock_n", 2))
    t = float(cfg.get("fock_t", 0.0))
    state = fock_state(model, n, t, axis=axis)
    _write_csv(out / f"fock_n{n}.csv", ["x", "re", "im", "density"],
               zip(axis.points, state.psi.real, state.psi.imag,
                   np.abs(state.psi) ** 2))
    print(f"wrote fock_n{n}.csv")
    return 0


def _cmd_spectrum(args) -> int:
    cfg = _load_config(args.config) if args.config else \
        dict(GOLDEN_SCENARIOS["driven-1d"])
    model = build_model(cfg["model"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    n_max = int(cfg.get("spectrum_levels", 6))
    rows = [[float(n), quasi_energy(model, n)] for n in range(n_max)]
    _write_csv(out / "quasi_energy.csv", ["n", "energy"], rows)
    print(f"wrote quasi_energy.csv ({n_max} levels)")
    return 0


def _cmd_verify(args) -> int:
    status = 0
    for name, cfg in GOLDEN_SCENARIOS.items():
        out = Path(args.out) / name
        report = run_scenario(dict(cfg), out, args.tol, args.grid,
                              args.threads)
        print(f"{name}: " + ("pass" if report["pass"] else "FAIL"))
        if not report["pass"]:
            status = 1
    return status


def main(argv=None) -> int:
    level = {"error": logging.ERROR, "info": logging.INFO,
             "debug": logging.DEBUG}.get(os.environ.get("GPX_LOG", "error"),
                                         logging.ERROR)
    logging.basicConfig(level=level, format="[%(name)s] %(message)s")

    parser = argparse.ArgumentParser(
        prog="gpexact",
        description="Exact kernel evolution for quadratic nonlocal "
                    "Gross-Pitaevskii models")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, handler, needs_config in (
            ("evolve", _cmd_evolve, True),
            ("fock", _cmd_fock, False),
            ("spectrum", _cmd_spectrum, False),
            ("verify", _cmd_verify, False),
            ("scenario", _cmd_scenario, True)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=needs_config)
        p.add_argument("--out", default="out")
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--grid", type=int, default=None)
        p.add_argument("--threads", type=int, default=1)
        p.set_defaults(handler=handler)

    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except GpexactError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
