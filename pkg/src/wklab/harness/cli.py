"""Command-line entry point: ``wklab <command> --config FILE [--out DIR]``.

Exit codes: 0 success, 1 verification failure (or an incomplete probe),
2 configuration or usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from ..action import kernel_family, peierls_barrier, barrier_rows
from ..grid import ConfigurationError, GridMismatchError, ValueField, random_field
from ..operators import estimate_critical_value, make_state, window_min_periodic
from ..weakkam import space_time_field, static_classes, verify_field
from . import io
from .config import ExperimentConfig, load_config
from .ergodize import ergodization_probe
from .rates import rate_experiment
from .sharpness import sharpness_example, tent_lower_bound

COMMANDS = ("solve", "rates", "barrier", "aubry", "verify", "sharpness", "ergodize")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wklab", description="Weak KAM numerical laboratory.")
    sub = p.add_subparsers(dest="command", metavar="command")
    sub.required = True
    for name in COMMANDS:
        s = sub.add_parser(name, help=_HELP[name])
        s.add_argument("--config", required=True, type=Path, help="experiment config (INI sections)")
        s.add_argument("--out", type=Path, default=Path("out"), help="output directory (default ./out)")
        s.add_argument("--seed", type=int, default=None, help="random seed (default: config value, else 0)")
        s.add_argument("--threads", type=int, default=None,
                       help="worker threads (accepted for compatibility; kernels run single-threaded)")
        if name == "verify":
            s.add_argument("--field", type=Path, default=None,
                           help="field CSV to verify (default: solve the configured model)")
    return p


_HELP = {
    "solve": "windowed limit of a random initial field; writes the field and residuals",
    "rates": "classic vs windowed convergence rates with log-log fits",
    "barrier": "Peierls barrier table h(y, x)",
    "aubry": "Aubry nodes and static classes",
    "verify": "check a field against the backward weak KAM conditions",
    "sharpness": "tent example: t * T_t u(x0) along return times",
    "ergodize": "covering time of the linear flow against the radius",
}


def _critical(fam, u0: ValueField, mode: str) -> float:
    if mode == "zero":
        return 0.0
    if mode == "exact" or (mode == "auto" and fam.grid.size <= 512):
        return fam.critical_value()
    state = make_state(fam.model, u0, fam.dt, fam.v_max, critical="zero")
    return estimate_critical_value(state, 40)


def _solve(cfg: ExperimentConfig, seed: int):
    model = cfg.build_model()
    grid = cfg.make_grid()
    u0 = random_field(grid, np.random.default_rng(seed))
    state = make_state(model, u0, cfg.operator.dt, cfg.operator.v_max, critical=cfg.operator.critical)
    rows = []
    prev = None
    n = 1
    limit = None
    while n <= cfg.operator.window_n:
        limit = window_min_periodic(state, n, cfg.experiment.tau)
        res = float("nan") if prev is None else float(np.max(np.abs(limit.samples - prev)))
        rows.append((n, res, state.c_estimate))
        prev = limit.samples
        n *= 2
    return state, limit, rows


def cmd_solve(cfg, args, seed) -> int:
    state, limit, rows = _solve(cfg, seed)
    out = args.out
    io.write_field(out / "solve_field.csv", limit)
    io.write_rows(out / "solve_residuals.csv", ["t", "residual", "c_estimate"], rows)
    io.write_json(out / "solve_summary.json", {
        "model": cfg.model.name,
        "resolution": cfg.grid.resolution,
        "dim": cfg.grid.dim,
        "seed": seed,
        "c_estimate": state.c_estimate,
        "window_n": rows[-1][0],
        "final_residual": rows[-1][1],
        "min": float(np.min(limit.samples)),
        "max": float(np.max(limit.samples)),
    })
    return 0


def cmd_rates(cfg, args, seed) -> int:
    study = rate_experiment(cfg, seed)
    io.write_rows(args.out / "rates.csv", ["t", "dist_classic", "dist_windowed"], study.rows())
    io.write_json(args.out / "rates.json", study.to_dict())
    return 0 if all(study.dominance) else 1


def cmd_barrier(cfg, args, seed) -> int:
    model = cfg.build_model()
    grid = cfg.make_grid()
    fam = kernel_family(model, grid, cfg.operator.dt, cfg.operator.v_max)
    c = _critical(fam, random_field(grid, np.random.default_rng(seed)), cfg.operator.critical)
    tau = cfg.experiment.tau
    table = peierls_barrier(model, grid, tau, tau, cfg.operator.window_n, cfg.operator.dt,
                            cfg.operator.v_max, c)
    io.write_matrix(args.out / "barrier.csv", table.values)
    io.write_json(args.out / "barrier.json", {
        "model": cfg.model.name,
        "critical_value": c,
        "window_n": table.window_n,
        "tau": tau,
        "min": float(np.min(table.values)),
        "max": float(np.max(table.values)),
        "max_diagonal": float(np.max(np.diag(table.values))),
    })
    return 0


def cmd_aubry(cfg, args, seed) -> int:
    model = cfg.build_model()
    grid = cfg.make_grid()
    fam = kernel_family(model, grid, cfg.operator.dt, cfg.operator.v_max)
    c = _critical(fam, random_field(grid, np.random.default_rng(seed)), cfg.operator.critical)
    tau, tol = cfg.experiment.tau, cfg.experiment.tol
    h = barrier_rows(fam, np.arange(grid.size), tau, tau, cfg.operator.window_n, c)
    diag = np.diag(h)
    nodes = np.flatnonzero(diag <= tol)
    classes = static_classes(h, nodes, tol)
    io.write_rows(args.out / "aubry.csv", ["node", "self_barrier"], [(i, diag[i]) for i in range(grid.size)])
    io.write_json(args.out / "aubry.json", {
        "model": cfg.model.name,
        "critical_value": c,
        "tol": tol,
        "aubry_nodes": nodes.tolist(),
        "classes": [cls.tolist() for cls in classes],
    })
    return 0


def cmd_verify(cfg, args, seed) -> int:
    model = cfg.build_model()
    grid = cfg.make_grid()
    if args.field is not None:
        u0 = io.read_field(args.field)
        if u0.grid != grid:
            raise GridMismatchError(f"field grid {u0.grid} differs from config grid {grid}")
        fam = kernel_family(model, grid, cfg.operator.dt, cfg.operator.v_max)
        c = _critical(fam, u0, cfg.operator.critical)
    else:
        state, u0, _ = _solve(cfg, seed)
        fam, c = state.family, state.c_estimate
    ex = cfg.experiment
    u = space_time_field(fam, u0, c)
    report, ok = verify_field(u, fam, c, sample_pairs=ex.sample_pairs, tol=ex.tol,
                              defect_tol=ex.defect_tol, span=ex.span,
                              window_n=cfg.operator.window_n, seed=seed)
    payload = report.to_dict()
    payload["passed"] = bool(ok)
    io.write_json(args.out / "verify.json", payload)
    return 0 if ok else 1


def cmd_sharpness(cfg, args, seed) -> int:
    ex = cfg.experiment
    omega = cfg.omega()
    x0 = np.broadcast_to(np.asarray(ex.x0, float), (omega.size,))
    rows = sharpness_example(ex.delta, omega, ex.m_count, x0)
    bound = tent_lower_bound(ex.delta)
    io.write_rows(args.out / "sharpness.csv", ["m", "t", "value", "scaled"],
                  [(r.m, r.t, r.value, r.scaled) for r in rows])
    scaled = [r.scaled for r in rows]
    ok = min(scaled) >= bound
    io.write_json(args.out / "sharpness.json", {
        "delta": ex.delta,
        "omega": omega.tolist(),
        "times": [r.t for r in rows],
        "scaled": scaled,
        "lower_bound": bound,
        "bound_holds": ok,
    })
    return 0 if ok else 1


def cmd_ergodize(cfg, args, seed) -> int:
    ex = cfg.experiment
    omega = cfg.omega()
    x0 = np.broadcast_to(np.asarray(ex.x0, float), (omega.size,))
    res = ergodization_probe(omega, ex.radii, x0, ex.probe_resolution, ex.horizon)
    io.write_rows(args.out / "ergodize.csv", ["R", "T"], res.rows())
    payload = res.to_dict()
    payload["horizon"] = ex.horizon
    io.write_json(args.out / "ergodize.json", payload)
    return 1 if res.timeouts else 0


_DISPATCH = {
    "solve": cmd_solve,
    "rates": cmd_rates,
    "barrier": cmd_barrier,
    "aubry": cmd_aubry,
    "verify": cmd_verify,
    "sharpness": cmd_sharpness,
    "ergodize": cmd_ergodize,
}


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads is not None and args.threads < 1:
        print("wklab: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config)
        seed = args.seed if args.seed is not None else cfg.experiment.seed
        return _DISPATCH[args.command](cfg, args, seed)
    except (ConfigurationError, GridMismatchError, ValueError) as exc:
        print(f"wklab: configuration error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
