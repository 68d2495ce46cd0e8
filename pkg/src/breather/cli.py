"""Command-line front end: ``breather analyze|solve|scan <config>``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .config import RunConfig, describe_number, load_config
from .errors import (BreatherError, DecayViolation, InvalidInput, NoSpectralGap, NotAdmissible,
                     SignConditionFailed, WrongSign)
from .floquet import c2_constants, floquet_multipliers, mode_table, monodromy, verify_c2
from .functional import eta_table, sign_branch
from .media import DirichletMedium, PeriodicStepMedium, StepMedium, default_scan_base
from .reconstruct import (assemble, check_antiperiodicity, default_bank, default_x_max, fit_decay,
                          time_grid, weak_residual, write_field_csv)
from .solver import SolveConfig, continue_in_N, increments, minimize, multiplicity_scan

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NOT_ADMISSIBLE = 2
EXIT_NO_GAP = 3
EXIT_SIGN = 4
EXIT_MAX_ITERS = 5
EXIT_GATE = 6

log = logging.getLogger("breather")


# -- serialization ------------------------------------------------------------

def _clean(obj):
    """Make values JSON-safe: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def _schema(name: str) -> dict:
    text = resources.files("breather").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def write_json(path: Path, payload: dict, schema: str | None = None) -> None:
    payload = _clean(payload)
    if schema is not None:
        jsonschema.validate(payload, _schema(schema))
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _run_info(argv, started: float) -> dict:
    return {
        "version": __version__,
        "argv": list(argv),
        "started_utc": datetime.fromtimestamp(started, timezone.utc).isoformat(),
        "duration_s": time.time() - started,
    }


# -- analyze ------------------------------------------------------------------

def _medium_block(cfg: RunConfig, medium) -> dict:
    block = {"kind": cfg.medium_kind,
             "params": {k: describe_number(v) for k, v in cfg.medium_params.items()},
             "values": medium.params(), "r_base": medium.r_base}
    if isinstance(medium, StepMedium):
        block["admissibility"] = {"sqrt(b)*omega*c*2/pi": str(medium.ratio)}
    elif isinstance(medium, PeriodicStepMedium):
        block["admissibility"] = {"l": str(medium.l_ratio), "2m": str(medium.two_m)}
    else:
        block["admissibility"] = {"omega*l/pi": f"{medium.p}/{medium.q4}"}
    return block


def analyze(cfg: RunConfig) -> tuple[int, dict]:
    medium = cfg.build_medium()
    r = cfg.r if cfg.r is not None else medium.r_base
    ks = medium.lattice(cfg.N, r)
    table = []
    profiles = mode_table(medium, ks)
    for k in ks:
        row = {"k": int(k), "slope0": profiles[int(k)].slope0, "sign": int(np.sign(profiles[int(k)].slope0))}
        if isinstance(medium, PeriodicStepMedium):
            mono = monodromy(medium, int(k))
            small, large = floquet_multipliers(mono)
            row.update(trace=mono.trace, trace_closed_form=mono.closed_form_trace,
                       rho_small=small, rho_large=large, det=mono.det)
        table.append(row)
    c2 = {}
    status = EXIT_OK
    for label, certified in (("nominal", False), ("certified", True)):
        M, rho = c2_constants(medium, certified)
        entry = {"M": M, "rho": rho, "holds": True, "violation": None}
        try:
            verify_c2(medium, cfg.N, (M, rho))
        except DecayViolation as exc:
            entry.update(holds=False, violation={"k": exc.k, "x": exc.x, "ratio": exc.ratio})
        c2[label] = entry
    if not c2["certified"]["holds"]:
        status = EXIT_GATE
    slopes = [row["slope0"] for row in table]
    branch = sign_branch(cfg.gamma, slopes)
    report = {
        "command": "analyze",
        "medium": _medium_block(cfg, medium),
        "gamma": cfg.gamma, "N": cfg.N, "r": r,
        "harmonics": table,
        "c2": c2,
        "sign_condition": {"holds": branch is not None, "branch": branch,
                           "positive_slopes": any(s > 0 for s in slopes),
                           "negative_slopes": any(s < 0 for s in slopes)},
    }
    if branch is None and status == EXIT_OK:
        status = EXIT_SIGN
    report["exit_code"] = status
    return status, report


def cmd_analyze(cfg: RunConfig, argv, jobs: int) -> int:
    started = time.time()
    status, report = analyze(cfg)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_json(cfg.out_dir / "analysis.json", report, "analysis")
    write_json(cfg.out_dir / "run_info.json", _run_info(argv, started))
    m = report["medium"]
    print(f"medium {m['kind']} {m['params']}  r_base={m['r_base']}  admissibility {m['admissibility']}")
    for row in report["harmonics"]:
        extra = ""
        if "trace" in row:
            extra = f"  tr={row['trace']:.12g}  rho=({row['rho_small']:.6g}, {row['rho_large']:.6g})"
        print(f"  k={row['k']:4d}  Phi'(0)={row['slope0']: .12g}{extra}")
    for label, e in report["c2"].items():
        print(f"  C2 {label}: M={e['M']:.6g} rho={e['rho']:.6g} {'holds' if e['holds'] else 'VIOLATED ' + str(e['violation'])}")
    sc = report["sign_condition"]
    print(f"  sign condition for gamma={cfg.gamma:g}: {'holds (' + sc['branch'] + ')' if sc['holds'] else 'fails'}")
    return status


# -- solve --------------------------------------------------------------------

def _solve_config(cfg: RunConfig, r, N=None) -> SolveConfig:
    return SolveConfig(N=N or cfg.N, r=r, k0=cfg.k0, grad_tol=cfg.grad_tol, max_iters=cfg.max_iters,
                       N_schedule=cfg.N_schedule, rng_seed=cfg.rng_seed, newton_switch=cfg.newton_switch,
                       max_restarts=cfg.max_restarts)


def _postprocess(cfg: RunConfig, medium, res, out_dir: Path, stages=None) -> tuple[dict, dict]:
    """Reconstruct, run the invariant gates and write field.csv / convergence.csv."""
    profiles = mode_table(medium, medium.lattice(res.N, res.r))
    x_max = default_x_max(medium)
    x = np.linspace(-x_max, x_max, cfg.nx)
    t = time_grid(medium.omega, cfg.nt)
    field = assemble(res.alpha, profiles, x, t, medium.omega, check_real=True)
    write_field_csv(field, out_dir / "field.csv")
    with open(out_dir / "convergence.csv", "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["stage", "N", "iteration", "J", "grad_norm"])
        for si, st in enumerate(stages or [res]):
            for it, J, g in st.history:
                wr.writerow([si, st.N, it, repr(float(J)), repr(float(g))])

    gates = {"converged": res.converged, "negative_energy": res.J_value < 0,
             "el_residual": res.el_sup <= 10 * cfg.grad_tol}
    checks: dict = {"imag_residue": field.imag_residue}
    norm = max(field.max_abs(), 1e-300)
    anti = check_antiperiodicity(res.alpha, profiles, x, t, medium.omega, res.r)
    checks["antiperiodicity"] = {"r": res.r, "max_dev": anti, "relative": anti / norm}
    gates["antiperiodicity"] = anti <= 1e-10 * norm
    if not isinstance(medium, DirichletMedium):
        dense = np.linspace(0, x_max, 4001)
        fit = fit_decay(assemble(res.alpha, profiles, dense, time_grid(medium.omega, 64), medium.omega), medium)
        checks["decay_fit"] = {"rho_fit": fit.rho_fit, "C_fit": fit.C_fit, "intercept": fit.intercept,
                               "fit_residual": fit.fit_residual, "rho_theory": fit.rho_theory,
                               "window": list(fit.window)}
        gates["decay"] = fit.rho_fit >= 0.9 * fit.rho_theory
    rep = weak_residual(res.alpha, mode_table(medium, medium.lattice(res.N)), medium, cfg.gamma,
                        default_bank(medium, res.N))
    checks["weak_residual"] = {"tests": int(rep.ks.size), "max_relative": rep.max_relative(),
                               "max_path_gap": rep.max_path_gap(), "tolerance": cfg.weak_tol}
    gates["weak_residual"] = rep.max_relative() <= cfg.weak_tol and rep.max_path_gap() <= cfg.weak_tol
    return gates, checks


def _result_payload(cfg, medium, res, gates, checks, stages=None) -> dict:
    payload = {
        "command": "solve",
        "medium": _medium_block(cfg, medium),
        "gamma": cfg.gamma, "omega": medium.omega, "T": 2 * math.pi / medium.omega,
        "result": res.summary(),
        "alpha": [{"k": int(k), "value": float(v)} for k, v in zip(res.alpha.ks, res.alpha.values) if v != 0],
        "checks": checks, "gates": gates,
        "passed": all(gates.values()),
    }
    if stages:
        payload["continuation"] = {"stages": [s.summary() for s in stages], "increments": increments(stages)}
    return payload


def cmd_solve(cfg: RunConfig, argv, jobs: int) -> int:
    started = time.time()
    medium = cfg.build_medium()
    r = cfg.r if cfg.r is not None else medium.r_base
    spec = eta_table(medium, cfg.gamma, cfg.N, r)
    scfg = _solve_config(cfg, r)
    stages = continue_in_N(spec, scfg) if cfg.N_schedule else None
    res = stages[-1] if stages else minimize(spec, scfg)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    gates, checks = _postprocess(cfg, medium, res, cfg.out_dir, stages)
    payload = _result_payload(cfg, medium, res, gates, checks, stages)
    write_json(cfg.out_dir / "result.json", payload, "result")
    write_json(cfg.out_dir / "run_info.json", _run_info(argv, started))
    print(f"J = {res.J_value:.15g}  grad_norm = {res.grad_norm:.3g}  el_sup = {res.el_sup:.3g}  "
          f"iterations = {res.iterations}  converged = {res.converged}")
    for name, ok in gates.items():
        print(f"  gate {name:16s} {'pass' if ok else 'FAIL'}")
    if not res.converged:
        return EXIT_MAX_ITERS
    return EXIT_OK if payload["passed"] else EXIT_GATE


# -- scan ---------------------------------------------------------------------

def cmd_scan(cfg: RunConfig, argv, jobs: int) -> int:
    started = time.time()
    if cfg.j_max is None or cfg.j_max < 1:
        raise InvalidInput("scan needs problem.j_max >= 1")
    medium = cfg.build_medium()
    base = default_scan_base(medium)
    entries = multiplicity_scan(medium, cfg.gamma, cfg.j_max, _solve_config(cfg, None),
                                base=base, jobs=jobs, seeding=cfg.seeding)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    T = 2 * math.pi / medium.omega
    rows = []
    for e in entries:
        row = {"j": e.j, "r": e.r, "lattice": f"{e.r}*Z_odd", "antiperiod": T / (2 * e.r),
               "status": "error" if e.error else "ok", "error": e.error, "J": None,
               "nested_in_next": e.nested_in_next, "passed": False}
        if e.result is not None:
            d = cfg.out_dir / f"j{e.j}"
            d.mkdir(exist_ok=True)
            gates, checks = _postprocess(cfg, medium, e.result, d)
            payload = _result_payload(cfg, medium, e.result, gates, checks)
            write_json(d / "result.json", payload, "result")
            row.update(J=e.result.J_value, k0=e.result.k0, converged=e.result.converged, passed=payload["passed"],
                       support=[int(k) for k in e.result.alpha.support(1e-12)])
            if not e.result.converged:
                row["status"] = "max_iters"
        rows.append(row)
    summary = {"command": "scan", "medium": _medium_block(cfg, medium), "gamma": cfg.gamma, "base": base,
               "seeding": cfg.seeding, "N": cfg.N, "entries": rows}
    write_json(cfg.out_dir / "summary.json", summary, "scan_summary")
    write_json(cfg.out_dir / "run_info.json", _run_info(argv, started))
    with open(cfg.out_dir / "summary.csv", "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["j", "r", "J", "lattice", "antiperiod", "status"])
        for row in rows:
            J = "" if row["J"] is None else repr(float(row["J"]))
            wr.writerow([row["j"], row["r"], J, row["lattice"], repr(row["antiperiod"]), row["status"]])
    for row in rows:
        J = "-" if row["J"] is None else f"{row['J']:.12g}"
        print(f"  j={row['j']} r={row['r']:<5d} J={J:>20s}  antiperiod={row['antiperiod']:.6g}  {row['status']}"
              + (f"  ({row['error']})" if row["error"] else ""))
    ok = [r for r in rows if r["status"] == "ok" and r["passed"]]
    if ok:
        return EXIT_OK
    if any(r["status"] == "max_iters" for r in rows):
        return EXIT_MAX_ITERS
    if all(r["error"] and r["error"].startswith(("SignConditionFailed", "WrongSign")) for r in rows):
        return EXIT_SIGN
    return EXIT_GATE


# -- entry point --------------------------------------------------------------

COMMANDS = {"analyze": cmd_analyze, "solve": cmd_solve, "scan": cmd_scan}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="breather", description="Breathers of a wave equation with a point nonlinearity.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("config", help="TOML run configuration")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config entry, e.g. --set problem.N=81 (repeatable)")
    p.add_argument("--jobs", type=int, default=1, help="worker threads for scan stages (default 1)")
    return p


def _setup_logging():
    level = os.environ.get("BREATHER_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.ERROR), format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        if args.jobs < 1:
            raise InvalidInput("--jobs must be at least 1")
        cfg = load_config(args.config, args.overrides)
        return COMMANDS[args.command](cfg, argv, args.jobs)
    except NotAdmissible as exc:
        print(f"not admissible: {exc}", file=sys.stderr)
        return EXIT_NOT_ADMISSIBLE
    except NoSpectralGap as exc:
        print(f"no spectral gap: {exc}", file=sys.stderr)
        return EXIT_NO_GAP
    except (SignConditionFailed, WrongSign) as exc:
        print(f"sign condition failed: {exc}", file=sys.stderr)
        return EXIT_SIGN
    except (InvalidInput, ValueError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BreatherError as exc:
        print(f"check failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_GATE
    except Exception as exc:  # noqa: BLE001 - anything else is reported as a config/runtime error
        log.exception("unexpected error")
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
