"""Run configuration: TOML file plus ``--set section.key=value`` overrides.

Numeric fields accept plain numbers or expression strings such as "pi/2",
"3*pi/8", "sqrt(2)" or "3/2√5" (read as (3/2)*sqrt(5)). Integers and
expressions are kept exact; TOML floats stay floats.
"""
from __future__ import annotations

import ast
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import sympy as sp

try:  # Python 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .errors import InvalidInput
from .media import dirichlet_medium, periodic_medium, step_medium

_NAMES = {"pi": sp.pi, "e": sp.E}
_FUNCS = {"sqrt": sp.sqrt}
_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.Pow: lambda a, b: a ** b,
}
_ROOT = re.compile(r"√\s*(\(?[0-9.]+\)?)")


def parse_expr(text: str):
    """Safely evaluate an arithmetic expression into an exact sympy number."""
    src = _ROOT.sub(lambda m: f"*sqrt({m.group(1).strip('()')})", text.strip())
    if src.startswith("*"):
        src = "1" + src
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise InvalidInput(f"cannot parse numeric expression {text!r}") from exc

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            return sp.Integer(node.value) if isinstance(node.value, int) else sp.Rational(str(node.value))
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS and len(node.args) == 1:
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise InvalidInput(f"unsupported element in expression {text!r}")

    value = ev(tree)
    if not value.is_real or not value.is_finite:
        raise InvalidInput(f"expression {text!r} is not a finite real number")
    return value


def to_number(value, name: str):
    """Config value -> int, float or exact sympy expression."""
    if isinstance(value, bool):
        raise InvalidInput(f"{name} must be numeric, got a boolean")
    if isinstance(value, (int, float)):
        if isinstance(value, float) and not math.isfinite(value):
            raise InvalidInput(f"{name} must be finite")
        return value
    if isinstance(value, str):
        return parse_expr(value)
    if isinstance(value, list) and len(value) == 3 and all(isinstance(v, int) for v in value):
        p, q, s = value
        return sp.Rational(p, q) * sp.sqrt(s)
    raise InvalidInput(f"{name}: cannot interpret {value!r} as a number")


def to_float(value, name: str) -> float:
    return float(to_number(value, name))


def _override_value(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(data: dict, overrides) -> dict:
    for item in overrides or []:
        if "=" not in item:
            raise InvalidInput(f"--set expects key=value, got {item!r}")
        key, text = item.split("=", 1)
        parts = key.strip().split(".")
        node = data
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise InvalidInput(f"--set {key}: {p} is not a section")
        node[parts[-1]] = _override_value(text.strip())
    return data


MEDIUM_KEYS = {"step": ("a", "b", "c", "omega"), "periodic": ("a", "b", "theta", "omega"), "dirichlet": ("l", "omega")}


@dataclass
class RunConfig:
    medium_kind: str
    medium_params: dict
    gamma: float
    N: int
    N_schedule: tuple = ()
    r: int | None = None
    k0: int | None = None
    j_max: int | None = None
    grad_tol: float = 1e-10
    max_iters: int = 100_000
    rng_seed: int = 0
    newton_switch: float = 1e-4
    max_restarts: int = 3
    seeding: str = "primitive"
    out_dir: Path = Path("out")
    nx: int = 201
    nt: int = 64
    weak_tol: float = 1e-6
    raw: dict = field(default_factory=dict, repr=False)

    def build_medium(self):
        p = self.medium_params
        if self.medium_kind == "step":
            return step_medium(p["a"], p["b"], p["c"], p["omega"])
        if self.medium_kind == "periodic":
            return periodic_medium(p["a"], p["b"], p["theta"], p["omega"])
        return dirichlet_medium(p["l"], p["omega"])


def _int(v, name, minimum=None):
    if isinstance(v, bool) or not isinstance(v, int):
        raise InvalidInput(f"{name} must be an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise InvalidInput(f"{name} must be >= {minimum}, got {v}")
    return v


def _positive(v, name):
    f = to_float(v, name)
    if not f > 0:
        raise InvalidInput(f"{name} must be positive, got {v!r}")
    return f


def parse_config(data: dict) -> RunConfig:
    for sec in data:
        if sec not in ("medium", "problem", "solver", "output"):
            raise InvalidInput(f"unknown config section [{sec}]")
    med = dict(data.get("medium", {}))
    kind = med.pop("kind", None)
    if kind not in MEDIUM_KEYS:
        raise InvalidInput(f"medium.kind must be one of {sorted(MEDIUM_KEYS)}, got {kind!r}")
    need = MEDIUM_KEYS[kind]
    extra = set(med) - set(need)
    missing = [k for k in need if k not in med]
    if extra or missing:
        raise InvalidInput(f"medium '{kind}' needs keys {need}; missing {missing}, unknown {sorted(extra)}")
    params = {k: to_number(med[k], f"medium.{k}") for k in need}

    prob = data.get("problem", {})
    if "gamma" not in prob:
        raise InvalidInput("problem.gamma is required")
    gamma = to_float(prob["gamma"], "problem.gamma")
    if gamma == 0:
        raise InvalidInput("problem.gamma must be nonzero")
    sched = tuple(_int(n, "problem.N_schedule entry", 1) for n in prob.get("N_schedule", []))
    N = _int(prob.get("N", sched[-1] if sched else 41), "problem.N", 1)
    if sched and sched[-1] != N:
        raise InvalidInput("problem.N must equal the last entry of problem.N_schedule")
    r = prob.get("r")
    j_max = prob.get("j_max")
    sol = data.get("solver", {})
    out = data.get("output", {})
    cfg = RunConfig(
        medium_kind=kind, medium_params=params, gamma=gamma, N=N, N_schedule=sched,
        r=None if r is None else _int(r, "problem.r", 1),
        k0=None if prob.get("k0") is None else _int(prob["k0"], "problem.k0", 1),
        j_max=None if j_max is None else _int(j_max, "problem.j_max"),
        grad_tol=_positive(sol.get("grad_tol", 1e-10), "solver.grad_tol"),
        max_iters=_int(sol.get("max_iters", 100_000), "solver.max_iters", 1),
        rng_seed=_int(sol.get("rng_seed", 0), "solver.rng_seed", 0),
        newton_switch=_positive(sol.get("newton_switch", 1e-4), "solver.newton_switch"),
        max_restarts=_int(sol.get("max_restarts", 3), "solver.max_restarts", 0),
        seeding=str(sol.get("seeding", "primitive")),
        out_dir=Path(out.get("dir", "out")),
        nx=_int(out.get("nx", 201), "output.nx", 2),
        nt=_int(out.get("nt", 64), "output.nt", 2),
        weak_tol=_positive(out.get("weak_tol", 1e-6), "output.weak_tol"),
        raw=data,
    )
    if cfg.seeding not in ("primitive", "global"):
        raise InvalidInput("solver.seeding must be 'primitive' or 'global'")
    return cfg


def load_config(path, overrides=None) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise InvalidInput(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise InvalidInput(f"invalid TOML in {path}: {exc}") from exc
    return parse_config(apply_overrides(data, overrides))


def describe_number(v) -> str:
    if isinstance(v, sp.Basic):
        return str(v)
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    return repr(v)
