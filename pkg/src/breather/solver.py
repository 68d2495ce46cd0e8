"""Minimization of the truncated energy J^(N), with symmetry restriction and continuation in N."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BreatherError, InvalidInput, WrongSign
from .functional import FunctionalSpec, el_residual, eta_table
from .media import Medium, default_scan_base, validate_symmetry
from .seqspace import OddSequence

log = logging.getLogger(__name__)

QUARTIC_PAIR = 1.5  # 1/4 |||y|||^4 for a unit pair
ARMIJO_C = 1e-4
SHRINK = 0.5
NEWTON_SWITCH = 1e-4
EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SolveConfig:
    N: int = 41
    r: int | None = None
    k0: int | None = None
    grad_tol: float = 1e-10
    max_iters: int = 100_000
    N_schedule: tuple = ()
    rng_seed: int = 0
    newton: bool = True
    newton_switch: float = NEWTON_SWITCH
    max_restarts: int = 3

    def __post_init__(self):
        if self.grad_tol <= 0:
            raise InvalidInput("grad_tol must be positive")
        if self.max_iters < 1:
            raise InvalidInput("max_iters must be at least 1")
        sched = tuple(self.N_schedule)
        if any(b <= a for a, b in zip(sched, sched[1:])):
            raise InvalidInput(f"N_schedule must be strictly increasing, got {sched}")
        if any(n % 2 == 0 or n < 1 for n in sched) or self.N % 2 == 0:
            raise InvalidInput("truncations must be positive odd integers")


@dataclass
class BreatherResult:
    alpha: OddSequence
    J_value: float
    grad_norm: float
    el_sup: float
    off_lattice_sup: float
    r: int
    N: int
    k0: int
    iterations: int
    converged: bool
    seed_J: float
    t_star: float
    restarts: int = 0
    min_hess_eig: float = float("nan")
    history: list = field(default_factory=list, repr=False)

    def summary(self) -> dict:
        return {
            "N": self.N, "r": self.r, "k0": self.k0, "J": self.J_value,
            "grad_norm": self.grad_norm, "el_sup": self.el_sup,
            "off_lattice_sup": self.off_lattice_sup, "iterations": self.iterations,
            "converged": self.converged, "restarts": self.restarts,
            "min_hess_eig": self.min_hess_eig, "seed_J": self.seed_J, "t_star": self.t_star,
        }


def seed_point(spec: FunctionalSpec, k0: int) -> tuple[float, OddSequence]:
    """Minimizer t* of J(t y) = c1 t^4 + c2 t^2 over multiples of the unit pair at k0."""
    i = int(np.searchsorted(spec.ks, k0))
    if i >= len(spec.ks) or spec.ks[i] != k0:
        raise InvalidInput(f"k0={k0} is not on the lattice {spec.r}*Z_odd below N={spec.N}")
    c2 = 2.0 * spec.coeff_a[i]
    if not c2 < 0:
        raise WrongSign(f"Phi_{k0}'(0)/gamma >= 0, J(t y) has no negative values near t=0")
    t_star = math.sqrt(-c2 / (2 * QUARTIC_PAIR))
    return t_star, OddSequence.from_dict(spec.N, {k0: t_star})


def choose_k0(spec: FunctionalSpec) -> int:
    """Smallest lattice harmonic with a_k < 0."""
    neg = np.nonzero(spec.coeff_a < 0)[0]
    if neg.size == 0:
        raise WrongSign(f"no harmonic of {spec.r}*Z_odd below N={spec.N} has the sign required by gamma")
    return int(spec.ks[neg[0]])


class _Problem:
    """J, gradient and Hessian in lattice coordinates x_i = z_{k_i}."""

    def __init__(self, spec: FunctionalSpec):
        self.spec = spec
        self.ks = spec.ks
        self.a = spec.coeff_a
        self.n = 2 * spec.N + 1
        self.c = spec.N

    def full(self, x):
        f = np.zeros(self.n)
        f[self.c + self.ks] = x
        f[self.c - self.ks] = -x
        return f

    def J(self, x):
        f = self.full(x)
        sq = np.convolve(f, f)
        return 0.25 * float(np.dot(sq, sq)) + 2.0 * float(np.dot(self.a, x * x))

    def g(self, x):
        f = self.full(x)
        cube = np.convolve(np.convolve(f, f), f)
        return 2.0 * self.a * x - cube[3 * self.c + self.ks]

    def hess(self, x):
        f = self.full(x)
        sq = np.convolve(f, f)
        c = 2 * self.c
        k = self.ks
        H = 6.0 * (sq[c + k[:, None] + k[None, :]] - sq[c + k[:, None] - k[None, :]])
        H[np.diag_indices_from(H)] += 4.0 * self.a
        return H


def _line_search(prob, x, Jx, gx, d, slope, step=1.0, max_halvings=60):
    """Backtracking Armijo along d; slope = J'(x)[d] < 0.

    A trial whose energy change is below roundoff is also accepted when it
    lowers the gradient norm, which lets the final Newton steps proceed once
    J itself is flat to machine precision.
    """
    gnorm = float(np.linalg.norm(gx))
    for _ in range(max_halvings):
        xn = x + step * d
        Jn = prob.J(xn)
        if Jn <= Jx + ARMIJO_C * step * slope:
            return xn, Jn, prob.g(xn)
        if abs(Jn - Jx) <= 4 * EPS * max(1.0, abs(Jx)):
            gn = prob.g(xn)
            if np.linalg.norm(gn) < gnorm:
                return xn, Jn, gn
        step *= SHRINK
    return None


def _descend(prob: _Problem, x, cfg: SolveConfig, history: list, it0: int, budget: int):
    """Gradient descent then Newton; returns (x, iterations used, converged)."""
    Jx, gx = prob.J(x), prob.g(x)
    it = 0
    while it < budget:
        gnorm = float(np.linalg.norm(gx))
        if gnorm <= cfg.grad_tol:
            return x, it, True
        grad = 2.0 * gx  # dJ/dx
        d = -grad
        if cfg.newton and gnorm < cfg.newton_switch:
            H = prob.hess(x)
            try:
                L = np.linalg.cholesky(H)
                d = -np.linalg.solve(L.T, np.linalg.solve(L, grad))
            except np.linalg.LinAlgError:
                # indefinite: Newton step with curvature magnitudes floored
                w, V = np.linalg.eigh(H)
                lam = np.maximum(np.abs(w), 1e-8 * max(np.max(np.abs(w)), 1.0))
                d = -V @ ((V.T @ grad) / lam)
        slope = float(np.dot(grad, d))
        res = _line_search(prob, x, Jx, gx, d, slope)
        if res is None and not np.array_equal(d, -grad):
            d = -grad
            res = _line_search(prob, x, Jx, gx, d, float(np.dot(grad, d)))
        if res is None:
            log.info("line search stalled at grad_norm=%.3e", gnorm)
            return x, it, False
        x, Jx, gx = res
        it += 1
        history.append((it0 + it, Jx, float(np.linalg.norm(gx))))
    return x, it, float(np.linalg.norm(gx)) <= cfg.grad_tol


def _escape_direction(prob: _Problem, x, rng, scale):
    d = rng.standard_normal(x.size)
    return scale * d / np.linalg.norm(d)


def minimize(spec: FunctionalSpec, config: SolveConfig, start: OddSequence | None = None) -> BreatherResult:
    """Minimize J over sequences supported on the lattice of ``spec``.

    Starts from ``start`` when given, else from the one-pair seed at k0. Once a
    critical point is reached, a random perturbation of size 1e-3 |||alpha|||
    is tried; if it lowers J the descent resumes (at most ``max_restarts`` times).
    Non-convergence within ``max_iters`` is reported through ``converged=False``.
    """
    k0 = config.k0 if config.k0 is not None else choose_k0(spec)
    t_star, seed = seed_point(spec, k0)
    prob = _Problem(spec)
    seed_J = prob.J(seed.values[spec.index])
    x = seed.values[spec.index].copy() if start is None else start.embed(spec.N).values[spec.index].copy()
    if start is not None and prob.J(x) > seed_J:
        x = seed.values[spec.index].copy()
    rng = np.random.default_rng(config.rng_seed)
    history = [(0, prob.J(x), float(np.linalg.norm(prob.g(x))))]
    used, restarts, converged = 0, 0, False
    while True:
        x, n, converged = _descend(prob, x, config, history, used, config.max_iters - used)
        used += n
        if not converged or restarts >= config.max_restarts or used >= config.max_iters:
            break
        scale = 1e-3 * _qn(prob, x)
        trial = x + _escape_direction(prob, x, rng, scale)
        if prob.J(trial) < prob.J(x):
            restarts += 1
            log.info("saddle escape %d at J=%.12g", restarts, prob.J(x))
            x = trial
            continue
        break
    alpha = OddSequence(spec.N, _scatter(spec, x))
    el = el_residual(spec, alpha)
    gnorm = float(np.linalg.norm(prob.g(x)))
    try:
        min_eig = float(np.linalg.eigvalsh(prob.hess(x))[0])
    except np.linalg.LinAlgError:
        min_eig = float("nan")
    return BreatherResult(
        alpha=alpha, J_value=prob.J(x), grad_norm=gnorm, el_sup=el.sup, off_lattice_sup=el.off_sup,
        r=spec.r, N=spec.N, k0=k0, iterations=used, converged=converged and gnorm <= config.grad_tol,
        seed_J=seed_J, t_star=t_star, restarts=restarts, min_hess_eig=min_eig, history=history,
    )


def _qn(prob: _Problem, x) -> float:
    f = prob.full(x)
    sq = np.convolve(f, f)
    return float(np.dot(sq, sq)) ** 0.25


def _scatter(spec: FunctionalSpec, x) -> np.ndarray:
    vals = np.zeros((spec.N + 1) // 2)
    vals[spec.index] = x
    return vals


def continue_in_N(spec: FunctionalSpec, config: SolveConfig) -> list[BreatherResult]:
    """Solve along config.N_schedule, warm-starting each stage from the zero-padded previous minimizer."""
    schedule = tuple(config.N_schedule) or (config.N,)
    if schedule[-1] > spec.N:
        raise InvalidInput(f"schedule reaches N={schedule[-1]} but the spec stops at N={spec.N}")
    results: list[BreatherResult] = []
    prev = None
    for N in schedule:
        sub = spec.truncate(N)
        res = minimize(sub, config, start=prev)
        results.append(res)
        prev = res.alpha
    return results


def increments(results) -> list[float]:
    """|J(N_{i+1}) - J(N_i)| along a continuation run."""
    return [abs(b.J_value - a.J_value) for a, b in zip(results, results[1:])]


def primitive_k0(spec: FunctionalSpec, base: int) -> int:
    """Smallest lattice harmonic with a_k < 0 that is not in (r*base)*Z_odd."""
    for k, a in zip(spec.ks, spec.coeff_a):
        if a < 0 and (k // spec.r) % base != 0:
            return int(k)
    raise WrongSign(f"no harmonic of {spec.r}*Z_odd outside {spec.r * base}*Z_odd has the sign required by gamma")


def lies_in(alpha: OddSequence, r: int, rel_tol: float = 1e-12) -> bool:
    """True when every entry above rel_tol * max|alpha| sits in r*Z_odd."""
    return all(k % r == 0 and (k // r) % 2 == 1 for k in alpha.support(rel_tol))


@dataclass
class ScanEntry:
    j: int
    r: int
    result: BreatherResult | None = None
    error: str | None = None
    nested_in_next: bool | None = None


def multiplicity_scan(medium: Medium, gamma: float, j_max: int, config: SolveConfig,
                      base: int | None = None, jobs: int = 1, seeding: str = "primitive") -> list[ScanEntry]:
    """Solve in the symmetry subspaces r = base**j, j = 1..j_max.

    ``seeding="global"`` starts every stage from the smallest admissible
    harmonic, as :func:`minimize` does; the D_r minimizer found that way can
    already lie in D_{r*base} and then repeats the next stage. ``"primitive"``
    seeds from the smallest correctly signed harmonic of r*Z_odd outside
    (r*base)*Z_odd, so each stage returns a critical point that is not
    (r*base)-symmetric. Such points may be saddles of J on D_r, so the
    random escape step is disabled for them; ``min_hess_eig`` on each result
    shows which kind of critical point was found. ``nested_in_next`` records
    whether the result lies in D_{r*base}.

    Failures for an individual j (sign condition, empty lattice) are recorded
    on its entry and the scan continues.
    """
    if int(j_max) != j_max or j_max < 1:
        raise InvalidInput(f"j_max must be a positive integer, got {j_max!r}")
    if seeding not in ("primitive", "global"):
        raise InvalidInput(f"seeding must be 'primitive' or 'global', got {seeding!r}")
    base = default_scan_base(medium) if base is None else base
    tasks = [(j, base ** j) for j in range(1, int(j_max) + 1)]

    def run(task):
        j, r = task
        try:
            validate_symmetry(medium, r)
            spec = eta_table(medium, gamma, config.N, r)
            k0 = primitive_k0(spec, base) if seeding == "primitive" else choose_k0(spec)
            overrides = {"r": r, "k0": k0, "N_schedule": ()}
            if seeding == "primitive":
                overrides["max_restarts"] = 0
            cfg = SolveConfig(**{**config.__dict__, **overrides})
            res = minimize(spec, cfg)
            return ScanEntry(j, r, res, nested_in_next=lies_in(res.alpha, r * base))
        except (BreatherError, InvalidInput) as exc:
            return ScanEntry(j, r, error=f"{type(exc).__name__}: {exc}")

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run, tasks))
    return [run(t) for t in tasks]
