"""Admissible piecewise-constant media and their exact rationality conditions.

Three families are supported:

* ``StepMedium``: g = b on |x| < c and g = -a outside.
* ``PeriodicStepMedium``: g = a on |x| < pi*theta, b on pi*theta < |x| < pi,
  extended 2*pi-periodically.
* ``DirichletMedium``: g = 1 on (-l, l) with w(+-l, t) = 0.

Parameters may be given as floats (rationality is then detected with a
bounded continued-fraction search) or as exact numbers: ints, ``Fraction``
or sympy expressions such as ``sympy.pi / 2``. Exact inputs bypass detection.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
import sympy as sp

from .errors import InvalidInput, NotAdmissible

log = logging.getLogger(__name__)

MAX_DENOMINATOR = 10**6
DETECT_TOL = 1e-10


@dataclass(frozen=True)
class OddRational:
    """Positive rational p/q with p, q odd, in lowest terms."""

    p: int
    q: int

    def __post_init__(self):
        if self.p <= 0 or self.q <= 0:
            raise InvalidInput(f"OddRational needs positive entries, got {self.p}/{self.q}")
        if self.p % 2 == 0 or self.q % 2 == 0:
            raise InvalidInput(f"OddRational needs odd entries, got {self.p}/{self.q}")
        if math.gcd(self.p, self.q) != 1:
            raise InvalidInput(f"{self.p}/{self.q} is not in lowest terms")

    @property
    def value(self) -> float:
        return self.p / self.q

    def __str__(self):
        return f"{self.p}/{self.q}"


# -- rational detection -------------------------------------------------------

_MATH_NS = {"sqrt": math.sqrt, "pi": math.pi}
_SYMPY_NS = {"sqrt": sp.sqrt, "pi": sp.pi}


def _is_inexact(v) -> bool:
    if isinstance(v, sp.Basic):
        return bool(v.has(sp.Float))
    return isinstance(v, (float, np.floating))


def _as_sympy(v):
    if isinstance(v, sp.Basic):
        return v
    if isinstance(v, Fraction):
        return sp.Rational(v.numerator, v.denominator)
    if isinstance(v, (int, np.integer)):
        return sp.Integer(int(v))
    raise InvalidInput(f"cannot treat {v!r} as an exact number")


def detect_rational(value: float) -> Fraction | None:
    """First continued-fraction convergent within DETECT_TOL, denominator <= MAX_DENOMINATOR.

    Convergents with denominators near 1e6 approximate every real to about
    1e-12, so float inputs whose nearest simple fraction has a large
    denominator are accepted too; a warning is logged for q > 1e4.
    """
    if not math.isfinite(value):
        return None
    tol = DETECT_TOL * max(1.0, abs(value))
    h0, h1, k0, k1 = 0, 1, 1, 0
    x = Fraction(value)
    while True:
        a = math.floor(x)
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        if k1 > MAX_DENOMINATOR:
            return None
        if abs(value - h1 / k1) <= tol:
            if k1 > 10**4:
                log.warning("value %r matched %d/%d only through a large denominator", value, h1, k1)
            return Fraction(h1, k1)
        frac = x - a
        if frac == 0:
            return None
        x = 1 / frac


def exact_ratio(formula: Callable, *args) -> tuple[Fraction | None, float]:
    """Evaluate ``formula(ns, *args)`` and return (rational or None, float value).

    With exact arguments the expression is simplified symbolically and a
    provably irrational result is rejected; otherwise (or when sympy cannot
    decide) the float value goes through :func:`detect_rational`.
    """
    if any(_is_inexact(a) for a in args):
        value = float(formula(_MATH_NS, *(float(a) for a in args)))
        return detect_rational(value), value
    expr = sp.nsimplify(sp.simplify(formula(_SYMPY_NS, *(_as_sympy(a) for a in args))))
    value = float(expr)
    if expr.is_Rational:
        return Fraction(int(expr.p), int(expr.q)), value
    if expr.is_rational is False:
        return None, value
    return detect_rational(value), value


def _positive(name, v):
    try:
        ok = float(v) > 0
    except (TypeError, ValueError):
        raise InvalidInput(f"{name} must be a positive real, got {v!r}") from None
    if not ok:
        raise InvalidInput(f"{name} must be positive, got {v!r}")


def _odd_rational(frac: Fraction | None, value: float, what: str) -> OddRational:
    if frac is None:
        raise NotAdmissible(f"{what} = {value!r} is not a rational number")
    p, q = frac.numerator, frac.denominator
    if p <= 0 or p % 2 == 0 or q % 2 == 0:
        raise NotAdmissible(f"{what} = {p}/{q} is not in (2N+1)/(2N+1)")
    return OddRational(p, q)


# -- admissibility checks -----------------------------------------------------

def check_step_admissible(a, b, c, omega) -> OddRational:
    """sqrt(b)*omega*c*2/pi as an odd/odd rational p/q; q is the base index."""
    for name, v in (("a", a), ("b", b), ("c", c), ("omega", omega)):
        _positive(name, v)
    frac, value = exact_ratio(lambda ns, b, c, w: ns["sqrt"](b) * w * c * 2 / ns["pi"], b, c, omega)
    return _odd_rational(frac, value, "sqrt(b)*omega*c*2/pi")


def check_periodic_admissible(a, b, theta, omega) -> tuple[OddRational, OddRational, int]:
    """Return (l, 2m, r_base) with l = sqrt(b/a)(1-theta)/theta, 2m = 4 sqrt(a) theta omega."""
    for name, v in (("a", a), ("b", b), ("omega", omega)):
        _positive(name, v)
    if not 0 < float(theta) < 1:
        raise InvalidInput(f"theta must lie in (0, 1), got {theta!r}")
    if float(a) == float(b):
        raise InvalidInput("periodic step medium needs a != b")
    l_frac, l_val = exact_ratio(lambda ns, a, b, th: ns["sqrt"](b / a) * (1 - th) / th, a, b, theta)
    m_frac, m_val = exact_ratio(lambda ns, a, th, w: 4 * ns["sqrt"](a) * th * w, a, theta, omega)
    l_rat = _odd_rational(l_frac, l_val, "sqrt(b/a)*(1-theta)/theta")
    two_m = _odd_rational(m_frac, m_val, "4*sqrt(a)*theta*omega")
    return l_rat, two_m, l_rat.q * two_m.q


def check_dirichlet_admissible(l, omega) -> tuple[int, int]:
    """omega*l/pi = p/q4 with p odd and q4 a multiple of 4."""
    _positive("l", l)
    _positive("omega", omega)
    frac, value = exact_ratio(lambda ns, l, w: w * l / ns["pi"], l, omega)
    if frac is None:
        raise NotAdmissible(f"omega*l/pi = {value!r} is not a rational number")
    p, q4 = frac.numerator, frac.denominator
    if p % 2 == 0 or q4 % 4 != 0:
        raise NotAdmissible(f"omega*l/pi = {p}/{q4} is not in Z_odd/(4Z)")
    return p, q4


# -- media --------------------------------------------------------------------

class _Medium:
    kind: str
    omega: float
    r_base: int

    def admissible(self, k: int) -> bool:
        return k > 0 and k % 2 == 1 and k % self.r_base == 0

    def lattice(self, N: int, r: int | None = None) -> np.ndarray:
        """Admissible positive harmonics k <= N in r*Z_odd."""
        r = self.r_base if r is None else r
        return np.arange(r, N + 1, 2 * r)


@dataclass(frozen=True)
class StepMedium(_Medium):
    a: float
    b: float
    c: float
    omega: float
    ratio: OddRational
    kind: str = field(default="step", init=False)

    @property
    def r_base(self) -> int:
        return self.ratio.q

    @property
    def x_end(self) -> float:
        return math.inf

    def g(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        return np.where(x > self.c, -self.a, self.b)

    def interfaces(self, x_max: float) -> list[float]:
        return [self.c] if self.c < x_max else []

    def params(self) -> dict:
        return {"kind": self.kind, "a": self.a, "b": self.b, "c": self.c, "omega": self.omega}


@dataclass(frozen=True)
class PeriodicStepMedium(_Medium):
    a: float
    b: float
    theta: float
    omega: float
    l_ratio: OddRational
    two_m: OddRational
    kind: str = field(default="periodic", init=False)

    @property
    def r_base(self) -> int:
        return self.l_ratio.q * self.two_m.q

    @property
    def l(self) -> float:
        return math.sqrt(self.b / self.a) * (1 - self.theta) / self.theta

    @property
    def m(self) -> float:
        return 2 * math.sqrt(self.a) * self.theta * self.omega

    @property
    def x_end(self) -> float:
        return math.inf

    def g(self, x):
        x = np.mod(np.abs(np.asarray(x, dtype=float)), 2 * np.pi)
        inner = (x < np.pi * self.theta) | (x > 2 * np.pi - np.pi * self.theta)
        return np.where(inner, self.a, self.b)

    def interfaces(self, x_max: float) -> list[float]:
        out = []
        n = 0
        while True:
            base = 2 * np.pi * n
            pts = [base + np.pi * self.theta, base + np.pi * (2 - self.theta)]
            if pts[0] >= x_max:
                break
            out.extend(p for p in pts if p < x_max)
            n += 1
        return out

    def params(self) -> dict:
        return {"kind": self.kind, "a": self.a, "b": self.b, "theta": self.theta, "omega": self.omega}


@dataclass(frozen=True)
class DirichletMedium(_Medium):
    l: float
    omega: float
    p: int
    q4: int
    kind: str = field(default="dirichlet", init=False)

    @property
    def r_base(self) -> int:
        return 1

    @property
    def sign_period(self) -> int:
        """Index shift 2q = q4/2 across which Phi'_k(0) changes sign."""
        return self.q4 // 2

    @property
    def x_end(self) -> float:
        return self.l

    def g(self, x):
        return np.ones_like(np.asarray(x, dtype=float))

    def interfaces(self, x_max: float) -> list[float]:
        return []

    def params(self) -> dict:
        return {"kind": self.kind, "l": self.l, "omega": self.omega}


Medium = StepMedium | PeriodicStepMedium | DirichletMedium


def step_medium(a, b, c, omega) -> StepMedium:
    ratio = check_step_admissible(a, b, c, omega)
    return StepMedium(float(a), float(b), float(c), float(omega), ratio)


def periodic_medium(a, b, theta, omega) -> PeriodicStepMedium:
    l_rat, two_m, _ = check_periodic_admissible(a, b, theta, omega)
    return PeriodicStepMedium(float(a), float(b), float(theta), float(omega), l_rat, two_m)


def dirichlet_medium(l, omega) -> DirichletMedium:
    p, q4 = check_dirichlet_admissible(l, omega)
    return DirichletMedium(float(l), float(omega), p, q4)


def validate_symmetry(medium: Medium, r: int) -> int:
    """Check that r is an odd positive multiple of the medium's base index."""
    if not isinstance(r, (int, np.integer)) or isinstance(r, bool):
        raise InvalidInput(f"symmetry index must be an integer, got {r!r}")
    r = int(r)
    if r <= 0 or r % 2 == 0:
        raise InvalidInput(f"symmetry index must be odd and positive, got {r}")
    if r % medium.r_base != 0:
        raise InvalidInput(f"symmetry index {r} is not a multiple of r_base={medium.r_base}")
    return r


def default_scan_base(medium: Medium) -> int:
    """Base r0 for multiplicity scans r = r0**j (3 when r_base is 1)."""
    return medium.r_base if medium.r_base > 1 else 3
