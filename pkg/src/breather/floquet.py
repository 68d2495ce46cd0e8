"""Decaying fundamental solutions of L_k = -d^2/dx^2 - k^2 omega^2 g(x).

For every admissible odd k we build Phi_k on [0, inf) with Phi_k(0) = 1 as a
piecewise closed form (trigonometric or exponential pieces). Periodic media
go through the transfer-matrix route: propagation matrices, monodromy over
one 2*pi cell, Floquet multipliers and the decaying Bloch mode.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadIndex, DecayViolation, InvalidInput, NoSpectralGap
from .media import DirichletMedium, Medium, PeriodicStepMedium, StepMedium


@dataclass(frozen=True)
class Piece:
    """c0*cos(rate*s) + c1*sin(rate*s) ("trig") or c0*exp(-rate*s) ("exp"), s = y - start."""

    start: float
    end: float
    kind: str
    rate: float
    c0: float
    c1: float = 0.0

    def value(self, y):
        s = y - self.start
        if self.kind == "trig":
            return self.c0 * np.cos(self.rate * s) + self.c1 * np.sin(self.rate * s)
        return self.c0 * np.exp(-self.rate * s)

    def deriv(self, y):
        s = y - self.start
        if self.kind == "trig":
            return self.rate * (self.c1 * np.cos(self.rate * s) - self.c0 * np.sin(self.rate * s))
        return -self.rate * self.c0 * np.exp(-self.rate * s)


@dataclass(frozen=True)
class ModeProfile:
    """Decaying fundamental solution Phi_k on x >= 0.

    Evaluation maps x to the frame coordinate y = x + shift. For periodic
    media y is reduced to one cell of length ``period`` and the result is
    scaled by ``floquet_mult ** n`` with n the cell number.
    """

    k: int
    kind: str
    slope0: float
    decay_rate: float | None
    pieces: tuple
    shift: float = 0.0
    period: float | None = None
    floquet_mult: float | None = None
    x_end: float = math.inf

    def _locate(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise InvalidInput("mode profiles are evaluated for x >= 0 only")
        y = x + self.shift
        factor = np.ones_like(y)
        if self.period is not None:
            n = np.floor(y / self.period)
            y = y - n * self.period
            factor = np.power(self.floquet_mult, n)
        starts = np.array([p.start for p in self.pieces])
        idx = np.clip(np.searchsorted(starts, y, side="right") - 1, 0, len(self.pieces) - 1)
        return x, y, factor, idx

    def _eval(self, x, method):
        x, y, factor, idx = self._locate(x)
        out = np.zeros_like(y)
        for i, piece in enumerate(self.pieces):
            sel = idx == i
            if np.any(sel):
                out[sel] = getattr(piece, method)(y[sel])
        out = out * factor
        if math.isfinite(self.x_end):
            out = np.where(x > self.x_end, 0.0, out)
        return out

    def __call__(self, x):
        return self._eval(x, "value")

    def deriv(self, x):
        return self._eval(x, "deriv")

    def breakpoints(self, x_max: float) -> list[float]:
        """Piece boundaries (in x) inside (0, x_max)."""
        out = []
        if self.period is None:
            out = [p.start - self.shift for p in self.pieces[1:]]
        else:
            n = 0
            while n * self.period - self.shift < x_max:
                out += [n * self.period + p.start - self.shift for p in self.pieces]
                n += 1
        return sorted(b for b in out if 0 < b < x_max)


# -- step potential -----------------------------------------------------------

def _check_index(medium: Medium, k: int):
    if not medium.admissible(k):
        raise BadIndex(f"k={k} is not in {medium.r_base}*Z_odd (positive)")


def step_mode(medium: StepMedium, k: int) -> ModeProfile:
    """Phi_k = cos + sqrt(b/a) sin on [0, c], exponential tail beyond c."""
    _check_index(medium, k)
    lam = k * medium.omega * math.sqrt(medium.b)
    mu = k * medium.omega * math.sqrt(medium.a)
    amp = math.sqrt(medium.b / medium.a)
    # k*omega*sqrt(b)*c = (k p / q) * pi/2 is an odd multiple of pi/2
    m = k * medium.ratio.p // medium.ratio.q
    sin_c = 1.0 if (m - 1) // 2 % 2 == 0 else -1.0
    pieces = (
        Piece(0.0, medium.c, "trig", lam, 1.0, amp),
        Piece(medium.c, math.inf, "exp", mu, amp * sin_c),
    )
    return ModeProfile(k, "step", slope0=amp * lam, decay_rate=mu / 2, pieces=pieces)


# -- periodic step potential --------------------------------------------------

def propagation(s: float, cconst: float, k: int, omega: float) -> np.ndarray:
    """Transfer matrix of -phi'' = k^2 omega^2 cconst phi over length s."""
    if s < 0 or cconst <= 0:
        raise InvalidInput("propagation needs s >= 0 and cconst > 0")
    lam = k * omega * math.sqrt(cconst)
    cs, sn = math.cos(lam * s), math.sin(lam * s)
    return np.array([[cs, sn / lam], [-lam * sn, cs]])


@dataclass(frozen=True)
class Monodromy:
    matrix: np.ndarray
    k: int
    closed_form_trace: float

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix))


def monodromy(medium: PeriodicStepMedium, k: int) -> Monodromy:
    """A_k = T_k(2 pi (1 - theta), b) T_k(2 pi theta, a) in the shifted frame."""
    a, b, th, w = medium.a, medium.b, medium.theta, medium.omega
    mat = propagation(2 * math.pi * (1 - th), b, k, w) @ propagation(2 * math.pi * th, a, k, w)
    kml = k * medium.m * medium.l * math.pi
    km = k * medium.m * math.pi
    tr = 2 * math.cos(kml) * math.cos(km) - (math.sqrt(a / b) + math.sqrt(b / a)) * math.sin(kml) * math.sin(km)
    return Monodromy(mat, k, tr)


def floquet_multipliers(A) -> tuple[float, float]:
    """Roots of rho^2 - tr(A) rho + 1, ordered (|small| < 1, |large| > 1)."""
    if isinstance(A, Monodromy):
        tr = A.trace
    elif np.ndim(A) == 2:
        tr = float(np.trace(A))
    else:
        tr = float(A)
    if abs(tr) <= 2:
        raise NoSpectralGap(tr, getattr(A, "k", None))
    disc = math.sqrt(tr * tr - 4)
    large = 0.5 * (tr + math.copysign(disc, tr))
    return 1.0 / large, large


def _small_eigvec(mat: np.ndarray, rho: float) -> np.ndarray:
    (a11, a12), (a21, a22) = mat
    v1 = np.array([a12, rho - a11])
    v2 = np.array([rho - a22, a21])
    v = v1 if np.linalg.norm(v1) >= np.linalg.norm(v2) else v2
    return v / np.linalg.norm(v)


def periodic_mode(medium: PeriodicStepMedium, k: int) -> ModeProfile:
    """Decaying Bloch mode, normalised to 1 at x = 0 (y = theta*pi in the cell frame)."""
    _check_index(medium, k)
    mono = monodromy(medium, k)
    small, _ = floquet_multipliers(mono)
    v = _small_eigvec(mono.matrix, small)
    a, b, th, w = medium.a, medium.b, medium.theta, medium.omega
    lam_a = k * w * math.sqrt(a)
    lam_b = k * w * math.sqrt(b)
    split = 2 * math.pi * th
    u = propagation(split, a, k, w) @ v
    y0 = math.pi * th
    norm = v[0] * math.cos(lam_a * y0) + v[1] / lam_a * math.sin(lam_a * y0)
    pieces = (
        Piece(0.0, split, "trig", lam_a, v[0] / norm, v[1] / lam_a / norm),
        Piece(split, 2 * math.pi, "trig", lam_b, u[0] / norm, u[1] / lam_b / norm),
    )
    slope0 = pieces[0].deriv(y0)
    return ModeProfile(
        k, "periodic", slope0=float(slope0), decay_rate=-math.log(abs(small)) / (2 * math.pi),
        pieces=pieces, shift=y0, period=2 * math.pi, floquet_mult=small,
    )


# -- Dirichlet interval -------------------------------------------------------

def dirichlet_mode(medium: DirichletMedium, k: int) -> ModeProfile:
    """Phi_k(x) = sin(omega k (l - x)) / sin(omega k l) on [0, l]."""
    _check_index(medium, k)
    lam = medium.omega * k
    cot = 1.0 / math.tan(lam * medium.l)
    pieces = (Piece(0.0, medium.l, "trig", lam, 1.0, -cot),)
    return ModeProfile(k, "dirichlet", slope0=-lam * cot, decay_rate=None, pieces=pieces, x_end=medium.l)


def mode_profile(medium: Medium, k: int) -> ModeProfile:
    if isinstance(medium, StepMedium):
        return step_mode(medium, k)
    if isinstance(medium, PeriodicStepMedium):
        return periodic_mode(medium, k)
    if isinstance(medium, DirichletMedium):
        return dirichlet_mode(medium, k)
    raise InvalidInput(f"unknown medium {medium!r}")


def mode_table(medium: Medium, ks) -> dict[int, ModeProfile]:
    return {int(k): mode_profile(medium, int(k)) for k in ks}


# -- decay constants ----------------------------------------------------------

def c2_constants(medium: Medium, certified: bool = False) -> tuple[float, float]:
    """Uniform (M, rho) with |Phi_k(x)| <= M exp(-rho x) for all admissible k.

    ``certified=False`` returns the nominal constants quoted for each family.
    For the step medium the nominal pair fails near the interface (at x = c
    already |Phi_1(c)| = A while (A+B) e^{-rho c} < A for a = b = 1), so
    ``certified=True`` returns M = (A+B) e^{rho c}: |Phi_k| <= A+B on [0, c]
    and |Phi_k| <= A e^{-rho (x - c)} beyond. For the periodic medium the
    certified M adds the within-cell factor e^{rho (2 - theta) pi}.
    """
    if isinstance(medium, StepMedium):
        amp = math.sqrt(medium.b / medium.a)
        rho = medium.omega * math.sqrt(medium.a) / 2
        M = amp + 1.0
        if certified:
            M *= math.exp(rho * medium.c)
        return M, rho
    if isinstance(medium, PeriodicStepMedium):
        lo, hi = sorted((medium.a, medium.b))
        rho = (math.log(hi) - math.log(lo)) / (4 * math.pi)
        M = math.sqrt(2) * (1 + math.sqrt(lo / hi))
        if certified:
            M *= math.exp(rho * (2 - medium.theta) * math.pi)
        return M, rho
    if isinstance(medium, DirichletMedium):
        # bounded interval: no decay, M = max 1/|sin(omega k l)| over one index period
        ks = np.arange(1, 2 * medium.q4 + 1, 2)
        return float(np.max(1.0 / np.abs(np.sin(medium.omega * ks * medium.l)))), 0.0
    raise InvalidInput(f"unknown medium {medium!r}")


def sample_grid(medium: Medium, k_max: int, x_max: float | None = None, per_wave: int = 24) -> np.ndarray:
    """Dense x-grid on [0, x_max] resolving the fastest mode, interfaces included."""
    M, rho = c2_constants(medium)
    if x_max is None:
        x_max = medium.x_end if rho == 0 else 20.0 / rho
    g_max = math.sqrt(np.max(np.abs(medium.g(np.linspace(0, min(x_max, 7.0), 64)))))
    lam = k_max * medium.omega * max(g_max, 1.0)
    n = int(math.ceil(x_max * lam * per_wave / (2 * math.pi))) + 1
    grid = np.linspace(0.0, x_max, n)
    return np.unique(np.concatenate([grid, medium.interfaces(x_max)]))


def verify_c2(medium: Medium, k_max: int, constants=None, certified: bool = False,
              x_max: float | None = None) -> tuple[float, float]:
    """Check |Phi_k(x)| e^{rho x} <= M (1 + 1e-8) on a dense grid for admissible k <= k_max."""
    M, rho = constants if constants is not None else c2_constants(medium, certified)
    x = sample_grid(medium, k_max, x_max)
    for k in medium.lattice(k_max):
        ratio = np.abs(mode_profile(medium, int(k))(x)) * np.exp(rho * x) / M
        i = int(np.argmax(ratio))
        if ratio[i] > 1 + 1e-8:
            raise DecayViolation(int(k), float(x[i]), float(ratio[i]))
    return M, rho


# -- pointwise checks ---------------------------------------------------------

def ode_residual(medium: Medium, profile: ModeProfile, x_max: float | None = None,
                 samples_per_piece: int = 50) -> float:
    """Max of |-Phi'' - k^2 omega^2 g Phi| / (k^2 omega^2 max|Phi|) by a 5-point stencil.

    The step is h = 2^round(log2(0.005/lambda)) with lambda the fastest local
    wavenumber, which balances O((h lambda)^4) truncation against
    O(eps/(h lambda)^2) roundoff. Stencils never straddle an interface.
    """
    k = profile.k
    kw2 = (k * medium.omega) ** 2
    if x_max is None:
        x_max = medium.x_end if profile.decay_rate is None else min(6.0 / profile.decay_rate, 60.0)
        x_max = min(x_max, medium.x_end)
    edges = [0.0] + list(medium.interfaces(x_max)) + [x_max]
    probe = np.linspace(0.0, x_max, 257)
    lam = math.sqrt(kw2 * float(np.max(np.abs(medium.g(probe)))))
    h = 2.0 ** round(math.log2(0.005 / lam))
    worst, scale = 0.0, 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi - lo <= 6 * h:
            continue
        x = np.linspace(lo + 3 * h, hi - 3 * h, samples_per_piece)
        f = [profile(x + j * h) for j in (-2, -1, 0, 1, 2)]
        d2 = (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * h * h)
        worst = max(worst, float(np.max(np.abs(-d2 - kw2 * medium.g(x) * f[2]))))
        scale = max(scale, float(np.max(np.abs(f[2]))))
    return worst / (kw2 * scale) if scale > 0 else 0.0


def c1_jumps(profile: ModeProfile, x_max: float) -> float:
    """Largest jump of Phi or Phi'/lambda across piece boundaries in (0, x_max)."""
    worst = 0.0
    lam = max(p.rate for p in profile.pieces)
    for b in profile.breakpoints(x_max):
        if math.isfinite(profile.x_end) and b >= profile.x_end:
            continue
        y = b + profile.shift
        n = 0
        if profile.period is not None:
            n = round(y / profile.period)
            y_local = y - n * profile.period
            if abs(y_local) < 1e-12 * profile.period:
                # cell boundary: left piece is the last one of cell n-1
                left, right = profile.pieces[-1], profile.pieces[0]
                fl = profile.floquet_mult ** (n - 1)
                fr = profile.floquet_mult ** n
                jl = (left.value(profile.period), left.deriv(profile.period))
                jr = (right.value(0.0), right.deriv(0.0))
                worst = max(worst, abs(fl * jl[0] - fr * jr[0]), abs(fl * jl[1] - fr * jr[1]) / lam)
                continue
            n = math.floor(y / profile.period)
            y_local = y - n * profile.period
        else:
            y_local = y
        starts = [p.start for p in profile.pieces]
        i = int(np.argmin(np.abs(np.array(starts) - y_local)))
        left, right = profile.pieces[i - 1], profile.pieces[i]
        s = right.start
        f = profile.floquet_mult ** n if profile.period is not None else 1.0
        worst = max(worst, f * abs(left.value(s) - right.value(s)), f * abs(left.deriv(s) - right.deriv(s)) / lam)
    return worst
