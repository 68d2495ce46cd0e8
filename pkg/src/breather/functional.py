"""The quartic energy J on odd sequences, its derivatives and the Euler-Lagrange residual.

    J(z) = 1/4 |||z|||^4 + 2 sum_{k>0} a_k z_k^2,   a_k = T Phi_k'(0) / (gamma omega^4 k^2)

Derivatives are expressed on positive indices: J'(z)[y] = sum_{k>0} 2 g_k y_k with
g_k = eta_k z_k - (z*z*z)_k and eta_k = 2 a_k, so g = 0 is exactly the
Euler-Lagrange system (z*z*z)_k = eta_k z_k.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, SignConditionFailed, SupportViolation
from .floquet import mode_profile
from .media import Medium, validate_symmetry
from .seqspace import OddSequence, _check_odd, quad_norm4, triple


@dataclass(frozen=True)
class FunctionalSpec:
    """Coefficient tables for J on the lattice k = r, 3r, ... <= N."""

    omega: float
    gamma: float
    N: int
    r: int
    ks: np.ndarray
    slopes: np.ndarray
    sign_branch: str = field(default="")

    def __post_init__(self):
        if self.gamma == 0 or not math.isfinite(self.gamma):
            raise InvalidInput("gamma must be a nonzero finite real")
        _check_odd(self.N)
        if len(self.ks) == 0:
            raise InvalidInput(f"no harmonics of {self.r}*Z_odd below N={self.N}")

    @property
    def T(self) -> float:
        return 2 * math.pi / self.omega

    @property
    def coeff_a(self) -> np.ndarray:
        return self.T * self.slopes / (self.gamma * self.omega ** 4 * self.ks.astype(float) ** 2)

    @property
    def coeff_eta(self) -> np.ndarray:
        return 2.0 * self.coeff_a

    @property
    def index(self) -> np.ndarray:
        """Half-spectrum positions of the lattice harmonics."""
        return (self.ks - 1) // 2

    def truncate(self, N: int) -> "FunctionalSpec":
        keep = self.ks <= N
        return FunctionalSpec(self.omega, self.gamma, N, self.r, self.ks[keep], self.slopes[keep], self.sign_branch)

    def admits_seed(self, k: int) -> bool:
        i = np.searchsorted(self.ks, k)
        return i < len(self.ks) and self.ks[i] == k and self.coeff_a[i] < 0


def sign_branch(gamma: float, slopes) -> str | None:
    """Which existence branch the slope table supports, if any."""
    slopes = np.asarray(slopes)
    if gamma < 0 and np.any(slopes > 0):
        return "gamma<0, positive slope"
    if gamma > 0 and np.any(slopes < 0):
        return "gamma>0, negative slope"
    return None


def eta_table(medium: Medium, gamma: float, N: int, r: int | None = None) -> FunctionalSpec:
    """Build J's coefficient tables from the mode slopes of ``medium``."""
    _check_odd(N)
    r = medium.r_base if r is None else validate_symmetry(medium, r)
    ks = medium.lattice(N, r)
    slopes = np.array([mode_profile(medium, int(k)).slope0 for k in ks])
    if gamma == 0:
        raise InvalidInput("gamma must be nonzero")
    branch = sign_branch(gamma, slopes)
    if branch is None:
        want = "positive" if gamma < 0 else "negative"
        raise SignConditionFailed(f"gamma={gamma} needs a {want} slope Phi_k'(0) among k in {r}*Z_odd, k <= {N}")
    return FunctionalSpec(float(medium.omega), float(gamma), N, r, ks, slopes, branch)


def _check_support(spec: FunctionalSpec, z: OddSequence) -> None:
    if z.N > spec.N:
        raise SupportViolation(f"sequence truncation {z.N} exceeds N={spec.N}")
    if spec.r > 1 or len(spec.ks) != (spec.N + 1) // 2:
        mask = np.ones(z.values.size, dtype=bool)
        idx = spec.index[spec.ks <= z.N]
        mask[idx] = False
        if np.any(z.values[mask] != 0):
            raise SupportViolation(f"sequence has entries outside {spec.r}*Z_odd")


def _lattice(spec: FunctionalSpec, z: OddSequence) -> np.ndarray:
    """Values of z on the lattice of ``spec`` (zero beyond z.N)."""
    return z.embed(spec.N).values[spec.index]


def J_parts(spec: FunctionalSpec, z: OddSequence) -> tuple[float, float]:
    """(quartic, quadratic) contributions to J."""
    _check_support(spec, z)
    x = _lattice(spec, z)
    return 0.25 * quad_norm4(z), 2.0 * float(np.dot(spec.coeff_a, x * x))


def eval_J(spec: FunctionalSpec, z: OddSequence) -> float:
    q4, q2 = J_parts(spec, z)
    return q4 + q2


def grad_J(spec: FunctionalSpec, z: OddSequence) -> OddSequence:
    """Riesz representative g with J'(z)[y] = sum_{k>0} 2 g_k y_k."""
    _check_support(spec, z)
    z = z.embed(spec.N)
    cube = triple(z).positive(spec.ks)
    g = np.zeros((spec.N + 1) // 2)
    g[spec.index] = spec.coeff_eta * z.values[spec.index] - cube
    return OddSequence(spec.N, g)


def directional_derivative(spec: FunctionalSpec, z: OddSequence, y: OddSequence) -> float:
    g = grad_J(spec, z)
    return 2.0 * float(np.dot(g.values, y.embed(spec.N).values))


def hess_J(spec: FunctionalSpec, z: OddSequence) -> np.ndarray:
    """d^2 J / dz_k dz_l on the lattice coordinates."""
    _check_support(spec, z)
    z = z.embed(spec.N)
    f = z.full()
    sq = np.convolve(f, f)
    c = 2 * spec.N
    k = spec.ks
    H = 6.0 * (sq[c + k[:, None] + k[None, :]] - sq[c + k[:, None] - k[None, :]])
    H[np.diag_indices_from(H)] += 4.0 * spec.coeff_a
    return H


@dataclass(frozen=True)
class ELResidual:
    """r_k = (z*z*z)_k - eta_k z_k on the lattice, plus (z*z*z)_k at odd k <= N off the lattice."""

    ks: np.ndarray
    on_lattice: np.ndarray
    off_ks: np.ndarray
    off_lattice: np.ndarray

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.on_lattice))) if self.on_lattice.size else 0.0

    @property
    def l2(self) -> float:
        return float(np.linalg.norm(self.on_lattice))

    @property
    def off_sup(self) -> float:
        return float(np.max(np.abs(self.off_lattice))) if self.off_lattice.size else 0.0


def el_residual(spec: FunctionalSpec, z: OddSequence) -> ELResidual:
    _check_support(spec, z)
    z = z.embed(spec.N)
    cube = triple(z)
    on = cube.positive(spec.ks) - spec.coeff_eta * z.values[spec.index]
    all_ks = z.ks
    off_ks = np.setdiff1d(all_ks, spec.ks)
    return ELResidual(spec.ks, on, off_ks, cube.positive(off_ks))
