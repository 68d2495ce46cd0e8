"""Finitely supported antisymmetric sequences over the odd integers.

A sequence z with z_{-k} = -z_k is stored by its half spectrum
(z_1, z_3, ..., z_N). Convolutions work on the signed "full" layout, an
array over indices -n..n with zeros at even positions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, SupportViolation


def _check_odd(N: int) -> int:
    if int(N) != N or N < 1 or N % 2 == 0:
        raise InvalidInput(f"truncation N must be a positive odd integer, got {N!r}")
    return int(N)


class OddSequence:
    """Immutable antisymmetric sequence truncated at |k| <= N."""

    __slots__ = ("_N", "_values")

    def __init__(self, N: int, values=None):
        self._N = _check_odd(N)
        n_half = (self._N + 1) // 2
        if values is None:
            arr = np.zeros(n_half)
        else:
            arr = np.array(values, dtype=float)
            if arr.shape != (n_half,):
                raise InvalidInput(f"expected {n_half} half-spectrum values for N={N}, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidInput("sequence entries must be finite")
        arr.setflags(write=False)
        self._values = arr

    @property
    def N(self) -> int:
        return self._N

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def ks(self) -> np.ndarray:
        return np.arange(1, self._N + 1, 2)

    @classmethod
    def from_dict(cls, N: int, entries: dict) -> "OddSequence":
        vals = np.zeros((N + 1) // 2)
        for k, v in entries.items():
            k = int(k)
            if k % 2 == 0 or abs(k) > N:
                raise SupportViolation(f"index {k} outside the odd range |k| <= {N}")
            vals[(abs(k) - 1) // 2] += v if k > 0 else -v
        return cls(N, vals)

    @classmethod
    def from_lattice(cls, N: int, r: int, coeffs) -> "OddSequence":
        """Place ``coeffs`` on k = r, 3r, 5r, ... <= N."""
        vals = np.zeros((N + 1) // 2)
        idx = (np.arange(r, N + 1, 2 * r) - 1) // 2
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != idx.shape:
            raise InvalidInput(f"lattice r={r}, N={N} needs {idx.size} coefficients, got {coeffs.size}")
        vals[idx] = coeffs
        return cls(N, vals)

    def __getitem__(self, k: int) -> float:
        k = int(k)
        if k % 2 == 0 or abs(k) > self._N:
            return 0.0
        v = self._values[(abs(k) - 1) // 2]
        return float(v if k > 0 else -v)

    def full(self, n: int | None = None) -> np.ndarray:
        """Signed array over indices -n..n (default n = N)."""
        n = self._N if n is None else n
        out = np.zeros(2 * n + 1)
        ks = self.ks
        keep = ks <= n
        out[n + ks[keep]] = self._values[keep]
        out[n - ks[keep]] = -self._values[keep]
        return out

    def lattice_values(self, r: int) -> np.ndarray:
        return self._values[(np.arange(r, self._N + 1, 2 * r) - 1) // 2]

    def support(self, rel_tol: float = 0.0) -> np.ndarray:
        """Indices k > 0 with |z_k| > rel_tol * max|z|."""
        if not self._values.size:
            return self.ks
        cut = rel_tol * float(np.max(np.abs(self._values)))
        return self.ks[np.abs(self._values) > cut]

    def check_lattice(self, r: int) -> None:
        off = [int(k) for k in self.support() if k % r != 0 or (k // r) % 2 == 0]
        if off:
            raise SupportViolation(f"entries at k={off} lie outside {r}*Z_odd")

    def embed(self, N: int) -> "OddSequence":
        """Zero-pad (or truncate) to a new bound N."""
        vals = np.zeros((_check_odd(N) + 1) // 2)
        m = min(vals.size, self._values.size)
        vals[:m] = self._values[:m]
        return OddSequence(N, vals)

    def __add__(self, other):
        N = max(self.N, other.N)
        return OddSequence(N, self.embed(N).values + other.embed(N).values)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rmul__(self, t):
        return OddSequence(self._N, float(t) * self._values)

    __mul__ = __rmul__

    def __neg__(self):
        return (-1.0) * self

    def __eq__(self, other):
        return isinstance(other, OddSequence) and self.N == other.N and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self._N, self._values.tobytes()))

    def __repr__(self):
        nz = {int(k): float(v) for k, v in zip(self.ks, self._values) if v != 0}
        return f"OddSequence(N={self._N}, {nz})"


def zeros(N: int) -> OddSequence:
    return OddSequence(N)


def pair(k0: int, N: int, t: float = 1.0) -> OddSequence:
    """t times the unit test pair delta_{k,k0} - delta_{k,-k0}."""
    if k0 < 1 or k0 % 2 == 0 or k0 > N:
        raise InvalidInput(f"pair index {k0} must be odd and within 1..{N}")
    return OddSequence.from_dict(N, {k0: t})


@dataclass(frozen=True)
class ConvolutionResult:
    """Signed sequence over indices -n..n, stored densely."""

    values: np.ndarray
    n: int

    def __getitem__(self, k: int) -> float:
        k = int(k)
        return float(self.values[self.n + k]) if abs(k) <= self.n else 0.0

    def positive(self, ks) -> np.ndarray:
        ks = np.asarray(ks, dtype=int)
        out = np.zeros(ks.shape)
        ok = np.abs(ks) <= self.n
        out[ok] = self.values[self.n + ks[ok]]
        return out

    def sq_norm(self) -> float:
        return float(np.dot(self.values, self.values))


def _conv_full(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.convolve(x, y)


def convolve(*seqs) -> ConvolutionResult:
    """Discrete convolution of two or more sequences (direct sum)."""
    if len(seqs) < 2:
        raise InvalidInput("convolve needs at least two sequences")
    out = seqs[0].full()
    n = seqs[0].N
    for s in seqs[1:]:
        out = _conv_full(out, s.full())
        n += s.N
    return ConvolutionResult(out, n)


def triple(z: OddSequence) -> ConvolutionResult:
    return convolve(z, z, z)


def quad_norm4(z: OddSequence) -> float:
    """|||z|||^4 = ||z*z||^2."""
    return convolve(z, z).sq_norm()


def quad_norm4_pairing(z: OddSequence) -> float:
    """|||z|||^4 as (z*z*z*z)_0 built from the triple convolution."""
    return quad_pairing(z, z, z, z)


def quad_norm(z: OddSequence) -> float:
    return quad_norm4(z) ** 0.25


def quad_pairing(u: OddSequence, v: OddSequence, w: OddSequence, z: OddSequence) -> float:
    """(u*v*w*z)_0 = sum_l (u*v*w)_l z_{-l}."""
    c = convolve(u, v, w)
    zf = z.full()
    m = min(c.n, z.N)
    return float(np.dot(c.values[c.n - m: c.n + m + 1], zf[z.N - m: z.N + m + 1][::-1]))


def l2_norm(z: OddSequence) -> float:
    """l2 norm over the signed support (sqrt(2) times the half-vector norm)."""
    return math.sqrt(2.0) * float(np.linalg.norm(z.values))


def h_norm(z: OddSequence, nu: float) -> float:
    """sqrt(sum_k (1 + k^2)^nu z_k^2) over the signed support."""
    if nu < 0:
        raise InvalidInput(f"nu must be nonnegative, got {nu}")
    k = z.ks.astype(float)
    w = (1.0 + k * k) ** nu
    return math.sqrt(2.0 * float(np.dot(w, z.values ** 2)))


def time_signal(z: OddSequence, t, omega: float) -> np.ndarray:
    """Real signal (2/sqrt(T)) sum_{k>0} z_k sin(omega k t); the series itself is i times this."""
    T = 2 * math.pi / omega
    t = np.asarray(t, dtype=float)
    phase = omega * np.multiply.outer(t, z.ks)
    return (2.0 / math.sqrt(T)) * (np.sin(phase) @ z.values)
