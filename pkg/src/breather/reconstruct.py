"""Space-time field reconstruction and a posteriori checks.

The real field is

    w(x, t) = (2/sqrt(T)) sum_{k>0} (alpha_k / k) Phi_k(|x|) cos(omega k t),

which is the e_k series with antisymmetric coefficients alpha_k / k written
out over k > 0. With this convention w_t(0, t) = -omega * time_signal(alpha).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, MissingProfile, QuadratureNonConvergence, TailUnderflow
from .floquet import c2_constants, mode_profile
from .media import DirichletMedium, Medium
from .quadrature import GL_ORDER, gauss_legendre_nodes, panel_edges
from .seqspace import OddSequence, h_norm, pair, quad_pairing, time_signal

H3_POINTS = 4096
SCALE_FLOOR = 1e-9


def _period(omega: float) -> float:
    return 2 * math.pi / omega


def _active(alpha: OddSequence, profiles: dict) -> tuple[np.ndarray, np.ndarray]:
    ks = alpha.support()
    missing = [int(k) for k in ks if int(k) not in profiles]
    if missing:
        raise MissingProfile(f"no mode profile for k={missing}")
    return ks, alpha.values[(ks - 1) // 2]


def mode_matrix(profiles: dict, ks, x, deriv: bool = False) -> np.ndarray:
    """Columns Phi_k(|x|) (or sign(x) Phi_k'(|x|)) for each k in ks."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    cols = []
    for k in ks:
        p = profiles[int(k)]
        cols.append(np.sign(x) * p.deriv(ax) if deriv else p(ax))
    return np.column_stack(cols) if cols else np.zeros((x.size, 0))


@dataclass
class FieldGrid:
    x: np.ndarray
    t: np.ndarray
    values: np.ndarray
    omega: float
    imag_residue: float = 0.0

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0


def assemble(alpha: OddSequence, profiles: dict, x_grid, t_grid, omega: float,
             check_real: bool = False) -> FieldGrid:
    """Evaluate w on the tensor grid x_grid x t_grid.

    With ``check_real`` the signed complex series is summed as well and its
    largest imaginary part is stored in ``imag_residue``.
    """
    x = np.asarray(x_grid, dtype=float)
    t = np.asarray(t_grid, dtype=float)
    T = _period(omega)
    ks, a = _active(alpha, profiles)
    if ks.size == 0:
        return FieldGrid(x, t, np.zeros((x.size, t.size)), omega)
    space = mode_matrix(profiles, ks, x) * (a / ks)
    phase = omega * np.multiply.outer(ks, t)
    values = (2.0 / math.sqrt(T)) * space @ np.cos(phase)
    imag = 0.0
    if check_real:
        series = complex_series(alpha, profiles, x, t, omega)
        imag = float(np.max(np.abs(series.imag)))
    return FieldGrid(x, t, values, omega, imag)


def complex_series(alpha: OddSequence, profiles: dict, x, t, omega: float) -> np.ndarray:
    """The e_k series summed over signed k, kept complex."""
    T = _period(omega)
    ks, a = _active(alpha, profiles)
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if ks.size == 0:
        return np.zeros((x.size, t.size), dtype=complex)
    space = mode_matrix(profiles, ks, x)
    signed_k = np.concatenate([ks, -ks])
    coeff = np.concatenate([a / ks, (-a) / (-ks)])
    cols = np.concatenate([space, space], axis=1) * coeff
    return cols @ np.exp(1j * omega * np.multiply.outer(signed_k, t)) / math.sqrt(T)


def time_grid(omega: float, nt: int) -> np.ndarray:
    """nt uniform points on [0, T)."""
    return np.arange(nt) * (_period(omega) / nt)


def x_grid(medium: Medium, x_max: float | None = None, n_per_length: float | None = None,
           k_max: int = 1, symmetric: bool = True) -> np.ndarray:
    """Interface-aligned grid on [0, x_max], mirrored to [-x_max, x_max]."""
    if x_max is None:
        x_max = default_x_max(medium)
    x_max = min(x_max, medium.x_end)
    lam = k_max * medium.omega * math.sqrt(_g_max(medium))
    h = 1.0 / n_per_length if n_per_length else min(decay_length(medium) / 40, 1.0 / lam)
    edges = panel_edges([0.0, *medium.interfaces(x_max), x_max], h)
    return np.concatenate([-edges[:0:-1], edges]) if symmetric else edges


def _g_max(medium: Medium) -> float:
    if isinstance(medium, DirichletMedium):
        return 1.0
    return float(max(abs(medium.a), abs(medium.b)))


def decay_length(medium: Medium) -> float:
    _, rho = c2_constants(medium)
    return medium.x_end / 4 if rho == 0 else 1.0 / rho


def default_x_max(medium: Medium) -> float:
    _, rho = c2_constants(medium)
    return medium.x_end if rho == 0 else 20.0 / rho


# -- symmetry and decay -------------------------------------------------------

def check_antiperiodicity(alpha: OddSequence, profiles: dict, x, t, omega: float, r: int) -> float:
    """max |w(x, t + T/(2r)) + w(x, t)| over the grid."""
    T = _period(omega)
    base = assemble(alpha, profiles, x, t, omega).values
    shifted = assemble(alpha, profiles, x, np.asarray(t) + T / (2 * r), omega).values
    return float(np.max(np.abs(shifted + base))) if base.size else 0.0


@dataclass
class DecayFit:
    rho_fit: float
    C_fit: float
    intercept: float
    fit_residual: float
    M_theory: float
    rho_theory: float
    window: tuple

    def bound(self, x) -> np.ndarray:
        return self.C_fit * np.exp(-self.rho_fit * np.abs(x))


def envelope(field: FieldGrid) -> tuple[np.ndarray, np.ndarray]:
    """Suffix maximum of max_t |w| over x >= 0 (monotone envelope)."""
    keep = field.x >= 0
    x = field.x[keep]
    amp = np.max(np.abs(field.values[keep]), axis=1)
    order = np.argsort(x)
    x, amp = x[order], amp[order]
    env = np.maximum.accumulate(amp[::-1])[::-1]
    return x, env


def fit_decay(field: FieldGrid, medium: Medium | None = None) -> DecayFit:
    """Least-squares fit of log envelope against x over [x_max/2, x_max]."""
    x, env = envelope(field)
    x_max = float(x[-1])
    win = x >= x_max / 2
    if np.any(env[win] < 1e-300) or not np.any(env > 0):
        raise TailUnderflow("field tail below 1e-300, no decay rate can be fitted")
    xs, ys = x[win], np.log(env[win])
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = float(np.sqrt(np.mean((ys - (slope * xs + intercept)) ** 2)))
    rho_fit = -float(slope)
    C_fit = float(np.max(env * np.exp(rho_fit * x)))
    M, rho = c2_constants(medium) if medium is not None else (float("nan"), float("nan"))
    return DecayFit(rho_fit, C_fit, float(math.exp(intercept)), resid, M, rho, (x_max / 2, x_max))


# -- weak formulation ---------------------------------------------------------

@dataclass(frozen=True)
class TestFunction:
    """psi(x, t) = (2/(k sqrt(T))) Psi(|x|) cos(omega k t), i.e. the unit pair at k carried by Psi."""

    k: int
    label: str
    value: object
    deriv: object
    support_end: float
    breaks: tuple = ()


@dataclass
class WeakResidualReport:
    labels: list
    ks: np.ndarray
    direct: np.ndarray
    reduced: np.ndarray
    H1: np.ndarray
    H2: np.ndarray
    H3: np.ndarray
    gamma: float
    in_band: np.ndarray = field(default=None)

    @property
    def raw_scale(self) -> np.ndarray:
        return np.maximum.reduce([np.abs(self.H1), np.abs(self.H2), np.abs(self.gamma * self.H3)])

    @property
    def scale(self) -> np.ndarray:
        """Per-test normalization, floored at SCALE_FLOOR times the largest in the bank.

        Tests whose three terms all sit at roundoff level carry no signal of
        their own; the floor keeps their ratios meaningful.
        """
        raw = self.raw_scale
        if not raw.size:
            return raw
        floor = SCALE_FLOOR * float(np.max(raw))
        return np.maximum(raw, floor) if floor > 0 else np.where(raw > 0, raw, 1.0)

    def max_relative(self, in_band_only: bool = True) -> float:
        sel = self.in_band if in_band_only and self.in_band is not None else np.ones(self.ks.size, bool)
        if not np.any(sel):
            return 0.0
        return float(np.max(np.abs(self.direct[sel]) / self.scale[sel]))

    def max_path_gap(self) -> float:
        return float(np.max(np.abs(self.direct - self.reduced) / self.scale)) if self.ks.size else 0.0


def gaussian_bank(medium: Medium, ks, factors=(0.5, 1.0, 2.0)) -> list[TestFunction]:
    """Psi = exp(-(x/sigma)^2), sigma = factor * decay length, cut off at 8 sigma."""
    L = decay_length(medium)
    bank = []
    for f in factors:
        s = f * L
        val = (lambda x, s=s: np.exp(-(x / s) ** 2))
        der = (lambda x, s=s: -2 * x / s ** 2 * np.exp(-(x / s) ** 2))
        for k in ks:
            bank.append(TestFunction(int(k), f"gauss(sigma={f:g}L)", val, der, 8 * s))
    return bank


def dirichlet_bank(medium: DirichletMedium, ks, powers=(2, 3, 4)) -> list[TestFunction]:
    """Psi = cos^(2m)(pi x / (2 l)), vanishing to order 2m at x = l."""
    c = math.pi / (2 * medium.l)
    bank = []
    for m in powers:
        val = (lambda x, m=m: np.cos(c * x) ** (2 * m))
        der = (lambda x, m=m: -2 * m * c * np.cos(c * x) ** (2 * m - 1) * np.sin(c * x))
        for k in ks:
            bank.append(TestFunction(int(k), f"cos^{2 * m}", val, der, medium.l))
    return bank


def profile_bank(medium: Medium, ks) -> list[TestFunction]:
    """Psi = Phi_k itself (cut where it has decayed by e^-40)."""
    bank = []
    for k in ks:
        p = mode_profile(medium, int(k))
        end = medium.x_end if math.isfinite(medium.x_end) else 40.0 / p.decay_rate
        bank.append(TestFunction(int(k), "phi", p, p.deriv, end))
    return bank


def default_bank(medium: Medium, N: int, include_profiles: bool = True) -> list[TestFunction]:
    ks = np.arange(1, N + 1, 2)
    bank = dirichlet_bank(medium, ks) if isinstance(medium, DirichletMedium) else gaussian_bank(medium, ks)
    if include_profiles:
        bank += profile_bank(medium, medium.lattice(N))
    return bank


def _quad_nodes(medium: Medium, end: float, h: float):
    return gauss_legendre_nodes(panel_edges([0.0, *medium.interfaces(end), end], h), GL_ORDER)


def _direct_terms(alpha, profiles, medium, omega, bank, h, nt):
    """H1 and H2 by Gauss-Legendre in x and the trapezoid rule in t."""
    T = _period(omega)
    ks, a = _active(alpha, profiles)
    t = time_grid(omega, nt)
    dt = T / nt
    H1 = np.zeros(len(bank))
    H2 = np.zeros(len(bank))
    by_end: dict = {}
    for i, tf in enumerate(bank):
        by_end.setdefault(tf.support_end, []).append(i)
    for end, idx in by_end.items():
        x, wq = _quad_nodes(medium, end, h)
        if ks.size == 0:
            continue
        phi = mode_matrix(profiles, ks, x)
        dphi = mode_matrix(profiles, ks, x, deriv=True)
        sin_t = np.sin(omega * np.multiply.outer(ks, t))
        cos_t = np.cos(omega * np.multiply.outer(ks, t))
        w_t = -(2 * omega / math.sqrt(T)) * (phi * a) @ sin_t          # (nx, nt)
        w_x = (2 / math.sqrt(T)) * (dphi * (a / ks)) @ cos_t
        g = medium.g(x)
        for i in idx:
            tf = bank[i]
            k0 = tf.k
            psi_t_time = -(2 * omega / math.sqrt(T)) * np.sin(omega * k0 * t)
            psi_x_time = (2 / (k0 * math.sqrt(T))) * np.cos(omega * k0 * t)
            it = (w_t @ psi_t_time) * dt
            ix = (w_x @ psi_x_time) * dt
            H1[i] = 2 * float(np.dot(wq, g * it * tf.value(x)))
            H2[i] = 2 * float(np.dot(wq, ix * tf.deriv(x)))
    return H1, H2


def _boundary_term(alpha, omega, bank):
    T = _period(omega)
    t = time_grid(omega, H3_POINTS)
    wt0 = -omega * time_signal(alpha, t, omega)
    out = np.zeros(len(bank))
    for i, tf in enumerate(bank):
        psi_t0 = -(2 * omega / math.sqrt(T)) * float(tf.value(np.array([0.0]))[0]) * np.sin(omega * tf.k * t)
        out[i] = float(np.sum(wt0 ** 3 * psi_t0)) * (T / H3_POINTS)
    return out


def _reduced(alpha, profiles, omega, gamma, bank):
    """-H1 + H2 - gamma H3 via integration by parts and the sequence pairing."""
    T = _period(omega)
    out = np.zeros(len(bank))
    for i, tf in enumerate(bank):
        k0 = tf.k
        psi0 = float(tf.value(np.array([0.0]))[0])
        a_k = alpha[k0]
        lin = 0.0
        if a_k != 0.0:
            if k0 not in profiles:
                raise MissingProfile(f"no mode profile for k={k0}")
            lin = -4 * a_k * profiles[k0].slope0 * psi0 / k0 ** 2
        y = pair(k0, max(alpha.N, k0), psi0)
        out[i] = lin - gamma * (omega ** 4 / T) * quad_pairing(alpha, alpha, alpha, y)
    return out


def weak_residual(alpha: OddSequence, profiles: dict, medium: Medium, gamma: float,
                  test_bank: list | None = None, nt: int | None = None, h: float | None = None,
                  check_refinement: bool = True) -> WeakResidualReport:
    """Weak-form residual -H1 + H2 - gamma H3 for every test function, by two routes.

    The direct route integrates the space-time form numerically; the reduced
    route uses the mode equation and the sequence pairing. Panel refinement
    (h versus h/2) must reproduce the direct values to 3 significant digits of
    the per-test scale, else QuadratureNonConvergence is raised.
    """
    omega = medium.omega
    if test_bank is None:
        test_bank = default_bank(medium, alpha.N)
    ks_all = alpha.support()
    k_top = max([int(k) for k in ks_all] + [tf.k for tf in test_bank] + [1])
    if nt is None:
        nt = 1 << max(5, int(math.ceil(math.log2(2 * k_top + 2))))
    if h is None:
        lam = k_top * omega * math.sqrt(_g_max(medium))
        h = min(decay_length(medium) / 40, 2.0 / lam)
    H1, H2 = _direct_terms(alpha, profiles, medium, omega, test_bank, h, nt)
    H3 = _boundary_term(alpha, omega, test_bank)
    direct = -H1 + H2 - gamma * H3
    report = WeakResidualReport(
        [tf.label for tf in test_bank], np.array([tf.k for tf in test_bank]), direct,
        _reduced(alpha, profiles, omega, gamma, test_bank), H1, H2, H3, gamma,
        np.array([tf.k <= alpha.N for tf in test_bank]),
    )
    if check_refinement:
        H1c, H2c = _direct_terms(alpha, profiles, medium, omega, test_bank, 2 * h, nt)
        coarse = -H1c + H2c - gamma * H3
        gap = np.abs(coarse - direct) / report.scale
        if np.any(gap > 5e-4):
            i = int(np.argmax(gap))
            raise QuadratureNonConvergence(
                f"panel refinement moved test {report.labels[i]} at k={report.ks[i]} by {gap[i]:.3g} of scale")
    return report


def parseval_check(medium: Medium, bank: list, nt: int = 64) -> np.ndarray:
    """Relative gap between ||psi_t||^2 over the strip (2-D quadrature) and 4 omega^2 int_0^inf Psi^2."""
    omega = medium.omega
    T = _period(omega)
    t = time_grid(omega, nt)
    out = np.zeros(len(bank))
    for i, tf in enumerate(bank):
        h = min(decay_length(medium) / 40, 0.5 / (tf.k * omega))
        x, wq = _quad_nodes(medium, tf.support_end, h)
        psi_t = -(2 * omega / math.sqrt(T)) * np.outer(tf.value(x), np.sin(omega * tf.k * t))
        two_d = 2 * float(np.dot(wq, np.sum(psi_t ** 2, axis=1))) * (T / nt)
        one_d = 4 * omega ** 2 * _psi_sq_integral(medium, tf)
        out[i] = abs(two_d - one_d) / one_d
    return out


def _psi_sq_integral(medium: Medium, tf: TestFunction) -> float:
    """int_0^inf Psi^2 in closed form where available."""
    if tf.label.startswith("gauss"):
        s = tf.support_end / 8
        return s * math.sqrt(math.pi / 8)
    if tf.label.startswith("cos^"):
        p = int(tf.label[4:])  # cos^p over a quarter period, p even
        return tf.support_end * math.comb(2 * p, p) / 4 ** p
    x, wq = _quad_nodes(medium, tf.support_end, 0.01)
    return float(np.dot(wq, tf.value(x) ** 2))


# -- regularity ---------------------------------------------------------------

@dataclass
class RegularityRow:
    nu: float
    h_norm: float


def regularity_diagnostic(alpha: OddSequence, nu_list) -> dict:
    """h^nu norms of alpha and the log-log slope of |alpha_k| over the upper half of the support."""
    for nu in nu_list:
        if not 0 <= nu < 0.5:
            raise InvalidInput(f"nu must lie in [0, 1/2), got {nu}")
    rows = [RegularityRow(float(nu), h_norm(alpha, nu)) for nu in nu_list]
    ks = alpha.support(1e-14)
    vals = np.abs(alpha.values[(ks - 1) // 2])
    slope = float("nan")
    upper = ks >= ks.max() / 2 if ks.size else ks
    if np.count_nonzero(upper) >= 2:
        slope = float(np.polyfit(np.log(ks[upper]), np.log(vals[upper]), 1)[0])
    return {"rows": rows, "tail_exponent": slope}


# -- export -------------------------------------------------------------------

def write_field_csv(field: FieldGrid, path) -> None:
    """Rows x,t,w with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["x", "t", "w"])
        for i, x in enumerate(field.x):
            for j, t in enumerate(field.t):
                wr.writerow([f"{x:.17g}", f"{t:.17g}", f"{field.values[i, j]:.17g}"])
