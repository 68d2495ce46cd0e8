import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from breather.errors import BadIndex, DecayViolation, InvalidInput, NoSpectralGap
from breather.floquet import (c1_jumps, c2_constants, dirichlet_mode, floquet_multipliers, mode_profile,
                              mode_table, monodromy, ode_residual, periodic_mode, propagation, step_mode,
                              verify_c2)
from breather.media import dirichlet_medium, periodic_medium, step_medium
from breather.quadrature import integrate


def rk4(rhs, y0, s, n=4000):
    y = np.array(y0, dtype=float)
    h = s / n
    for _ in range(n):
        k1 = rhs(y)
        k2 = rhs(y + h / 2 * k1)
        k3 = rhs(y + h / 2 * k2)
        k4 = rhs(y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def matching_slope(a, b, c, omega, k):
    """Phi = B cos + A sin on [0,c], D exp(-mu (x-c)) beyond; solve for (A, B, D) with Phi(0) = 1."""
    lam, mu = k * omega * math.sqrt(b), k * omega * math.sqrt(a)
    s, co = math.sin(lam * c), math.cos(lam * c)
    M = np.array([[0.0, 1.0, 0.0],
                  [s, co, -1.0],
                  [lam * co, -lam * s, mu]])
    A, B, D = np.linalg.solve(M, [1.0, 0.0, 0.0])
    return A * lam


# -- propagation and monodromy -------------------------------------------------

def test_propagation_zero_length_is_identity():
    assert np.array_equal(propagation(0.0, 2.0, 3, 0.7), np.eye(2))


def test_propagation_half_turn():
    P = propagation(math.pi, 1.0, 1, 1.0)
    assert np.allclose(P, -np.eye(2), atol=1e-15)
    col0 = rk4(lambda y: np.array([y[1], -y[0]]), [1.0, 0.0], math.pi)
    col1 = rk4(lambda y: np.array([y[1], -y[0]]), [0.0, 1.0], math.pi)
    assert np.allclose(np.column_stack([col0, col1]), P, atol=1e-10)


@given(s=st.floats(0, 20), c=st.floats(0.01, 50), k=st.integers(0, 50), w=st.floats(0.05, 3))
def test_propagation_unimodular(s, c, k, w):
    assert abs(np.linalg.det(propagation(s, c, 2 * k + 1, w)) - 1) < 1e-10


def test_propagation_rejects_bad_input():
    with pytest.raises(InvalidInput):
        propagation(-1.0, 1.0, 1, 1.0)
    with pytest.raises(InvalidInput):
        propagation(1.0, 0.0, 1, 1.0)


def test_monodromy_trace_k1(periodic):
    mono = monodromy(periodic, 1)
    assert mono.closed_form_trace == pytest.approx(10 / 3, abs=1e-12)
    assert mono.trace == pytest.approx(10 / 3, abs=1e-12)
    assert abs(mono.det - 1) < 1e-10


def test_monodromy_trace_k3(periodic):
    assert abs(monodromy(periodic, 3).trace) == pytest.approx(10 / 3, abs=1e-12)


def test_multipliers_from_trace():
    small, large = floquet_multipliers(10 / 3)
    assert small == pytest.approx(1 / 3, abs=1e-15) and large == pytest.approx(3, abs=1e-15)
    small, large = floquet_multipliers(-10 / 3)
    assert small == pytest.approx(-1 / 3, abs=1e-15) and large == pytest.approx(-3, abs=1e-15)


@pytest.mark.parametrize("tr", [2.0, -2.0, 0.0, 1.5])
def test_multipliers_gap_required(tr):
    with pytest.raises(NoSpectralGap):
        floquet_multipliers(tr)


@given(tr=st.floats(2.0001, 1e6), sign=st.sampled_from([1, -1]))
def test_multiplier_product_is_one(tr, sign):
    small, large = floquet_multipliers(sign * tr)
    assert abs(small * large - 1) < 1e-10
    assert abs(small) < 1 < abs(large)


def test_multipliers_from_matrix_argument(periodic):
    mono = monodromy(periodic, 5)
    assert floquet_multipliers(mono.matrix) == floquet_multipliers(mono)


# -- step medium ---------------------------------------------------------------

@pytest.mark.parametrize("k,slope", [(1, 1.0), (3, 3.0)])
def test_step_slope_examples(step, k, slope):
    p = step_mode(step, k)
    assert p.slope0 == pytest.approx(slope, abs=1e-12)
    assert p(np.array([0.0]))[0] == 1.0


def test_step_slopes_match_independent_solve():
    for a, b, c, w in ((1, 1, sp.pi / 2, 1), (4, 9, sp.pi / 2, 1), (2, 1, sp.pi / 6, 1)):
        m = step_medium(a, b, c, w)
        for k in m.lattice(99):
            p = step_mode(m, int(k))
            assert p.slope0 == pytest.approx(m.b * k * m.omega / math.sqrt(m.a), rel=1e-12)
            assert p.slope0 == pytest.approx(matching_slope(m.a, m.b, m.c, m.omega, int(k)), rel=1e-12)


def test_step_bad_index():
    m = step_medium(1, 1, sp.pi / 6, 1)
    with pytest.raises(BadIndex):
        step_mode(m, 1)
    with pytest.raises(BadIndex):
        step_mode(m, 6)


def test_step_slope_over_k_constant(step):
    ratios = [step_mode(step, k).slope0 / k for k in range(1, 200, 2)]
    assert np.ptp(ratios) < 1e-12


# -- periodic medium -----------------------------------------------------------

def test_periodic_slope_k1(periodic):
    p = periodic_mode(periodic, 1)
    assert p.slope0 == pytest.approx(-0.5, abs=1e-12)
    h = 1e-6
    fd = (-3 * p(np.array([0.0]))[0] + 4 * p(np.array([h]))[0] - p(np.array([2 * h]))[0]) / (2 * h)
    assert fd == pytest.approx(-0.5, abs=1e-6)


def test_periodic_slopes_alternate(periodic):
    slopes = [periodic_mode(periodic, k).slope0 for k in range(1, 100, 2)]
    assert np.all(np.abs(np.abs(slopes) - 0.5 * np.arange(1, 100, 2)) < 1e-10)
    assert np.all(np.sign(slopes[:-1]) != np.sign(slopes[1:]))
    assert slopes[1] == pytest.approx(1.5, abs=1e-12)


def test_periodic_cos_modulus(periodic):
    for k in range(1, 100, 2):
        val = math.cos(k * periodic.omega * math.sqrt(periodic.a) * periodic.theta * math.pi)
        assert abs(abs(val) - 1 / math.sqrt(2)) < 1e-12


def test_periodic_multiplier_formula(periodic):
    a, b = periodic.a, periodic.b
    l, m = periodic.l, periodic.m
    for k in range(1, 60, 2):
        p = periodic_mode(periodic, k)
        expect = -math.sqrt(a / b) * math.sin(k * m * l * math.pi) * math.sin(k * m * math.pi)
        assert p.floquet_mult == pytest.approx(expect, abs=1e-12)
        assert p.decay_rate == pytest.approx(math.log(9) / (4 * math.pi), rel=1e-12)


def test_periodic_floquet_shift(periodic):
    x = np.linspace(0, 6 * math.pi, 997)
    for k in (1, 3, 11, 51, 99):
        p = periodic_mode(periodic, k)
        assert np.max(np.abs(p(x + 2 * math.pi) - p.floquet_mult * p(x))) < 1e-10


def test_periodic_a_greater_than_b():
    m = periodic_medium(9, 1, sp.Rational(1, 2), sp.Rational(1, 6))
    for k in m.lattice(21):
        p = periodic_mode(m, int(k))
        assert abs(p.floquet_mult) < 1
        assert p(np.array([0.0]))[0] == pytest.approx(1.0, abs=1e-14)
        assert ode_residual(m, p) < 1e-8


# -- Dirichlet interval --------------------------------------------------------

def test_dirichlet_slopes():
    m = dirichlet_medium(sp.pi / 4, 1)
    assert dirichlet_mode(m, 1).slope0 == pytest.approx(-1.0, abs=1e-12)
    assert dirichlet_mode(m, 3).slope0 == pytest.approx(3.0, abs=1e-12)


def test_dirichlet_profile_vanishes_at_wall(dirichlet):
    for k in (1, 3, 5, 7):
        p = dirichlet_mode(dirichlet, k)
        assert p(np.array([0.0]))[0] == 1.0
        assert abs(p(np.array([dirichlet.l]))[0]) < 1e-12
        assert p(np.array([dirichlet.l + 0.1]))[0] == 0.0


def test_dirichlet_sign_change(dirichlet):
    q2 = dirichlet.sign_period
    for k in range(1, 41, 2):
        assert dirichlet_mode(dirichlet, k).slope0 * dirichlet_mode(dirichlet, k + q2).slope0 < 0


# -- pointwise checks shared by all media ---------------------------------------

@pytest.mark.parametrize("name", ["step", "periodic", "dirichlet"])
def test_ode_residual_and_c1(name, request):
    medium = request.getfixturevalue(name)
    for k in medium.lattice(99)[[0, 1, 5, 24, -1]]:
        p = mode_profile(medium, int(k))
        assert ode_residual(medium, p) < 1e-8
        assert c1_jumps(p, 40.0) < 1e-10


def test_profiles_normalized(step, periodic, dirichlet):
    for m in (step, periodic, dirichlet):
        for k, p in mode_table(m, m.lattice(41)).items():
            assert p(np.array([0.0]))[0] == pytest.approx(1.0, abs=1e-14)


def test_negative_x_rejected(step):
    with pytest.raises(InvalidInput):
        step_mode(step, 1)(np.array([-1.0]))


@pytest.mark.parametrize("name", ["step", "periodic"])
def test_profile_norm_growth_bounded(name, request):
    medium = request.getfixturevalue(name)
    _, rho = c2_constants(medium)
    X = 20 / rho
    l2, dl2 = [], []
    for k in medium.lattice(99):
        p = mode_profile(medium, int(k))
        brk = [0.0] + p.breakpoints(X) + [X]
        h = 0.25 / (k * medium.omega * 3)
        l2.append(math.sqrt(integrate(lambda x: p(x) ** 2, brk, h)))
        dl2.append(math.sqrt(integrate(lambda x: p.deriv(x) ** 2, brk, h)) / k)
    l2, dl2 = np.array(l2), np.array(dl2)
    half = len(l2) // 2
    # bounded in k: the upper half of the range does not outgrow the lower half
    assert l2[half:].max() <= 1.05 * l2[:half].max()
    assert dl2[half:].max() <= 1.05 * dl2[:half].max()


# -- decay constants -----------------------------------------------------------

def test_c2_constants_values(step, periodic):
    assert c2_constants(step) == (2.0, 0.5)
    M, rho = c2_constants(periodic)
    assert rho == pytest.approx(math.log(9) / (4 * math.pi))
    assert M == pytest.approx(math.sqrt(2) * (1 + 1 / 3))


def test_c2_nominal_step_bound_is_violated(step):
    # (A+B) e^{-x/2} drops below |Phi_1(c)| = A before the tail takes over
    with pytest.raises(DecayViolation) as info:
        verify_c2(step, 99)
    assert info.value.k == 1 and info.value.ratio > 1.1


def test_c2_certified_step_bound_holds(step):
    M, rho = verify_c2(step, 99, certified=True)
    assert M == pytest.approx(2 * math.exp(math.pi / 4))
    assert rho == 0.5


def test_c2_periodic_nominal_holds(periodic):
    verify_c2(periodic, 99)


def test_c2_dirichlet(dirichlet):
    M, rho = verify_c2(dirichlet, 99)
    assert rho == 0.0 and M >= 1.0


def test_c2_bound_at_origin(step, periodic, dirichlet):
    for m in (step, periodic, dirichlet):
        M, _ = c2_constants(m)
        assert M >= 1.0
