import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from breather.errors import InvalidInput, SupportViolation
from breather.seqspace import (OddSequence, convolve, h_norm, l2_norm, pair, quad_norm, quad_norm4,
                               quad_norm4_pairing, quad_pairing, time_signal, triple, zeros)

from conftest import random_sequence


def brute_conv(u, v):
    out = {}
    for k in range(-u.N, u.N + 1, 2):
        for l in range(-v.N, v.N + 1, 2):
            out[k + l] = out.get(k + l, 0.0) + u[k] * v[l]
    return out


def sequences(max_N=21):
    @st.composite
    def build(draw):
        N = 2 * draw(st.integers(0, (max_N - 1) // 2)) + 1
        vals = draw(arrays(float, (N + 1) // 2, elements=st.floats(-10, 10)))
        return OddSequence(N, vals)
    return build()


# -- representation ------------------------------------------------------------

def test_antisymmetry_by_representation():
    z = OddSequence.from_dict(7, {1: 2.0, -3: 1.0, 7: -4.0})
    assert z[1] == 2.0 and z[-1] == -2.0
    assert z[3] == -1.0 and z[-3] == 1.0
    assert z[2] == 0.0 and z[9] == 0.0


def test_invalid_construction():
    with pytest.raises(InvalidInput):
        OddSequence(4)
    with pytest.raises(InvalidInput):
        OddSequence(5, [1.0, 2.0])
    with pytest.raises(InvalidInput):
        OddSequence(3, [1.0, float("inf")])
    with pytest.raises(SupportViolation):
        OddSequence.from_dict(5, {2: 1.0})
    with pytest.raises(SupportViolation):
        OddSequence.from_dict(5, {7: 1.0})


def test_values_are_immutable():
    z = pair(1, 5)
    with pytest.raises(ValueError):
        z.values[0] = 3.0


def test_lattice_helpers():
    z = OddSequence.from_lattice(21, 3, [1.0, 2.0, 3.0, 4.0])
    assert list(z.support()) == [3, 9, 15, 21]
    z.check_lattice(3)
    with pytest.raises(SupportViolation):
        z.check_lattice(9)
    assert list(z.lattice_values(3)) == [1.0, 2.0, 3.0, 4.0]


def test_embed_and_arithmetic():
    z = pair(3, 5, 2.0)
    big = z.embed(11)
    assert big.N == 11 and big[3] == 2.0 and big[11] == 0.0
    s = z + pair(7, 9)
    assert s.N == 9 and s[3] == 2.0 and s[7] == 1.0
    assert (s - s) == zeros(9)
    assert (-z)[3] == -2.0 and (3 * z)[3] == 6.0


# -- convolution ---------------------------------------------------------------

def test_unit_pair_square():
    c = convolve(pair(1, 1), pair(1, 1))
    assert (c[0], c[2], c[-2]) == (-2.0, 1.0, 1.0)
    assert c[1] == 0.0


def test_zero_convolution():
    assert not np.any(convolve(zeros(5), pair(3, 5)).values)


def test_convolution_matches_brute_force():
    rng = np.random.default_rng(1)
    u, v = random_sequence(rng, 9), random_sequence(rng, 7)
    c = convolve(u, v)
    for k, val in brute_conv(u, v).items():
        assert c[k] == pytest.approx(val, abs=1e-12)


@given(sequences(9), sequences(9))
def test_convolution_commutes(u, v):
    a, b = convolve(u, v), convolve(v, u)
    assert a.n == b.n and np.allclose(a.values, b.values, rtol=0, atol=1e-12)


@given(sequences(), sequences())
def test_convolution_parity(u, v):
    c2 = convolve(u, v)
    ks = np.arange(-c2.n, c2.n + 1)
    assert not np.any(c2.values[ks % 2 == 1])
    assert np.allclose(c2.values, c2.values[::-1])  # symmetric: (z*y)_{-k} = (z*y)_k
    c3 = convolve(u, v, u)
    ks = np.arange(-c3.n, c3.n + 1)
    assert not np.any(c3.values[ks % 2 == 0])


def test_triple_of_pair():
    c = triple(pair(1, 1))
    assert (c[1], c[3], c[-1], c[-3]) == (-3.0, 1.0, 3.0, -1.0)


# -- quartic norm --------------------------------------------------------------

def test_unit_pair_quartic():
    y = pair(1, 1)
    assert quad_norm4(y) == 6.0
    assert quad_norm4_pairing(y) == 6.0
    assert quad_pairing(y, y, y, y) == 6.0
    assert quad_norm4(zeros(7)) == 0.0


def test_pairing_with_zero_factor():
    y = pair(3, 5)
    assert quad_pairing(y, y, y, zeros(5)) == 0.0


@given(sequences(), st.floats(-5, 5))
def test_quartic_homogeneity(z, t):
    assert quad_norm4(t * z) == pytest.approx(t ** 4 * quad_norm4(z), rel=1e-12, abs=1e-300)


@given(sequences())
def test_two_quartic_routes_agree(z):
    a, b = quad_norm4(z), quad_norm4_pairing(z)
    assert abs(a - b) <= 1e-12 * max(a, 1e-300)


@given(sequences(), sequences(), sequences(), sequences())
def test_four_factor_holder(u, v, w, z):
    bound = quad_norm(u) * quad_norm(v) * quad_norm(w) * quad_norm(z)
    assert abs(quad_pairing(u, v, w, z)) <= bound * (1 + 1e-12) + 1e-12


@given(sequences())
def test_l2_below_quartic_norm(z):
    assert l2_norm(z) <= quad_norm(z) * (1 + 1e-12) + 1e-12


# -- l2 and h^nu ---------------------------------------------------------------

def test_unit_pair_norms():
    y = pair(1, 3)
    assert l2_norm(y) == pytest.approx(math.sqrt(2), abs=1e-15)
    for nu in (0.0, 0.1, 0.25, 0.4, 1.0):
        assert h_norm(y, nu) == pytest.approx(math.sqrt(2) * 2 ** (nu / 2), rel=1e-14)


@given(sequences())
def test_h0_is_l2(z):
    assert h_norm(z, 0.0) == pytest.approx(l2_norm(z), rel=1e-14, abs=1e-300)


def test_h_norm_rejects_negative_nu():
    with pytest.raises(InvalidInput):
        h_norm(pair(1, 1), -0.1)


# -- time-domain bridge --------------------------------------------------------

def test_zero_signal():
    assert not np.any(time_signal(zeros(9), np.linspace(0, 1, 10), 1.0))


@pytest.mark.parametrize("omega", [1.0, 0.5])
def test_time_domain_bridges(omega):
    rng = np.random.default_rng(7)
    T = 2 * math.pi / omega
    t = np.arange(4096) * T / 4096
    for _ in range(20):
        z = random_sequence(rng, 2 * int(rng.integers(0, 11)) + 1)
        s = time_signal(z, t, omega)
        l4 = T * np.sum(s ** 4) * T / 4096
        l2 = np.sum(s ** 2) * T / 4096
        assert l4 == pytest.approx(quad_norm4(z), rel=1e-8)
        assert l2 == pytest.approx(l2_norm(z) ** 2, rel=1e-8)
