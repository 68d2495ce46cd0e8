import csv
import math

import numpy as np
import pytest

from breather.errors import InvalidInput, MissingProfile, QuadratureNonConvergence, TailUnderflow
from breather.floquet import mode_table
from breather.functional import directional_derivative, eta_table
from breather.reconstruct import (assemble, check_antiperiodicity, default_bank, default_x_max, fit_decay,
                                  gaussian_bank, parseval_check, profile_bank, regularity_diagnostic,
                                  time_grid, weak_residual, write_field_csv, x_grid)
from breather.seqspace import OddSequence, h_norm, l2_norm, pair, time_signal, zeros
from breather.solver import SolveConfig, minimize, seed_point


@pytest.fixture(scope="module")
def step_run(step):
    spec = eta_table(step, -1.0, 41)
    res = minimize(spec, SolveConfig(N=41))
    return spec, res, mode_table(step, step.lattice(41))


@pytest.fixture(scope="module")
def periodic_run(periodic):
    spec = eta_table(periodic, 1.0, 41)
    res = minimize(spec, SolveConfig(N=41))
    return spec, res, mode_table(periodic, periodic.lattice(41))


# -- assembly ------------------------------------------------------------------

def test_zero_field(step):
    f = assemble(zeros(9), mode_table(step, step.lattice(9)), [0.0, 1.0], time_grid(1.0, 8), 1.0)
    assert not np.any(f.values) and f.max_abs() == 0.0


def test_field_properties(step_run, step):
    _, res, prof = step_run
    x = x_grid(step, x_max=12.0)
    t = time_grid(step.omega, 32)
    T = 2 * math.pi / step.omega
    f = assemble(res.alpha, prof, x, t, step.omega, check_real=True)
    assert f.imag_residue < 1e-12
    assert np.array_equal(f.values, f.values[::-1])  # x grid is mirrored, w even in x
    shifted = assemble(res.alpha, prof, x, t + T, step.omega)
    assert np.max(np.abs(shifted.values - f.values)) < 1e-12 * f.max_abs()


def test_single_pair_trace(periodic):
    prof = mode_table(periodic, periodic.lattice(9))
    omega = periodic.omega
    T = 2 * math.pi / omega
    t = np.linspace(0, T, 101)
    for k0 in (1, 5):
        w0 = assemble(pair(k0, 9), prof, [0.0], t, omega).values[0]
        assert np.allclose(w0, 2 / (k0 * math.sqrt(T)) * np.cos(omega * k0 * t), atol=1e-15)
        assert np.max(np.abs(w0)) == pytest.approx(2 / (k0 * math.sqrt(T)), rel=1e-12)


def test_time_derivative_convention(step_run, step):
    _, res, prof = step_run
    t = np.linspace(0, 2 * math.pi, 17)
    h = 1e-5
    wp = assemble(res.alpha, prof, [0.0], t + h, 1.0).values[0]
    wm = assemble(res.alpha, prof, [0.0], t - h, 1.0).values[0]
    assert np.allclose((wp - wm) / (2 * h), -time_signal(res.alpha, t, 1.0), atol=1e-7)


def test_missing_profile(step):
    with pytest.raises(MissingProfile):
        assemble(pair(3, 3), mode_table(step, [1]), [0.0], [0.0], 1.0)


def test_x_grid_has_interfaces(periodic):
    x = x_grid(periodic, x_max=20.0)
    assert np.allclose(x, -x[::-1])
    for p in periodic.interfaces(20.0):
        assert np.min(np.abs(x - p)) < 1e-12


# -- antiperiodicity -----------------------------------------------------------

def test_odd_harmonics_are_half_antiperiodic(step_run, step):
    _, res, prof = step_run
    x = np.linspace(-10, 10, 41)
    t = time_grid(1.0, 32)
    assert check_antiperiodicity(res.alpha, prof, x, t, 1.0, 1) < 1e-12


def test_symmetric_solve_antiperiodic(periodic):
    spec = eta_table(periodic, 1.0, 45, r=3)
    res = minimize(spec, SolveConfig(N=45, r=3))
    prof = mode_table(periodic, periodic.lattice(45, 3))
    x = np.linspace(-30, 30, 61)
    t = time_grid(periodic.omega, 64)
    norm = assemble(res.alpha, prof, x, t, periodic.omega).max_abs()
    assert check_antiperiodicity(res.alpha, prof, x, t, periodic.omega, 3) < 1e-10 * norm


def test_planted_violation_detected(periodic):
    alpha = OddSequence.from_dict(9, {3: 1.0, 1: 0.5})
    prof = mode_table(periodic, [1, 3, 5, 7, 9])
    x = np.linspace(-5, 5, 21)
    t = time_grid(periodic.omega, 64)
    norm = assemble(alpha, prof, x, t, periodic.omega).max_abs()
    assert check_antiperiodicity(alpha, prof, x, t, periodic.omega, 3) > 0.1 * norm


# -- decay ---------------------------------------------------------------------

def test_step_decay_fit(step_run, step):
    _, res, prof = step_run
    x = np.linspace(0, default_x_max(step), 4001)
    f = assemble(res.alpha, prof, x, time_grid(1.0, 64), 1.0)
    fit = fit_decay(f, step)
    assert fit.rho_fit >= 0.45
    assert fit.rho_theory == 0.5
    assert np.all(np.abs(f.values) <= 1.1 * fit.bound(x)[:, None] + 1e-300)


def test_periodic_decay_fit(periodic_run, periodic):
    _, res, prof = periodic_run
    x = np.linspace(0, default_x_max(periodic), 4001)
    f = assemble(res.alpha, prof, x, time_grid(periodic.omega, 64), periodic.omega)
    fit = fit_decay(f, periodic)
    assert fit.rho_fit >= 0.9 * math.log(9) / (4 * math.pi)
    assert np.all(np.abs(f.values) <= 1.1 * fit.bound(x)[:, None] + 1e-300)


def test_zero_field_underflows(step):
    f = assemble(zeros(5), mode_table(step, [1, 3, 5]), np.linspace(0, 10, 11), [0.0, 1.0], 1.0)
    with pytest.raises(TailUnderflow):
        fit_decay(f, step)


# -- weak formulation ----------------------------------------------------------

def test_weak_residual_zero_field(step):
    prof = mode_table(step, step.lattice(5))
    rep = weak_residual(zeros(5), prof, step, -1.0, default_bank(step, 5))
    assert not np.any(rep.direct) and not np.any(rep.reduced)


def test_weak_residual_at_minimizer(step_run, step):
    _, res, prof = step_run
    rep = weak_residual(res.alpha, prof, step, -1.0)
    assert rep.ks.size == 3 * 21 + 21
    assert rep.max_relative() <= 1e-6
    assert rep.max_path_gap() <= 1e-6
    assert np.all(np.isfinite(rep.direct))


def test_weak_residual_profile_bank(periodic_run, periodic):
    _, res, prof = periodic_run
    rep = weak_residual(res.alpha, prof, periodic, 1.0, profile_bank(periodic, [1, 3, 5, 7]))
    assert rep.max_relative() <= 1e-6 and rep.max_path_gap() <= 1e-6


def test_weak_residual_at_seed_matches_gradient(step):
    spec = eta_table(step, -1.0, 9)
    _, seed = seed_point(spec, 1)
    prof = mode_table(step, step.lattice(9))
    bank = gaussian_bank(step, [1, 3, 5], factors=(1.0,))
    rep = weak_residual(seed, prof, step, -1.0, bank)
    T, omega, gamma = 2 * math.pi, 1.0, -1.0
    for i, tf in enumerate(bank):
        y = pair(tf.k, 9, float(tf.value(np.array([0.0]))[0]))
        expect = -(gamma * omega ** 4 / T) * directional_derivative(spec, seed, y)
        assert rep.reduced[i] == pytest.approx(expect, rel=1e-8, abs=1e-12)
        assert rep.direct[i] == pytest.approx(rep.reduced[i], rel=1e-6, abs=1e-10)
    # the seed is critical along its own pair but not at 3 k0
    assert abs(rep.reduced[0]) < 1e-12 and abs(rep.reduced[1]) > 1e-2


def test_out_of_band_tests_reported(step):
    prof = mode_table(step, step.lattice(5))
    alpha = pair(1, 5, 0.5)
    bank = gaussian_bank(step, [1, 7], factors=(1.0,))
    rep = weak_residual(alpha, prof, step, -1.0, bank)
    assert rep.in_band.tolist() == [True, False]


def test_coarse_panels_flagged(step_run, step):
    _, res, prof = step_run
    with pytest.raises(QuadratureNonConvergence):
        weak_residual(res.alpha, prof, step, -1.0, gaussian_bank(step, [41], factors=(0.5,)), h=2.0)


@pytest.mark.parametrize("name", ["step", "periodic", "dirichlet"])
def test_parseval_bridge(name, request):
    medium = request.getfixturevalue(name)
    bank = default_bank(medium, 9, include_profiles=False)
    assert np.max(parseval_check(medium, bank)) < 1e-6


# -- regularity and export -----------------------------------------------------

def test_regularity_single_pair():
    t, k0 = 1.7, 5
    out = regularity_diagnostic(pair(k0, 9, t), [0.0, 0.1, 0.2, 0.45])
    for row in out["rows"]:
        assert row.h_norm == pytest.approx(math.sqrt(2) * (1 + k0 ** 2) ** (row.nu / 2) * t, rel=1e-14)
    assert out["rows"][0].h_norm == pytest.approx(l2_norm(pair(k0, 9, t)))


def test_regularity_tail_exponent():
    ks = np.arange(1, 82, 2)
    z = OddSequence(81, ks ** -2.0)
    assert regularity_diagnostic(z, [0.2])["tail_exponent"] == pytest.approx(-2.0, abs=1e-12)


def test_regularity_rejects_large_nu():
    with pytest.raises(InvalidInput):
        regularity_diagnostic(pair(1, 1), [0.5])


def test_regularity_lower_nu_stabilizes_earlier(step):
    spec = eta_table(step, -1.0, 81)
    from breather.solver import continue_in_N
    stages = continue_in_N(spec, SolveConfig(N=81, N_schedule=(21, 41, 81)))
    rel = {}
    for nu in (0.2, 0.45):
        vals = [h_norm(s.alpha, nu) for s in stages]
        rel[nu] = abs(vals[-1] - vals[-2]) / vals[-1]
    assert rel[0.2] <= rel[0.45]


def test_field_csv(tmp_path, step_run, step):
    _, res, prof = step_run
    f = assemble(res.alpha, prof, [-1.0, 0.0, 1.0], time_grid(1.0, 4), 1.0)
    path = tmp_path / "field.csv"
    write_field_csv(f, path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["x", "t", "w"]
    assert len(rows) == 1 + 3 * 4
    assert float(rows[5][2]) == f.values[1, 0]
