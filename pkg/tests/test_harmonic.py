import math

import numpy as np
import pytest

from pinnacle_lab.errors import ConfigError
from pinnacle_lab.harmonic import (KAPPA, DiscreteBall, asymptotic_I,
                                   conductance_identity_check, dirichlet_energy,
                                   exit_time, potential_kernel, round_profile,
                                   solve_dirichlet)


def test_ball_membership_is_closed_euclidean():
    assert len(DiscreteBall(1.2).sites) == 5       # origin + axis neighbors
    assert len(DiscreteBall(1.5).sites) == 9       # |(1,1)| = sqrt(2) <= 1.5
    ball = DiscreteBall(2.0)
    assert (0, 0) in ball.index
    assert all(x * x + y * y <= 4 for x, y in ball.sites)
    assert ball.boundary
    assert all((x, y) not in ball.index for x, y in ball.boundary)


def test_five_site_ball_solved_by_hand():
    # each axis neighbor: one neighbor at 1 (origin), three at 0 -> phi = 1/4;
    # I = 4 (3/4)^2 + 12 (1/4)^2 = 3
    profile = solve_dirichlet(1.2, 1.0)
    for s in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        assert profile.value(s) == pytest.approx(0.25, abs=1e-12)
    assert dirichlet_energy(profile) == pytest.approx(3.0, abs=1e-12)


def test_nine_site_ball_solved_by_hand():
    # with the diagonal sites included (|(1,1)| <= 1.5) the axis value is 1/3,
    # the diagonal value 1/6, and I = 8/3
    profile = solve_dirichlet(1.5, 1.0)
    assert profile.value((1, 0)) == pytest.approx(1 / 3, abs=1e-12)
    assert profile.value((1, 1)) == pytest.approx(1 / 6, abs=1e-12)
    assert dirichlet_energy(profile) == pytest.approx(8 / 3, abs=1e-12)


def test_zero_height_profile_is_identically_zero():
    profile = solve_dirichlet(6.0, 0.0)
    assert np.allclose(profile.values, 0.0)
    assert dirichlet_energy(profile) == 0.0


def test_linearity_and_quadratic_scaling():
    base = solve_dirichlet(8.0, 1.0)
    scaled = solve_dirichlet(8.0, 7.0)
    assert np.allclose(scaled.values, 7.0 * base.values, atol=1e-10)
    assert dirichlet_energy(scaled) == pytest.approx(
        49.0 * dirichlet_energy(base), rel=1e-12)


def test_maximum_principle_and_residual():
    profile = solve_dirichlet(10.0, 2.0)
    assert profile.values.min() >= -1e-13
    assert profile.values.max() <= 2.0 + 1e-13
    assert profile.harmonic_residual() < 1e-10


def test_energy_monotone_in_radius():
    energies = [dirichlet_energy(solve_dirichlet(r, 1.0))
                for r in (10, 20, 50, 100, 200)]
    assert all(a > b for a, b in zip(energies, energies[1:]))


def test_conductance_identity_small():
    direct, identity = conductance_identity_check(20.0, 1.0)
    assert identity == pytest.approx(direct, rel=1e-10)
    # h-scaling of the identity value is exactly quadratic
    d2, i2 = conductance_identity_check(20.0, 3.0)
    assert d2 == pytest.approx(9 * direct, rel=1e-12)
    assert i2 == pytest.approx(9 * identity, rel=1e-12)


def test_exit_time_value():
    m = exit_time(20.0)
    assert 400.0 <= m <= 400.0 + 10 * 20


def test_asymptotic_closed_form():
    # denominator constructed to equal 2 pi
    r = math.exp(2 * math.pi - KAPPA)
    assert asymptotic_I(r, 1.0) == pytest.approx(1.0, rel=1e-12)
    assert asymptotic_I(100.0, 10.0) == pytest.approx(
        200 * math.pi / (math.log(100.0) + KAPPA), rel=1e-14)
    assert asymptotic_I(100.0, 10.0) == pytest.approx(100.98, abs=0.01)
    with pytest.raises(ConfigError):
        asymptotic_I(1.0, 1.0)


def test_solver_tracks_asymptotics_at_moderate_radius():
    q = dirichlet_energy(solve_dirichlet(50.0, 1.0)) * (
        math.log(50.0) + KAPPA) / (2 * math.pi)
    assert abs(q - 1.0) <= 0.20


def test_hitting_probability_formula():
    """P_x(exit before hitting 0) matches (log|x|+kappa)/(log r+kappa) with
    fitted constant <= 5 against the (1/|x|^2 + 1/r)/log r error scale."""
    r = 50.0
    profile = solve_dirichlet(r, 1.0)
    worst = 0.0
    for (x, y) in profile.ball.sites:
        d = math.hypot(x, y)
        if d <= 1.0 or d >= r - 1.0:
            continue
        p_exit = 1.0 - profile.value((x, y))
        approx = (math.log(d) + KAPPA) / (math.log(r) + KAPPA)
        scale = (1.0 / d ** 2 + 1.0 / r) / math.log(r)
        worst = max(worst, abs(p_exit - approx) / scale)
    assert worst <= 5.0


def test_potential_kernel_small_window():
    table = potential_kernel(60)
    assert table.a(0, 0) == 0.0
    assert table.a(1, 0) == pytest.approx(1.0, abs=1e-3)
    # eight-fold symmetry
    vals = [table.a(3, 2), table.a(-3, 2), table.a(3, -2), table.a(-3, -2),
            table.a(2, 3), table.a(-2, 3), table.a(2, -3), table.a(-2, -3)]
    assert max(vals) - min(vals) < 1e-9
    # harmonic off the origin, unit source at it
    for (x, y) in ((2, 1), (5, 5), (10, 0)):
        lap = (table.a(x + 1, y) + table.a(x - 1, y) + table.a(x, y + 1)
               + table.a(x, y - 1)) / 4.0 - table.a(x, y)
        assert abs(lap) < 1e-9
    source = (table.a(1, 0) + table.a(-1, 0) + table.a(0, 1) + table.a(0, -1)) / 4.0
    assert source == pytest.approx(1.0, abs=1e-3)
    # known closed forms: a(1,1) = 4/pi, a(2,0) = 4 - 8/pi
    assert table.a(1, 1) == pytest.approx(4 / math.pi, abs=1e-3)
    assert table.a(2, 0) == pytest.approx(4 - 8 / math.pi, abs=1e-3)
    with pytest.raises(ConfigError):
        potential_kernel(4)


def test_round_profile_unit_peak():
    rounded = round_profile(solve_dirichlet(6.0, 1.0))
    assert rounded.support == {(0, 0)}
    assert rounded.values[(0, 0)] == 1
    assert rounded.energy == 4
    assert rounded.support_radius == 0.0


def test_round_profile_zero_peak():
    rounded = round_profile(solve_dirichlet(6.0, 0.0))
    assert rounded.support == set()
    assert rounded.energy == 0


def test_round_profile_energy_tracks_continuum_at_h64():
    h = 64
    r = h / math.log(h)
    profile = solve_dirichlet(r, float(h))
    rounded = round_profile(profile)
    ratio = rounded.energy / dirichlet_energy(profile)
    assert 0.65 <= ratio <= 1.35
    assert 0.0 < rounded.support_radius <= r
