from math import pi

import numpy as np
import pytest

from acouwave.basis import SpectralField, SpectralGrid, derivative, synth
from acouwave.errors import DimensionError, DomainError
from acouwave.fields import (Forcing, PVState, Trajectory, energy, norm_H1, norm_H2, norm_L2, x_norm, y_norm)

from conftest import random_state


def test_single_mode_norms(grid2d):
    p = SpectralField.mode(grid2d, (2, 1))
    s = PVState.from_fields(p, [SpectralField.zeros(grid2d)] * 2)
    lam = 5 * pi ** 2
    assert norm_L2(s) == pytest.approx(1.0)
    assert norm_H1(s) == pytest.approx(np.sqrt(1 + lam))
    assert norm_H2(s) == pytest.approx(np.sqrt(1 + lam + lam ** 2))
    assert energy(s, 1.0) == pytest.approx(0.5 * (1 + lam))


def test_zero_state(grid2d):
    z = PVState.zeros(grid2d)
    assert norm_L2(z) == norm_H1(z) == norm_H2(z) == energy(z, 2.0) == 0.0


def test_norms_against_quadrature(grid2d, rng):
    fine = grid2d.refined(4)
    for _ in range(5):
        c = rng.standard_normal((3,) + grid2d.modes)
        vals = synth(fine, c)
        l2 = np.sum(fine.weights * vals ** 2)
        grad = sum(np.sum(fine.weights * derivative(fine, c, i) ** 2) for i in range(2))
        s = PVState(grid2d, c)
        assert norm_L2(s) == pytest.approx(np.sqrt(l2), rel=1e-8)
        assert norm_H1(s) == pytest.approx(np.sqrt(l2 + grad), rel=1e-8)


def test_state_arithmetic_checks_grids(grid2d):
    other = SpectralGrid(grid2d.domain, (5, 5))
    with pytest.raises(DimensionError):
        PVState.zeros(grid2d) + PVState.zeros(other)
    with pytest.raises(DimensionError):
        PVState(grid2d, np.zeros((2,) + grid2d.modes))


def test_norm_homogeneity_and_triangle_inequality(grid2d):
    for seed in range(100):
        r = np.random.default_rng(seed)
        a, b = PVState(grid2d, r.standard_normal((3,) + grid2d.modes)), PVState(grid2d, r.standard_normal((3,) + grid2d.modes))
        t = r.uniform(-3, 3)
        for fn in (norm_L2, norm_H1, norm_H2):
            assert fn(a * t) == pytest.approx(abs(t) * fn(a), rel=1e-12)
            assert fn(a + b) <= fn(a) + fn(b) * (1 + 1e-14)


def test_energy_quadratic_and_monotone(grid2d, rng):
    s = PVState(grid2d, rng.standard_normal((3,) + grid2d.modes))
    assert energy(s * 2, 0.3) == pytest.approx(4 * energy(s, 0.3), rel=1e-14)
    assert energy(s, 0.2) < energy(s, 0.5)
    with pytest.raises(DomainError):
        energy(s, 0.0)


def _constant_trajectory(grid, c, times):
    states = np.broadcast_to(c, (len(times),) + c.shape)
    return Trajectory(grid, times, states, np.zeros_like(states))


def test_x_norm_constant_trajectory(grid2d):
    c = PVState.from_fields(SpectralField.mode(grid2d, (1, 1)), [SpectralField.zeros(grid2d)] * 2).coeffs
    rep = x_norm(_constant_trajectory(grid2d, c, np.linspace(0, 1, 5)))
    lam = 2 * pi ** 2
    assert rep.x1 == pytest.approx(1.0)
    assert rep.x2 == pytest.approx(np.sqrt(1 + lam + lam ** 2))
    assert rep.x3 == pytest.approx(np.sqrt(1 + lam))


def test_x_norm_zero_and_short(grid2d):
    rep = x_norm(Trajectory.zeros(grid2d, [0.0, 0.5, 1.0]))
    assert rep.x == rep.x1 == rep.x2 == rep.x3 == 0.0
    with pytest.raises(DomainError):
        x_norm(Trajectory.zeros(grid2d, [0.0]))


def test_x_norm_components_ordered(grid2d, rng):
    for _ in range(20):
        times = np.sort(rng.uniform(0, 2, 6))
        tr = Trajectory(grid2d, times, random_state(rng, grid2d, lead=(6,)), random_state(rng, grid2d, lead=(6,)))
        rep = x_norm(tr)
        assert rep.x >= max(rep.x1, rep.x2, rep.x3)
        assert rep.x_tilde <= rep.x


def test_x2_trapezoid_order(grid1d):
    mode = np.zeros((2,) + grid1d.modes)
    mode[0, 0] = 1.0
    vals = []
    for n in (8, 16, 32, 64):
        times = np.linspace(0, 1, n + 1)
        states = np.cos(2 * times)[:, None, None] * mode
        vals.append(x_norm(Trajectory(grid1d, times, states, np.zeros_like(states))).x2)
    lam = pi ** 2
    exact = np.sqrt((1 + lam + lam ** 2) * (0.5 + np.sin(4.0) / 8.0))
    errs = np.abs(np.array(vals) - exact)
    assert np.allclose(np.log2(errs[:-1] / errs[1:]), 2.0, atol=0.05)


def test_y_norm_examples(grid2d, rng):
    u0 = PVState(grid2d, rng.standard_normal((3,) + grid2d.modes))
    times = np.linspace(0, 2.5, 11)
    assert y_norm(None, u0) == pytest.approx(norm_H1(u0))
    assert y_norm(Forcing.zero(grid2d), u0, times) == pytest.approx(norm_H1(u0))
    unit = np.zeros((3,) + grid2d.modes)
    unit[1, 2, 3] = 1.0
    f = Forcing(grid2d, lambda t: unit)
    assert y_norm(f, PVState.zeros(grid2d), times) == pytest.approx(np.sqrt(2.5), rel=1e-14)
    both = y_norm(f, u0, times) ** 2
    assert both == pytest.approx(y_norm(f, PVState.zeros(grid2d), times) ** 2 + y_norm(None, u0) ** 2, rel=1e-14)


def test_y_norm_grid_mismatch(grid2d):
    other = SpectralGrid(grid2d.domain, 3)
    with pytest.raises(DimensionError):
        y_norm(Forcing(other, lambda t: np.ones((3, 3, 3))), PVState.zeros(grid2d), [0.0, 1.0])
