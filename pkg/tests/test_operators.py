from math import pi

import numpy as np
import pytest

from acouwave.basis import RectDomain, SpectralGrid, derivative, project, synth
from acouwave.constants import estimate_constants
from acouwave.errors import DimensionError
from acouwave.fields import Forcing, Trajectory, sq_grad, sq_L2, x_norm, y_norm
from acouwave.linear_solver import solve_linearized
from acouwave.nondim import IbvpCoefficients
from acouwave.operators import ModelOperator, apply_A, apply_B, apply_Fprime, f_tilde, residual, residual_norm

from conftest import random_state


@pytest.fixture(scope="module")
def op2d():
    grid = SpectralGrid(RectDomain((1.0, 1.0)), (5, 4))
    return ModelOperator(grid, IbvpCoefficients(mu=0.1, eta=0.15, eps=(0.03, 0.01, 0.02, 0.01)))


def _random_traj(rng, grid, times):
    return Trajectory(grid, times, random_state(rng, grid, lead=(len(times),)),
                      random_state(rng, grid, lead=(len(times),)))


def test_apply_A_on_single_pressure_mode():
    grid = SpectralGrid(RectDomain((1.0, 1.0)), 4)
    op = ModelOperator(grid, IbvpCoefficients(mu=0.2, eta=0.1))
    s = np.zeros(op.state_shape)
    s[0, 1, 0] = 1.0
    out = apply_A(op, s)
    assert out[0] == pytest.approx(-0.2 * 5 * pi ** 2 * s[0])
    # velocity rows hold -P grad p, i.e. <-(d/dx_i) sigma_(2,1), sigma_k>
    for i in range(2):
        exact = -derivative(grid, s[0], i)
        ref = (grid.axes[0].proj @ exact @ grid.axes[1].proj.T)
        assert np.abs(out[1 + i] - ref).max() <= 1e-12
    assert not apply_A(op, np.zeros(op.state_shape)).any()


def test_apply_A_one_mode_interval():
    grid = SpectralGrid(RectDomain((1.0,)), 1)
    op = ModelOperator(grid, IbvpCoefficients(mu=0.1, eta=0.3))
    out = apply_A(op, np.array([[1.0], [0.0]]))
    assert out[0, 0] == pytest.approx(-0.1 * pi ** 2, rel=1e-14)
    assert abs(out[1, 0]) <= 1e-14


def test_apply_B_bilinearity(op2d, rng):
    u, w, z = (random_state(rng, op2d.grid) for _ in range(3))
    zero = np.zeros(op2d.state_shape)
    assert not apply_B(op2d, zero, w).any() and not apply_B(op2d, u, zero).any()
    assert np.abs(apply_B(op2d, 2 * u, w) - 2 * apply_B(op2d, u, w)).max() <= 1e-12
    lhs = apply_B(op2d, u + 3 * z, w)
    assert np.abs(lhs - apply_B(op2d, u, w) - 3 * apply_B(op2d, z, w)).max() <= 1e-12
    lhs = apply_B(op2d, u, w - z)
    assert np.abs(lhs - apply_B(op2d, u, w) + apply_B(op2d, u, z)).max() <= 1e-12


def test_apply_B_matches_strong_form(op2d, rng):
    # B projected from the nodes equals the quadrature projection of the closed-form products
    g = op2d.grid
    u, w = random_state(rng, g), random_state(rng, g)
    e1, e2, e3, e4 = op2d.coeffs.eps
    p, v = synth(g, u[0]), synth(g, u[1:])
    q, ww = synth(g, w[0]), synth(g, w[1:])
    div_w = sum(derivative(g, w[1 + i], i) for i in range(2))
    nodal_p = e1 * p * div_w + e2 * sum(derivative(g, w[0], i) * v[i] for i in range(2))
    dpq = [derivative(g, u[0], i) * q + p * derivative(g, w[0], i) for i in range(2)]
    dvw = [sum(derivative(g, u[1 + k], i) * ww[k] + v[k] * derivative(g, w[1 + k], i) for k in range(2))
           for i in range(2)]
    expected = np.stack([project(g, nodal_p)] + [project(g, -0.5 * e3 * dpq[i] + 0.5 * e4 * dvw[i]) for i in range(2)])
    assert np.abs(apply_B(op2d, u, w) - expected).max() <= 1e-12 * np.abs(expected).max()


def test_state_shape_mismatch(op2d):
    with pytest.raises(DimensionError):
        apply_A(op2d, np.zeros((3, 4, 4)))


def test_zero_residual(op2d):
    traj = Trajectory.zeros(op2d.grid, np.linspace(0, 1, 5))
    defect, init = residual(op2d, traj)
    assert not defect.any() and not init.any()
    assert residual_norm(op2d, traj) == 0.0


def test_linear_solver_trajectory_has_small_residual(rng):
    grid = SpectralGrid(RectDomain((1.0, 1.0)), 5)
    op = ModelOperator(grid, IbvpCoefficients(mu=0.1, eta=0.1, gamma=0.02, delta=-0.01))
    u0 = random_state(rng, grid, 1.5)
    shape = random_state(rng, grid, 1.5)
    f = Forcing.separable(grid, shape, lambda t: np.cos(2 * t))
    times = np.linspace(0, 1, 33)
    traj = solve_linearized(op, None, f, u0, times)
    defect, init = residual(op, traj, f, u0)
    assert np.abs(defect).max() <= 1e-9 * np.abs(traj.dt_states).max()
    assert not init.any()


def test_skew_cancellation(rng):
    grid = SpectralGrid(RectDomain((1.0, 2.0)), (6, 5))
    op = ModelOperator(grid, IbvpCoefficients(mu=0.1, eta=0.25))
    for _ in range(10):
        u = rng.standard_normal(op.state_shape)
        lhs = np.sum(apply_A(op, u) * u)
        rhs = -0.1 * sq_grad(grid, u[:1]) - 0.25 * sq_grad(grid, u[1:])
        assert lhs == pytest.approx(rhs, rel=1e-9)


def test_fprime_at_zero_is_linear_part(op2d, rng):
    times = np.linspace(0, 1, 4)
    h = _random_traj(rng, op2d.grid, times)
    defect, init = apply_Fprime(op2d, Trajectory.zeros(op2d.grid, times), h)
    assert np.abs(defect - (h.dt_states - apply_A(op2d, h.states))).max() <= 1e-13
    assert np.array_equal(init, h.states[0])


def test_fprime_rejects_misaligned(op2d, rng):
    a = Trajectory.zeros(op2d.grid, np.linspace(0, 1, 4))
    b = Trajectory.zeros(op2d.grid, np.linspace(0, 1, 5))
    with pytest.raises(DimensionError):
        apply_Fprime(op2d, a, b)


def test_f_tilde_examples(op2d, rng):
    g = op2d.grid
    times = np.linspace(0, 1, 5)
    base = Forcing.separable(g, random_state(rng, g), np.exp)
    u0 = random_state(rng, g)
    f0, init = f_tilde(op2d, None, base, u0)
    assert f0 is base and np.array_equal(init, u0)
    ustar = _random_traj(rng, g, times)
    f1, _ = f_tilde(op2d, ustar, base, None)
    f2, _ = f_tilde(op2d, ustar.scaled(2.0), base, None)
    for t in (0.0, 0.3, 1.0):
        assert np.abs((f2(t) - base(t)) - 4 * (f1(t) - base(t))).max() <= 1e-12 * np.abs(f2(t)).max()


def test_f_tilde_data_bound(rng):
    grid = SpectralGrid(RectDomain((1.0, 1.0)), 5)
    coeffs = IbvpCoefficients(mu=0.1, eta=0.1, eps=0.05)
    ledger = estimate_constants(grid, coeffs, rng=1)
    op = ModelOperator(grid, coeffs, ledger)
    times = np.linspace(0, 1, 9)
    for _ in range(20):
        ustar = _random_traj(rng, grid, times)
        base = Forcing.separable(grid, random_state(rng, grid), np.cos)
        u0 = random_state(rng, grid)
        ft, init = f_tilde(op, ustar, base, u0)
        lhs = y_norm(ft, init, times, grid=grid) ** 2
        f_norm = y_norm(base, np.zeros_like(u0), times, grid=grid)
        rhs = (ledger.K * x_norm(ustar).x ** 2 + f_norm) ** 2 + y_norm(None, u0, grid=grid) ** 2
        assert lhs <= rhs


def test_residual_of_projected_smooth_field_small(rng):
    """Residual with its own forcing vanishes; with a perturbed trajectory it equals the perturbation."""
    grid = SpectralGrid(RectDomain((1.0,)), 6)
    op = ModelOperator(grid, IbvpCoefficients(mu=0.1, eta=0.1, eps=0.02))
    times = np.linspace(0, 1, 7)
    traj = _random_traj(rng, grid, times)
    defect, _ = residual(op, traj)
    f = defect.copy()
    defect2, init = residual(op, traj, f, traj.states[0])
    assert np.abs(defect2).max() <= 1e-14 and not init.any()
    assert np.sqrt(np.sum(sq_L2(grid, defect))) > 0
