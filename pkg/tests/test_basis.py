from math import pi, sqrt

import numpy as np
import pytest

from acouwave.basis import (RectDomain, SpectralField, SpectralGrid, analyze, derivative, divergence, eigenvalue,
                            gradient, laplacian, project, synth)
from acouwave.constants import estimate_constants, estimate_cQ
from acouwave.errors import DimensionError, DomainError
from acouwave.nondim import IbvpCoefficients


@pytest.mark.parametrize("k, L, expected", [
    ((1, 1), (1.0, 1.0), 2 * pi ** 2),
    ((1,), (1.0,), pi ** 2),
    ((2, 3), (1.0, 2.0), 4 * pi ** 2 + 9 * pi ** 2 / 4),
])
def test_eigenvalue(k, L, expected):
    assert eigenvalue(k, RectDomain(L)) == pytest.approx(expected, rel=1e-15)
    assert eigenvalue((1, 1), RectDomain((1.0, 1.0))) == pytest.approx(19.7392, abs=1e-4)


@pytest.mark.parametrize("k", [(0, 1), (1, -2)])
def test_eigenvalue_rejects_bad_index(k):
    with pytest.raises(DomainError):
        eigenvalue(k, RectDomain((1.0, 1.0)))


def test_eigenvalues_increase_with_index(grid2d):
    lam = grid2d.eigenvalues
    assert np.all(np.diff(lam, axis=0) > 0) and np.all(np.diff(lam, axis=1) > 0)


@pytest.mark.parametrize("lengths", [(0.0,), (1.0, -1.0), (1.0, 1.0, 1.0, 1.0)])
def test_domain_invariants(lengths):
    with pytest.raises(DomainError):
        RectDomain(lengths)


def test_grid_needs_dealiasing_nodes():
    with pytest.raises(DomainError):
        SpectralGrid(RectDomain((1.0,)), 8, 11)
    assert SpectralGrid(RectDomain((1.0,)), 8, 12).quad_nodes == (12,)


def test_single_mode_round_trip(grid2d):
    e1 = SpectralField.mode(grid2d, (1, 1)).coeffs
    assert np.abs(analyze(grid2d, synth(grid2d, e1)) - e1).max() <= 1e-12
    assert not analyze(grid2d, np.zeros(grid2d.node_shape)).any()


def test_random_round_trip_over_seeds():
    grid = SpectralGrid(RectDomain((1.0, 1.5)), (7, 9))
    worst = 0.0
    for seed in range(100):
        c = np.random.default_rng(seed).standard_normal(grid.modes)
        worst = max(worst, np.abs(analyze(grid, synth(grid, c)) - c).max())
    assert worst <= 1e-10


def test_sample_shape_mismatch(grid2d):
    with pytest.raises(DimensionError):
        analyze(grid2d, np.zeros((3, 3)))
    with pytest.raises(DimensionError):
        synth(grid2d, np.zeros((5, 6)))


def test_laplacian_of_mode(grid2d):
    f = SpectralField.mode(grid2d, (3, 2))
    lam = eigenvalue((3, 2), grid2d.domain)
    assert np.allclose(f.laplacian().coeffs, -lam * f.coeffs, rtol=0, atol=1e-12)


def test_divergence_of_gradient_is_laplacian(rng):
    grid = SpectralGrid(RectDomain((1.0, 2.0)), (6, 7))
    c = rng.standard_normal(grid.modes)
    # the gradient is a cosine series, so its divergence is taken term-wise on the nodes
    lap_nodes = sum(derivative(grid, c, i, order=2) for i in range(grid.dim))
    ref = synth(grid, laplacian(grid, c))
    scale = np.abs(ref).max()
    assert np.abs(lap_nodes - ref).max() <= 1e-10 * scale
    assert gradient(grid, c).shape == (2,) + grid.node_shape


def test_divergence_on_nodes_matches_term_wise_derivatives(grid2d, rng):
    v = rng.standard_normal((2,) + grid2d.modes)
    x, y = grid2d.nodes
    exact = np.zeros(grid2d.node_shape)
    for (i, j), a in np.ndenumerate(v[0]):
        kx, ky = (i + 1) * pi, (j + 1) * pi
        exact += a * 2 * kx * np.cos(kx * x) * np.sin(ky * y)
    for (i, j), a in np.ndenumerate(v[1]):
        kx, ky = (i + 1) * pi, (j + 1) * pi
        exact += a * 2 * ky * np.sin(kx * x) * np.cos(ky * y)
    assert np.abs(divergence(grid2d, v) - exact).max() <= 1e-10 * np.abs(exact).max()


def test_gradient_of_zero(grid2d):
    assert not gradient(grid2d, np.zeros(grid2d.modes)).any()


def test_projection_properties(grid2d, rng):
    c = rng.standard_normal(grid2d.modes)
    assert np.abs(project(grid2d, synth(grid2d, c)) - c).max() <= 1e-10
    # a mode one step outside the band is orthogonal to every retained mode
    x, y = grid2d.nodes
    outside = 2 * np.sin(7 * pi * x) * np.sin(2 * pi * y)
    assert np.abs(project(grid2d, outside)).max() <= 1e-10
    # idempotence and L2 contraction on an arbitrary function
    s = np.exp(x) * np.cos(3 * y) + x * y
    p1 = project(grid2d, s)
    assert np.abs(project(grid2d, synth(grid2d, p1)) - p1).max() <= 1e-10
    norm_s = np.sqrt(np.sum(grid2d.weights * s * s))
    assert np.linalg.norm(p1) <= norm_s


def test_parseval(grid2d, rng):
    c = rng.standard_normal(grid2d.modes)
    vals = synth(grid2d, c)
    assert np.sqrt(np.sum(grid2d.weights * vals ** 2)) == pytest.approx(np.linalg.norm(c), rel=1e-10)


def test_unit_square_ledger():
    grid = SpectralGrid(RectDomain((1.0, 1.0)), 4)
    ledger = estimate_constants(grid, IbvpCoefficients(mu=0.1, eta=0.1, eps=0.01), rng=0)
    assert ledger.lambda_min == pytest.approx(2 * pi ** 2, rel=1e-15)
    assert ledger.cP == pytest.approx(1 / (pi * sqrt(2)), rel=1e-14)
    assert ledger.cP * sqrt(ledger.lambda_min) == pytest.approx(1.0, abs=1e-12)
    assert ledger.r_tilde == pytest.approx(pi ** 2 / 10, rel=1e-13)
    assert ledger.lower_bounds
    for name in ("cQ", "cR", "cS", "cDelta", "cB", "C2", "cG", "r"):
        assert getattr(ledger, name) > 0


def test_ledger_frozen_values():
    # frozen from a seeded run; they are lower bounds of the true embedding constants
    grid = SpectralGrid(RectDomain((1.0, 1.0)), 8)
    ledger = estimate_constants(grid, IbvpCoefficients(mu=0.1, eta=0.1, eps=0.01), rng=0)
    assert ledger.cQ == pytest.approx(0.28524429565, rel=1e-6)
    assert ledger.cR == pytest.approx(0.23359500399, rel=1e-6)
    assert ledger.cB == pytest.approx(0.37692548936, rel=1e-6)
    assert ledger.cG == pytest.approx(1531.1845068, rel=1e-9)


def test_cQ_grows_with_cutoff():
    dom = RectDomain((1.0, 1.0))
    values, warm = [], None
    for m in (2, 4, 8):
        val, warm = estimate_cQ(SpectralGrid(dom, m), np.random.default_rng(0), 4, warm)
        values.append(val)
    assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))
