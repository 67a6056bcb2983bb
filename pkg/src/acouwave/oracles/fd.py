"""
Finite-difference reference solver for the pressure-velocity system.

Collocated unknowns on the interior nodes of a uniform grid with spacing
``h``, homogeneous Dirichlet values on the boundary, second-order central
differences for Δ, ∇ and ∇·, and the implicit midpoint rule in time.  The
quadratic terms are handled by a Picard loop per step around a sparse LU
factorization of the constant left-hand side.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.integrate import trapezoid
from scipy.sparse.linalg import splu

from ..basis import RectDomain, SpectralGrid, evaluate
from ..errors import DimensionError, DomainError, OracleError
from ..fields import Trajectory
from ..nondim import IbvpCoefficients, field_values

__all__ = ["FDGrid", "FDResult", "fd_solve", "fd_gap"]


@dataclass(frozen=True)
class FDGrid:
    domain: RectDomain
    h: float

    def __post_init__(self):
        for L in self.domain.lengths:
            n = L / self.h
            if not self.h > 0 or abs(n - round(n)) > 1e-9 * n or round(n) < 2:
                raise DomainError(f"spacing {self.h} does not divide length {L}")

    @property
    def counts(self) -> tuple[int, ...]:
        """Interior nodes per axis."""
        return tuple(int(round(L / self.h)) - 1 for L in self.domain.lengths)

    @property
    def axes(self) -> tuple[np.ndarray, ...]:
        return tuple(self.h * np.arange(1, n + 1) for n in self.counts)

    @property
    def mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))


@dataclass
class FDResult:
    grid: FDGrid
    times: np.ndarray
    states: np.ndarray  # (N+1, n, *counts)
    picard_iterations: np.ndarray


def _operators(g: FDGrid):
    h, counts = g.h, g.counts
    eyes = [sp.identity(n, format="csr") for n in counts]
    d2 = [sp.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(n, n), format="csr") / h ** 2 for n in counts]
    d1 = [sp.diags([-1.0, 1.0], [-1, 1], shape=(n, n), format="csr") / (2 * h) for n in counts]

    def lift(mats, i):
        out = None
        for j in range(len(counts)):
            m = mats[j] if j == i else eyes[j]
            out = m if out is None else sp.kron(out, m, format="csr")
        return out

    lap = sum(lift(d2, i) for i in range(len(counts)))
    grad = [lift(d1, i) for i in range(len(counts))]
    return lap, grad


def fd_solve(coeffs: IbvpCoefficients, domain: RectDomain, h: float, times, f=None, u0=None,
             tol: float = 1e-10, max_picard: int = 60) -> FDResult:
    """Integrate the system on a uniform grid.

    :param f: physical forcing ``f(*points, t) -> (n, ...)`` or None
    :param u0: initial data ``u0(*points) -> (n, ...)``, an array on the interior nodes, or None
    :raises OracleError: when the Picard loop does not reach ``tol``
    """
    g = FDGrid(domain, h)
    times = np.asarray(times, float)
    if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0):
        raise DomainError("time grid must be strictly increasing with at least two nodes")
    d, M = domain.dim, g.size
    n = d + 1
    mesh = g.mesh
    shape = (n,) + g.counts
    e1, e2, e3, e4 = coeffs.eps

    lap, grad = _operators(g)
    one_g = sp.diags(1.0 + field_values(coeffs.gamma, g.axes).ravel())
    one_d = sp.diags(1.0 + field_values(coeffs.delta, g.axes).ravel())
    blocks = [[None] * n for _ in range(n)]
    blocks[0][0] = coeffs.mu * lap
    for i in range(d):
        blocks[0][1 + i] = -(one_g @ grad[i])
        blocks[1 + i][0] = -(one_d @ grad[i])
        blocks[1 + i][1 + i] = coeffs.eta * lap
        for k in range(d):
            if k != i:
                blocks[1 + i][1 + k] = sp.csr_matrix((M, M))
    L = sp.bmat(blocks, format="csc")
    eye = sp.identity(n * M, format="csc")

    def nonlinear(u):
        p, v = u[:M], u[M:].reshape(d, M)
        gp = [grad[i] @ p for i in range(d)]
        div = sum(grad[i] @ v[i] for i in range(d))
        out = np.empty_like(u)
        out[:M] = e1 * p * div + e2 * sum(gp[i] * v[i] for i in range(d))
        half = 0.5 * e3 * p * p - 0.5 * e4 * np.sum(v * v, axis=0)
        for i in range(d):
            out[M * (1 + i):M * (2 + i)] = -(grad[i] @ half)
        return out

    def forcing(t):
        if f is None:
            return np.zeros(n * M)
        return np.broadcast_to(np.asarray(f(*mesh, t), float), shape).reshape(-1)

    states = np.zeros((times.size,) + shape)
    if callable(u0):
        states[0] = np.broadcast_to(np.asarray(u0(*mesh), float), shape)
    elif u0 is not None:
        u0 = np.asarray(u0, float)
        if u0.shape != shape:
            raise DimensionError(f"initial data must have shape {shape}, got {u0.shape}")
        states[0] = u0

    linear = not any(coeffs.eps)
    factors = {}
    iters = np.zeros(times.size - 1, dtype=int)
    u = states[0].reshape(-1).copy()
    for k in range(times.size - 1):
        dt = times[k + 1] - times[k]
        key = round(dt, 14)
        if key not in factors:
            factors[key] = (splu(eye - 0.5 * dt * L), eye + 0.5 * dt * L)
        lu, rhs_mat = factors[key]
        base = rhs_mat @ u + dt * forcing(times[k] + 0.5 * dt)
        new = lu.solve(base)
        if not linear:
            for it in range(max_picard):
                nxt = lu.solve(base - dt * nonlinear(0.5 * (u + new)))
                change = np.abs(nxt - new).max()
                new = nxt
                if change <= tol * max(1.0, np.abs(new).max()):
                    iters[k] = it + 1
                    break
            else:
                raise OracleError(f"Picard loop stalled at t = {times[k]:.6g} (change {change:.3e})")
        u = new
        states[k + 1] = u.reshape(shape)
    return FDResult(g, times, states, iters)


def fd_gap(traj: Trajectory, fd: FDResult) -> float:
    """Relative space-time L² distance between a spectral trajectory and an FD result on the FD nodes."""
    if traj.times.shape != fd.times.shape or not np.allclose(traj.times, fd.times):
        raise DimensionError("spectral and finite-difference runs use different time grids")
    grid: SpectralGrid = traj.grid
    if grid.domain != fd.grid.domain:
        raise DimensionError("spectral and finite-difference runs use different domains")
    spec = np.stack([evaluate(grid, c, fd.grid.axes) for c in traj.states])
    axes = tuple(range(1, spec.ndim))
    diff = np.sum((spec - fd.states) ** 2, axis=axes)
    ref = np.sum(fd.states ** 2, axis=axes)
    num = trapezoid(diff, fd.times)
    den = trapezoid(ref, fd.times)
    return float(np.sqrt(num / den)) if den > 0 else float(np.sqrt(num))
