r"""
Pressure-velocity states, time trajectories and the norms used by the estimates.

A state :math:`u = (p, v_1, \dots, v_d)` is stored as one coefficient array of
shape ``(n, m_1, ..., m_d)`` with ``n = d + 1``; component 0 is the pressure.
All spatial norms are evaluated exactly on the eigenbasis:

* :math:`\|u\|_{L^2}^2 = \sum c^2`
* :math:`\|u\|_{H^1}^2 = \sum (1 + \Lambda_k) c^2`
* :math:`\|u\|_{H^2}^2 = \sum (1 + \Lambda_k + \Lambda_k^2) c^2`, i.e.
  :math:`\|u\|^2 + \|\nabla u\|^2 + \|\Delta u\|^2`.

Time integrals use the trapezoidal rule on the trajectory nodes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import trapezoid

from .basis import SpectralField, SpectralGrid, project
from .errors import DimensionError, DomainError

__all__ = [
    "PVState",
    "Trajectory",
    "Forcing",
    "XNormReport",
    "norm_L2",
    "norm_H1",
    "norm_H2",
    "x_norm",
    "y_norm",
    "energy",
]


def _spatial_axes(grid: SpectralGrid, c: np.ndarray) -> tuple[int, ...]:
    """Component axis plus the spatial axes (the trailing ``d + 1`` axes)."""
    return tuple(range(c.ndim - grid.dim - 1, c.ndim))


def sq_L2(grid: SpectralGrid, c: np.ndarray) -> np.ndarray:
    return np.sum(c * c, axis=_spatial_axes(grid, c))


def sq_grad(grid: SpectralGrid, c: np.ndarray) -> np.ndarray:
    return np.sum(grid.eigenvalues * c * c, axis=_spatial_axes(grid, c))


def sq_lap(grid: SpectralGrid, c: np.ndarray) -> np.ndarray:
    lam = grid.eigenvalues
    return np.sum(lam * lam * c * c, axis=_spatial_axes(grid, c))


def sq_H1(grid, c):
    return sq_L2(grid, c) + sq_grad(grid, c)


def sq_H2(grid, c):
    return sq_L2(grid, c) + sq_grad(grid, c) + sq_lap(grid, c)


@dataclass(frozen=True)
class PVState:
    """Coefficients of :math:`(p, v)` on one grid, shape ``(d + 1, *modes)``."""

    grid: SpectralGrid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        g = self.grid
        c = g.check_coeffs(self.coeffs, lead=1)
        if c.shape[0] != g.n_components:
            raise DimensionError(f"state needs {g.n_components} components, got {c.shape[0]}")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, grid: SpectralGrid) -> "PVState":
        return cls(grid, np.zeros((grid.n_components,) + grid.modes))

    @classmethod
    def from_fields(cls, p: SpectralField, v) -> "PVState":
        grid = p.grid
        if len(v) != grid.dim or any(not vi.grid.same_basis(grid) for vi in v):
            raise DimensionError("velocity components must live on the pressure grid")
        return cls(grid, np.stack([p.coeffs] + [vi.coeffs for vi in v]))

    @classmethod
    def from_function(cls, grid: SpectralGrid, func) -> "PVState":
        """Project ``func(*nodes)`` (returning ``(n, *quad_nodes)`` samples) onto the basis."""
        vals = np.asarray(func(*grid.nodes), dtype=float)
        return cls(grid, project(grid, np.broadcast_to(vals, (grid.n_components,) + grid.node_shape)))

    @property
    def p(self) -> SpectralField:
        return SpectralField(self.grid, self.coeffs[0])

    @property
    def v(self) -> list[SpectralField]:
        return [SpectralField(self.grid, c) for c in self.coeffs[1:]]

    def _wrap(self, other):
        if isinstance(other, PVState):
            if not other.grid.same_basis(self.grid):
                raise DimensionError("states live on different grids")
            return other.coeffs
        return other

    def __add__(self, other):
        return PVState(self.grid, self.coeffs + self._wrap(other))

    def __sub__(self, other):
        return PVState(self.grid, self.coeffs - self._wrap(other))

    def __mul__(self, a: float):
        return PVState(self.grid, a * self.coeffs)

    __rmul__ = __mul__

    def __neg__(self):
        return PVState(self.grid, -self.coeffs)


def _coeffs_of(s, grid=None) -> tuple[SpectralGrid, np.ndarray]:
    if isinstance(s, PVState):
        return s.grid, s.coeffs
    if grid is None:
        raise DimensionError("a grid is needed to interpret a raw coefficient array")
    return grid, grid.check_coeffs(s)


def norm_L2(s: PVState, grid: SpectralGrid | None = None) -> float:
    """L² norm by Parseval."""
    g, c = _coeffs_of(s, grid)
    return float(np.sqrt(sq_L2(g, c)))


def norm_H1(s: PVState, grid: SpectralGrid | None = None) -> float:
    """:math:`(\\|u\\|^2 + \\|\\nabla u\\|^2)^{1/2}` summed over components."""
    g, c = _coeffs_of(s, grid)
    return float(np.sqrt(sq_H1(g, c)))


def norm_H2(s: PVState, grid: SpectralGrid | None = None) -> float:
    """:math:`(\\|u\\|^2 + \\|\\nabla u\\|^2 + \\|\\Delta u\\|^2)^{1/2}` summed over components."""
    g, c = _coeffs_of(s, grid)
    return float(np.sqrt(sq_H2(g, c)))


def energy(s: PVState, c2: float, grid: SpectralGrid | None = None) -> float:
    """:math:`\\tfrac12\\|u\\|^2 + \\tfrac{c_2}{2}\\|\\nabla u\\|^2`."""
    if not c2 > 0:
        raise DomainError(f"energy weight must be positive, got {c2}")
    g, c = _coeffs_of(s, grid)
    return float(0.5 * sq_L2(g, c) + 0.5 * c2 * sq_grad(g, c))


class Forcing:
    """Right-hand side ``f(t)`` in coefficient space, shape ``(n, *modes)``.

    :param grid: spectral grid
    :param func: callable ``t -> coefficients``; ``None`` means zero forcing
    """

    def __init__(self, grid: SpectralGrid, func: Callable[[float], np.ndarray] | None = None):
        self.grid = grid
        self.func = func

    @property
    def is_zero(self) -> bool:
        return self.func is None

    @classmethod
    def zero(cls, grid):
        return cls(grid)

    @classmethod
    def from_physical(cls, grid: SpectralGrid, func) -> "Forcing":
        """Project ``func(*nodes, t)`` (returning ``(n, *quad_nodes)`` samples) at every requested time."""
        shape = (grid.n_components,) + grid.node_shape

        def coeffs(t):
            return project(grid, np.broadcast_to(np.asarray(func(*grid.nodes, t), float), shape))

        forcing = cls(grid, coeffs)
        forcing.physical = func
        return forcing

    @classmethod
    def separable(cls, grid: SpectralGrid, shape_coeffs: np.ndarray, envelope: Callable[[float], float]) -> "Forcing":
        """``f(t) = envelope(t) * shape`` with a fixed coefficient array ``shape``."""
        shape_coeffs = grid.check_coeffs(shape_coeffs, lead=1).copy()
        return cls(grid, lambda t: envelope(t) * shape_coeffs)

    def __call__(self, t: float) -> np.ndarray:
        if self.func is None:
            return np.zeros((self.grid.n_components,) + self.grid.modes)
        out = np.asarray(self.func(t), dtype=float)
        if out.shape != (self.grid.n_components,) + self.grid.modes:
            raise DimensionError(f"forcing returned shape {out.shape}")
        return out

    def sample(self, times: np.ndarray) -> np.ndarray:
        return np.stack([self(t) for t in np.asarray(times, float)])


@dataclass
class Trajectory:
    """States and time derivatives on a time grid.

    ``states[k]`` and ``dt_states[k]`` are coefficient arrays of shape
    ``(n, *modes)`` at ``times[k]``.  ``dt_states`` come from the time
    integrator, not from differencing.
    """

    grid: SpectralGrid
    times: np.ndarray
    states: np.ndarray
    dt_states: np.ndarray
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.ndim != 1 or self.times.size < 1:
            raise DomainError("time grid must be a non-empty 1D array")
        if np.any(np.diff(self.times) <= 0):
            raise DomainError("time grid must be strictly increasing")
        shape = (self.times.size, self.grid.n_components) + self.grid.modes
        self.states = np.asarray(self.states, dtype=float)
        self.dt_states = np.asarray(self.dt_states, dtype=float)
        if self.states.shape != shape or self.dt_states.shape != shape:
            raise DimensionError(f"trajectory arrays must have shape {shape}")

    @classmethod
    def zeros(cls, grid: SpectralGrid, times) -> "Trajectory":
        times = np.asarray(times, float)
        z = np.zeros((times.size, grid.n_components) + grid.modes)
        return cls(grid, times, z, z.copy())

    def __len__(self):
        return self.times.size

    @property
    def T(self) -> float:
        return float(self.times[-1] - self.times[0])

    def state(self, k: int) -> PVState:
        return PVState(self.grid, self.states[k])

    def check_aligned(self, other: "Trajectory"):
        if not self.grid.same_basis(other.grid):
            raise DimensionError("trajectories live on different grids")
        if self.times.shape != other.times.shape or not np.allclose(self.times, other.times, rtol=0, atol=1e-14):
            raise DimensionError("trajectories use different time grids")

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        self.check_aligned(other)
        return Trajectory(self.grid, self.times, self.states - other.states, self.dt_states - other.dt_states)

    def __add__(self, other: "Trajectory") -> "Trajectory":
        self.check_aligned(other)
        return Trajectory(self.grid, self.times, self.states + other.states, self.dt_states + other.dt_states)

    def scaled(self, a: float) -> "Trajectory":
        return Trajectory(self.grid, self.times, a * self.states, a * self.dt_states)

    def at(self, t: float) -> np.ndarray:
        """State at time ``t`` by linear interpolation between nodes."""
        times = self.times
        if t < times[0] - 1e-12 * max(1.0, abs(times[-1])) or t > times[-1] + 1e-12 * max(1.0, abs(times[-1])):
            raise DomainError(f"t = {t} lies outside [{times[0]}, {times[-1]}]")
        k = int(np.clip(np.searchsorted(times, t, side="right") - 1, 0, times.size - 2)) if times.size > 1 else 0
        if times.size == 1:
            return self.states[0].copy()
        theta = (t - times[k]) / (times[k + 1] - times[k])
        return (1.0 - theta) * self.states[k] + theta * self.states[k + 1]

    def norm_series(self, kind: str = "H1") -> np.ndarray:
        fn = {"L2": sq_L2, "H1": sq_H1, "H2": sq_H2}[kind]
        return np.sqrt(fn(self.grid, self.states))


@dataclass(frozen=True)
class XNormReport:
    """Components of the solution-space norm.

    ``x1 = ||u(0)|| + ||du/dt||_{L2(L2)}``, ``x2 = ||u||_{L2(H2)}``,
    ``x3 = max_t ||u(t)||_{H1}``.
    """

    x1: float
    x2: float
    x3: float

    @property
    def x(self) -> float:
        return float(np.sqrt(self.x1 ** 2 + self.x2 ** 2 + self.x3 ** 2))

    @property
    def x_tilde(self) -> float:
        return float(np.sqrt(self.x2 ** 2 + self.x3 ** 2))

    def as_dict(self) -> dict:
        return {"x1": self.x1, "x2": self.x2, "x3": self.x3, "x": self.x, "xTilde": self.x_tilde}


def x_norm(traj: Trajectory) -> XNormReport:
    if len(traj) < 2:
        raise DomainError("the X norm needs a trajectory with at least two nodes")
    g, t = traj.grid, traj.times
    x1 = np.sqrt(sq_L2(g, traj.states[0])) + np.sqrt(trapezoid(sq_L2(g, traj.dt_states), t))
    x2 = np.sqrt(trapezoid(sq_H2(g, traj.states), t))
    x3 = np.sqrt(sq_H1(g, traj.states).max())
    return XNormReport(float(x1), float(x2), float(x3))


def l2l2_norm(grid: SpectralGrid, times: np.ndarray, values: np.ndarray) -> float:
    """:math:`\\|f\\|_{L^2(0,T;L^2)}` of nodal coefficient samples by the trapezoidal rule."""
    return float(np.sqrt(trapezoid(sq_L2(grid, values), times)))


def y_norm(f, u0, times=None, grid: SpectralGrid | None = None) -> float:
    """Data norm :math:`(\\|f\\|^2_{L^2(L^2)} + \\|u_0\\|^2_{H^1})^{1/2}`.

    :param f: a :class:`Forcing` (sampled on ``times``) or nodal samples ``(N+1, n, *modes)``
    :param u0: initial state (:class:`PVState` or coefficients)
    :param times: time grid of the quadrature
    """
    g, c0 = _coeffs_of(u0, grid)
    total = float(sq_H1(g, c0))
    if f is not None:
        if times is None:
            raise DomainError("a time grid is needed to integrate the forcing")
        times = np.asarray(times, float)
        if isinstance(f, Forcing):
            if not f.grid.same_basis(g):
                raise DimensionError("forcing and initial state live on different grids")
            if f.is_zero:
                return float(np.sqrt(total))
            f = f.sample(times)
        f = np.asarray(f, float)
        if f.shape != (times.size, g.n_components) + g.modes:
            raise DimensionError(f"forcing samples have shape {f.shape}")
        total += l2l2_norm(g, times, f) ** 2
    return float(np.sqrt(total))
