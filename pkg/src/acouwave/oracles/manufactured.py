"""
Closed-form pressure/velocity fields and the forcing that makes them exact solutions.

Every component is a sum of separable terms ``a * E(t) * prod_i phi_i(x_i)``.
The spatial factors are ``sin(k θ) exp(κ cos θ)`` with ``θ = π x / L``: they
vanish with all even derivatives at both ends, so their odd periodic
extension is smooth and their sine coefficients decay faster than any power.
``κ = 0`` gives the normalized sine basis function itself.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import pi, sqrt

import numpy as np
from scipy.integrate import trapezoid

from ..basis import RectDomain, SpectralGrid, project, synth
from ..errors import DimensionError, DomainError
from ..fields import Forcing, Trajectory
from ..nondim import IbvpCoefficients, field_at

__all__ = ["Profile", "Envelope", "Term", "ManufacturedSolution", "manufactured_forcing", "solution_error"]


@dataclass(frozen=True)
class Profile:
    """``sqrt(2/L) sin(kπx/L) exp(κ cos(πx/L))`` and its first two derivatives."""

    k: int
    L: float = 1.0
    kappa: float = 0.0

    def __post_init__(self):
        if self.k < 1 or self.L <= 0:
            raise DomainError("profile needs k >= 1 and L > 0")

    def __call__(self, x, order: int = 0) -> np.ndarray:
        w = pi / self.L
        th = w * np.asarray(x, float)
        k, c = self.k, self.kappa
        s, co = np.sin(k * th), np.cos(k * th)
        e = np.exp(c * np.cos(th)) * sqrt(2.0 / self.L)
        sn, cn = np.sin(th), np.cos(th)
        if order == 0:
            return s * e
        if order == 1:
            return w * e * (k * co - c * sn * s)
        if order == 2:
            return w * w * e * (-k * k * s - 2 * k * c * sn * co - c * cn * s + c * c * sn * sn * s)
        raise DomainError("profiles provide derivatives up to order 2")


@dataclass(frozen=True)
class Envelope:
    """``amp * exp(-decay t) * cos(freq t + phase)``."""

    amp: float = 1.0
    decay: float = 0.0
    freq: float = 0.0
    phase: float = 0.0

    def __call__(self, t: float, order: int = 0) -> float:
        e = np.exp(-self.decay * t)
        arg = self.freq * t + self.phase
        if order == 0:
            return self.amp * e * np.cos(arg)
        if order == 1:
            return self.amp * e * (-self.decay * np.cos(arg) - self.freq * np.sin(arg))
        raise DomainError("envelopes provide one time derivative")


@dataclass(frozen=True)
class Term:
    profiles: tuple[Profile, ...]
    envelope: Envelope = Envelope()


@dataclass(frozen=True)
class ManufacturedSolution:
    """Closed-form ``(p, v)``: ``components[c]`` is the list of terms of component ``c``."""

    domain: RectDomain
    components: tuple[tuple[Term, ...], ...]

    def __post_init__(self):
        d = self.domain.dim
        if len(self.components) != d + 1:
            raise DimensionError(f"need {d + 1} components, got {len(self.components)}")
        for comp in self.components:
            for term in comp:
                if len(term.profiles) != d:
                    raise DimensionError("every term needs one profile per axis")
                for prof, L in zip(term.profiles, self.domain.lengths):
                    if abs(prof.L - L) > 1e-14 * L:
                        raise DomainError("profile length does not match the domain")

    @classmethod
    def zero(cls, domain: RectDomain) -> "ManufacturedSolution":
        return cls(domain, ((),) * (domain.dim + 1))

    @classmethod
    def single_mode(cls, domain: RectDomain, component: int, k, envelope: Envelope, kappa: float = 0.0):
        """One separable term in one component, zero elsewhere."""
        comps = [()] * (domain.dim + 1)
        comps[component] = (Term(tuple(Profile(int(ki), L, kappa) for ki, L in zip(k, domain.lengths)), envelope),)
        return cls(domain, tuple(comps))

    @property
    def dim(self) -> int:
        return self.domain.dim

    def partial(self, c: int, points, t: float, orders=None, dt: int = 0) -> np.ndarray:
        """Mixed partial ``∂_t^dt ∂^orders`` of component ``c`` at scattered points."""
        pts = np.broadcast_arrays(*[np.asarray(x, float) for x in points])
        shape = pts[0].shape
        # profiles are 1D, so on a tensor mesh evaluate them once per axis line
        pts = [_compact(x, i) if x.ndim == self.dim else x for i, x in enumerate(pts)]
        orders = orders or (0,) * self.dim
        out = np.zeros(shape)
        for term in self.components[c]:
            val = term.envelope(t, dt)
            for prof, x, o in zip(term.profiles, pts, orders):
                val = val * prof(x, o)
            out += val
        return out

    def value(self, points, t):
        return np.stack([self.partial(c, points, t) for c in range(self.dim + 1)])

    def time_derivative(self, points, t):
        return np.stack([self.partial(c, points, t, dt=1) for c in range(self.dim + 1)])

    def gradient(self, c, points, t):
        return np.stack([self.partial(c, points, t, _unit(self.dim, i)) for i in range(self.dim)])

    def laplacian(self, c, points, t):
        return sum(self.partial(c, points, t, _unit(self.dim, i, 2)) for i in range(self.dim))

    def divergence(self, points, t):
        return sum(self.partial(1 + i, points, t, _unit(self.dim, i)) for i in range(self.dim))

    def physical_forcing(self, coeffs: IbvpCoefficients):
        """Strong-form ``du/dt - A u + B[u, u]`` as a callable ``(*points, t) -> (n, ...)``."""
        d = self.dim
        e1, e2, e3, e4 = coeffs.eps

        def forcing(*args):
            *pts, t = args
            pts = tuple(np.broadcast_arrays(*[np.asarray(x, float) for x in pts]))
            u = self.value(pts, t)
            ut = self.time_derivative(pts, t)
            p, v = u[0], u[1:]
            gp = self.gradient(0, pts, t)
            gv = [self.gradient(1 + k, pts, t) for k in range(d)]
            div = sum(gv[i][i] for i in range(d))
            one_g = 1.0 + field_at(coeffs.gamma, pts)
            one_d = 1.0 + field_at(coeffs.delta, pts)
            out = np.empty_like(u)
            out[0] = (ut[0] - coeffs.mu * self.laplacian(0, pts, t) + one_g * div
                      + e1 * p * div + e2 * np.einsum("i...,i...->...", gp, v))
            for i in range(d):
                adv = sum(v[k] * gv[k][i] for k in range(d))
                out[1 + i] = (ut[1 + i] - coeffs.eta * self.laplacian(1 + i, pts, t) + one_d * gp[i]
                              - e3 * p * gp[i] + e4 * adv)
            return out

        return forcing

    def coefficients(self, grid: SpectralGrid, t: float) -> np.ndarray:
        return project(grid, self.value(grid.nodes, t))

    def trajectory(self, grid: SpectralGrid, times) -> Trajectory:
        """Projected states and projected time derivatives at the nodes."""
        times = np.asarray(times, float)
        states = np.stack([self.coefficients(grid, t) for t in times])
        rates = np.stack([project(grid, self.time_derivative(grid.nodes, t)) for t in times])
        return Trajectory(grid, times, states, rates)


def _compact(x: np.ndarray, axis: int) -> np.ndarray:
    """``x`` reduced to its varying axis when it is constant along all others."""
    if x.ndim < 2:
        return x
    line = x[tuple(slice(None) if j == axis else slice(0, 1) for j in range(x.ndim))]
    return line if np.array_equal(np.broadcast_to(line, x.shape), x) else x


def _unit(d, i, order=1):
    return tuple(order if j == i else 0 for j in range(d))


def manufactured_forcing(ms: ManufacturedSolution, op, times=None) -> tuple[Forcing, np.ndarray]:
    """Projected forcing and initial state for which ``ms`` solves the model exactly.

    :param op: :class:`~acouwave.operators.ModelOperator`
    :returns: ``(f, u0)`` with ``f`` callable at any time (``f.physical`` keeps
        the unprojected closed form) and ``u0`` the projected initial state
    """
    if ms.domain != op.grid.domain:
        raise DimensionError("manufactured solution and grid live on different domains")
    t0 = 0.0 if times is None else float(np.asarray(times, float)[0])
    f = Forcing.from_physical(op.grid, ms.physical_forcing(op.coeffs))
    return f, ms.coefficients(op.grid, t0)


def solution_error(ms: ManufacturedSolution, traj: Trajectory, relative: bool = True) -> float:
    """Space-time L² distance between the series solution and the closed form.

    Evaluated on a refined Gauss grid in space and by the trapezoidal rule in time.
    """
    fine = traj.grid.refined(4)
    w = fine.weights
    diff, ref = [], []
    for t, c in zip(traj.times, traj.states):
        exact = ms.value(fine.nodes, t)
        diff.append(np.sum(w * np.sum((synth(fine, c) - exact) ** 2, axis=0)))
        ref.append(np.sum(w * np.sum(exact ** 2, axis=0)))
    err = np.sqrt(trapezoid(np.asarray(diff), traj.times))
    if not relative:
        return float(err)
    scale = np.sqrt(trapezoid(np.asarray(ref), traj.times))
    return float(err / scale) if scale > 0 else float(err)
