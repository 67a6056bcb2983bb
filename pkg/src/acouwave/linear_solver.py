r"""
Linearized problem :math:`F'_{u^*}(u) = (f, u_0)` as a Galerkin ODE in time.

The coefficient vector obeys :math:`\dot u = M(t) u + b(t)` with
:math:`M(t) = A - J_B(u^*(t))`.  Time stepping is Crank-Nicolson (implicit
midpoint for the linear time-varying system)::

    (I - dt/2 M(t_mid)) u_{k+1} = (I + dt/2 M(t_mid)) u_k + dt b(t_mid)

with the frozen trajectory interpolated linearly between nodes.  The stored
time derivatives are the right-hand side at the nodes, ``M(t_k) u_k + b(t_k)``.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve
from scipy.sparse.linalg import LinearOperator, gmres

from .errors import DimensionError, DomainError, SolverError
from .fields import Forcing, Trajectory, energy, x_norm, y_norm
from .operators import ModelOperator, residual

__all__ = ["GalerkinSystem", "assemble", "solve_linearized", "apriori_check", "RadiusWarning",
           "DENSE_LIMIT", "step_diagnostics"]

log = logging.getLogger(__name__)

DENSE_LIMIT = 2000


class RadiusWarning(UserWarning):
    """The frozen coefficient or γ, δ lie outside the radii of the a priori estimate."""


def _as_forcing(op: ModelOperator, f) -> Forcing:
    if f is None:
        return Forcing.zero(op.grid)
    if isinstance(f, Forcing):
        return f
    raise DomainError("forcing must be a Forcing instance or None")


@dataclass
class GalerkinSystem:
    """The ODE ``du/dt = M(t) u + b(t)`` for a fixed frozen trajectory."""

    op: ModelOperator
    ustar: Trajectory | None
    forcing: Forcing
    mode: str = "auto"

    def __post_init__(self):
        if self.mode == "auto":
            self.mode = "dense" if self.op.size <= DENSE_LIMIT else "matrix-free"
        if self.mode not in ("dense", "matrix-free"):
            raise DomainError(f"unknown assembly mode {self.mode!r}")
        self.linear = self.ustar is None or self.op.coeffs.is_linear or not self.ustar.states.any()

    @property
    def dimension(self) -> int:
        return self.op.size

    def frozen(self, t: float) -> np.ndarray | None:
        if self.linear:
            return None
        return self.ustar.at(t)

    def matrix(self, t: float) -> np.ndarray:
        return self.op.galerkin_matrix(self.frozen(t))

    def apply(self, t: float, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, float).reshape(self.op.state_shape)
        return self.op.linearized_apply(self.frozen(t), w)

    def rhs(self, t: float) -> np.ndarray:
        return self.forcing(t)


def assemble(op: ModelOperator, ustar: Trajectory | None, t: float, f=None):
    """Dense ``M(t)`` and flattened ``b(t)`` of the Galerkin ODE."""
    if ustar is not None and not ustar.times[0] - 1e-12 <= t <= ustar.times[-1] + 1e-12:
        raise DomainError(f"t = {t} lies outside the frozen trajectory's interval")
    system = GalerkinSystem(op, ustar, _as_forcing(op, f), "dense")
    return system.matrix(t), system.rhs(t).ravel()


def _factor(lhs: np.ndarray, t: float):
    with warnings.catch_warnings():
        warnings.simplefilter("error", LinAlgWarning)
        try:
            lu = lu_factor(lhs, check_finite=True)
        except (LinAlgWarning, ValueError, np.linalg.LinAlgError) as exc:
            raise SolverError(f"step matrix is singular at t = {t:.6g}", t=t,
                              condition=float(np.linalg.cond(lhs))) from exc
    diag = np.abs(np.diag(lu[0]))
    if diag.min() <= 1e-14 * diag.max():
        raise SolverError(f"step matrix is numerically singular at t = {t:.6g}", t=t,
                          condition=float(np.linalg.cond(lhs)))
    return lu


def _radius_flags(op: ModelOperator, ustar: Trajectory | None, ledger, warn: bool = True) -> dict:
    if ledger is None or not np.isfinite(ledger.r_tilde):
        return {}
    gamma_sup, delta_sup = op.coeffs.sup_norms(op.grid)
    flags = {"gamma_delta_within_r_tilde": bool(max(gamma_sup, delta_sup) <= ledger.r_tilde)}
    if ustar is not None and len(ustar) >= 2:
        flags["ustar_within_r"] = bool(x_norm(ustar).x_tilde <= ledger.r)
    bad = [k for k, ok in flags.items() if not ok]
    if bad and warn:
        warnings.warn(f"a priori radii violated: {', '.join(bad)}", RadiusWarning, stacklevel=3)
    return flags


def solve_linearized(op: ModelOperator, ustar: Trajectory | None, f, u0, times, mode: str = "auto",
                     ledger=None, gmres_rtol: float = 1e-13, warn: bool = True) -> Trajectory:
    """Crank-Nicolson solution of the linearization about ``ustar``.

    :param ustar: frozen trajectory (``None`` for the linear operator)
    :param f: :class:`Forcing` or None
    :param u0: initial state (:class:`PVState` or coefficients); it is used as given,
        i.e. already projected
    :param times: strictly increasing time grid starting at the initial time
    :param mode: ``'dense'``, ``'matrix-free'`` or ``'auto'`` (dense up to 2000 unknowns)
    :param ledger: optional ledger; radius violations are flagged in ``traj.flags``
        and warned about unless ``warn`` is False
    """
    times = np.asarray(times, float)
    if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0):
        raise DomainError("time grid must be strictly increasing with at least two nodes")
    forcing = _as_forcing(op, f)
    system = GalerkinSystem(op, ustar, forcing, mode)
    if not system.linear:
        if not ustar.grid.same_basis(op.grid):
            raise DimensionError("frozen trajectory lives on a different grid")
        if ustar.times[0] > times[0] + 1e-12 or ustar.times[-1] < times[-1] - 1e-12:
            raise DomainError("frozen trajectory does not cover the time grid")
    same_nodes = ustar is not None and ustar.times.shape == times.shape and np.allclose(ustar.times, times)

    N, shape, n = times.size - 1, op.state_shape, op.size
    states = np.zeros((N + 1,) + shape)
    states[0] = op.check_state(u0) if u0 is not None else 0.0
    eye = np.eye(n)
    cache = {}

    for k in range(N):
        t0, t1 = times[k], times[k + 1]
        dt, tm = t1 - t0, 0.5 * (t0 + t1)
        if system.linear:
            frozen = None
        elif same_nodes:
            frozen = 0.5 * (ustar.states[k] + ustar.states[k + 1])
        else:
            frozen = ustar.at(tm)
        b = forcing(tm).ravel()
        uk = states[k].ravel()
        if system.mode == "dense":
            key = round(dt, 14)
            if frozen is None and key in cache:
                lu, Mmat = cache[key]
            else:
                Mmat = op.galerkin_matrix(frozen)
                lu = _factor(eye - 0.5 * dt * Mmat, tm)
                if frozen is None:
                    cache[key] = (lu, Mmat)
            rhs = uk + 0.5 * dt * (Mmat @ uk) + dt * b
            states[k + 1] = lu_solve(lu, rhs).reshape(shape)
        else:
            states[k + 1] = _gmres_step(op, frozen, uk, b, dt, tm, gmres_rtol).reshape(shape)

    dt_states = np.empty_like(states)
    for k in range(N + 1):
        frozen = None if system.linear else ustar.states[k] if same_nodes else ustar.at(times[k])
        dt_states[k] = op.linearized_apply(frozen, states[k]) + forcing(times[k])

    traj = Trajectory(op.grid, times, states, dt_states)
    traj.flags.update(_radius_flags(op, ustar, ledger, warn))
    traj.flags["mode"] = system.mode
    return traj


def _gmres_step(op, frozen, uk, b, dt, tm, rtol):
    n = op.size
    lam = op.grid.eigenvalues.ravel()
    diag = np.concatenate([1.0 + 0.5 * dt * op.coeffs.mu * lam]
                          + [1.0 + 0.5 * dt * op.coeffs.eta * lam] * op.grid.dim)
    shape = op.state_shape

    def matvec(x):
        return x - 0.5 * dt * op.linearized_apply(frozen, x.reshape(shape)).ravel()

    A = LinearOperator((n, n), matvec=matvec, dtype=float)
    P = LinearOperator((n, n), matvec=lambda x: x / diag, dtype=float)
    rhs = uk + 0.5 * dt * op.linearized_apply(frozen, uk.reshape(shape)).ravel() + dt * b
    x, info = gmres(A, rhs, x0=uk, rtol=rtol, atol=0.0, M=P, restart=100, maxiter=50)
    if info != 0:
        raise SolverError(f"GMRES did not converge at t = {tm:.6g} (info={info})", t=tm)
    return x


def apriori_check(traj: Trajectory, f, u0, ledger) -> dict:
    """Compare ``||u||_X`` with ``C_G ||(f, u0)||_Y``."""
    lhs = x_norm(traj).x
    if u0 is None:
        u0 = np.zeros_like(traj.states[0])
    data = y_norm(f, u0, traj.times, grid=traj.grid)
    rhs = ledger.cG * data
    return {"holds": bool(lhs <= rhs * (1.0 + 1e-12)), "lhs": lhs, "rhs": rhs, "data_norm": data, "cG": ledger.cG}


def step_diagnostics(op: ModelOperator, traj: Trajectory, f=None, u0=None, c2: float = 1.0) -> dict:
    """Per-node diagnostics: L², H¹, energy and the L² size of the nodal defect."""
    defect, _ = residual(op, traj, f, u0)
    g = traj.grid
    return {
        "t": traj.times.copy(),
        "L2": traj.norm_series("L2"),
        "H1": traj.norm_series("H1"),
        "energy": np.array([energy(s, c2, grid=g) for s in traj.states]),
        "residual": np.sqrt(np.sum(defect.reshape(len(traj), -1) ** 2, axis=1)),
    }
