"""
Second-order-in-time reference: the Kuznetsov-type wave equation

    p_tt - c² Δp - b Δp_t - ε (B/2A) (p²)_tt - ε (|v|²)_tt = ε h̃,    v_t = -∇p

with ``c² = 1 + ε(α+1) s_l`` and ``b = η(λ+ν)`` for a constant entropy level
``s_l``.  It is written first order in ``(p, q = p_t, v)`` on the sine basis
and advanced with the implicit midpoint rule; the quadratic terms are lagged
in a fixed-point loop per step.  ``(p²)_tt = 2q² + 2p q_t`` and
``(|v|²)_tt = 2|∇p|² - 2 v·∇q`` follow from ``v_t = -∇p``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..basis import SpectralGrid, derivative, divergence, project, project_derivative, synth
from ..errors import DomainError, OracleError
from ..fields import Forcing
from ..nondim import DimensionlessCoefficients

__all__ = ["KuznetsovParams", "KuznetsovResult", "kuznetsov_solve", "system_initial_rate",
           "modal_rates", "characteristic_roots", "wave_energy"]


@dataclass(frozen=True)
class KuznetsovParams:
    """``c2`` wave speed squared, ``b`` diffusivity of sound, ``eps`` and ``ratio = B/2A``."""

    c2: float
    b: float
    eps: float
    ratio: float

    def __post_init__(self):
        if not self.c2 > 0 or self.b < 0 or self.eps < 0:
            raise DomainError("need c2 > 0, b >= 0 and eps >= 0")

    @classmethod
    def from_dimensionless(cls, d: DimensionlessCoefficients, sl: float = 0.0) -> "KuznetsovParams":
        eps = d.epsMach
        return cls(c2=1.0 + eps * (d.alpha + 1.0) * sl, b=d.etaAcoustic * (d.lambdaTh + d.nu), eps=eps,
                   ratio=d.BoverA / 2.0)


@dataclass
class KuznetsovResult:
    grid: SpectralGrid
    times: np.ndarray
    p: np.ndarray  # (N+1, *modes)
    q: np.ndarray
    v: np.ndarray  # (N+1, d, *modes)
    lag_iterations: np.ndarray


def system_initial_rate(d: DimensionlessCoefficients, grid: SpectralGrid, p0, v0, sl: float = 0.0,
                        source0=None) -> np.ndarray:
    """``p_t(0)`` of the first-order system, used to start the second-order equation consistently.

    :param source0: pressure source at ``t = 0`` on the Gauss nodes (``h + ℓ``), or None
    """
    eps, eta = d.epsMach, d.etaAcoustic
    p0, v0 = np.asarray(p0, float), np.asarray(v0, float)
    p_n = synth(grid, p0)
    div = divergence(grid, v0)
    gp_v = sum(derivative(grid, p0, i) * synth(grid, v0[i]) for i in range(grid.dim))
    nodal = -(1.0 + eps * d.alpha * sl) * div - eps * d.beta * p_n * div - eps * gp_v
    if source0 is not None:
        nodal = nodal + eps * np.asarray(source0, float)
    return -eta * d.lambdaTh * grid.eigenvalues * p0 + project(grid, nodal)


def _nonlinear(grid, par, p, q, v, qt):
    """Projected ``ε(B/2A)(2q² + 2p q_t) + 2ε(|∇p|² - v·∇q)``."""
    p_n, q_n, qt_n = synth(grid, p), synth(grid, q), synth(grid, qt)
    nodal = par.ratio * (2 * q_n * q_n + 2 * p_n * qt_n)
    for i in range(grid.dim):
        nodal = nodal + 2 * derivative(grid, p, i) ** 2 - 2 * synth(grid, v[i]) * derivative(grid, q, i)
    return par.eps * project(grid, nodal)


def kuznetsov_solve(par: KuznetsovParams, grid: SpectralGrid, times, p0, q0, v0, h_tilde: Forcing | None = None,
                    tol: float = 1e-12, max_lag: int = 60) -> KuznetsovResult:
    """Advance ``(p, q, v)`` from the given initial coefficients.

    :param h_tilde: projected source ``h̃`` (the equation multiplies it by ε), as a scalar-valued
        :class:`Forcing` whose first component is used; None for no source
    :raises OracleError: when the lag loop does not converge
    """
    times = np.asarray(times, float)
    if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0):
        raise DomainError("time grid must be strictly increasing with at least two nodes")
    lam = grid.eigenvalues
    d = grid.dim
    N = times.size
    P = np.zeros((N,) + grid.modes)
    Q = np.zeros_like(P)
    V = np.zeros((N, d) + grid.modes)
    P[0], Q[0], V[0] = grid.check_coeffs(p0), grid.check_coeffs(q0), np.asarray(v0, float)
    lags = np.zeros(N - 1, dtype=int)
    nonlinear = par.eps > 0
    for k in range(N - 1):
        dt = times[k + 1] - times[k]
        tm = times[k] + 0.5 * dt
        src = par.eps * h_tilde(tm)[0] if h_tilde is not None else 0.0
        a = 0.5 * dt * par.c2 * lam
        bb = 0.5 * dt * par.b * lam
        den = 1.0 + bb + 0.5 * dt * a
        p0k, q0k, v0k = P[k], Q[k], V[k]
        base = q0k * (1.0 - bb - 0.5 * dt * a) - dt * par.c2 * lam * p0k + dt * src

        def advance(nl):
            q1 = (base + dt * nl) / den
            p1 = p0k + 0.5 * dt * (q0k + q1)
            return p1, q1

        nl = np.zeros(grid.modes)
        p1, q1 = advance(nl)
        if nonlinear:
            for it in range(max_lag):
                pm, qm = 0.5 * (p0k + p1), 0.5 * (q0k + q1)
                vm = v0k - 0.5 * dt * _gradient_coeffs(grid, pm)
                nl = _nonlinear(grid, par, pm, qm, vm, (q1 - q0k) / dt)
                p_new, q_new = advance(nl)
                change = max(np.abs(p_new - p1).max(), np.abs(q_new - q1).max())
                p1, q1 = p_new, q_new
                if change <= tol * max(1.0, np.abs(q1).max()):
                    lags[k] = it + 1
                    break
            else:
                raise OracleError(f"lag loop stalled at t = {times[k]:.6g} (change {change:.3e})")
        P[k + 1], Q[k + 1] = p1, q1
        V[k + 1] = v0k - dt * _gradient_coeffs(grid, 0.5 * (p0k + p1))
    return KuznetsovResult(grid, times, P, Q, V, lags)


def _gradient_coeffs(grid: SpectralGrid, p: np.ndarray) -> np.ndarray:
    """Sine coefficients of ∇p, from the weak form ``-<p, ∂_i σ>``."""
    p_n = synth(grid, p)
    return np.stack([-project_derivative(grid, p_n, i) for i in range(grid.dim)])


def characteristic_roots(par: KuznetsovParams, grid: SpectralGrid) -> np.ndarray:
    """Roots of ``z² + bΛz + c²Λ = 0`` per mode, shape ``(2, *modes)``."""
    lam = grid.eigenvalues.astype(complex)
    disc = np.sqrt((par.b * lam) ** 2 - 4 * par.c2 * lam)
    return np.stack([(-par.b * lam + disc) / 2, (-par.b * lam - disc) / 2])


def modal_rates(par: KuznetsovParams, grid: SpectralGrid, dt: float) -> np.ndarray:
    """Continuous-time exponents recovered from the discrete linear step of every mode.

    The midpoint step multiplies each mode by ``(1 + z dt/2)/(1 - z dt/2)``; inverting
    this map on the eigenvalues of the 2×2 step matrix returns ``z`` exactly.
    """
    lam = grid.eigenvalues.ravel()
    out = np.empty((2, lam.size), complex)
    for j, L in enumerate(lam):
        a, bb = 0.5 * dt * par.c2 * L, 0.5 * dt * par.b * L
        den = 1.0 + bb + 0.5 * dt * a
        # q1 = (q0 (1 - bb - dt a/2) - dt c² Λ p0) / den ;  p1 = p0 + dt/2 (q0 + q1)
        qq, qp = (1.0 - bb - 0.5 * dt * a) / den, -dt * par.c2 * L / den
        step = np.array([[1.0 + 0.5 * dt * qp, 0.5 * dt * (1.0 + qq)], [qp, qq]])
        rho = np.linalg.eigvals(step)
        z = (2.0 / dt) * (rho - 1.0) / (rho + 1.0)
        out[:, j] = np.sort_complex(z)
    return out.reshape((2,) + grid.modes)


def wave_energy(par: KuznetsovParams, grid: SpectralGrid, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """``½ Σ (q² + c² Λ p²)`` per time node."""
    axes = tuple(range(p.ndim - grid.dim, p.ndim))
    return 0.5 * np.sum(q * q + par.c2 * grid.eigenvalues * p * p, axis=axes)
