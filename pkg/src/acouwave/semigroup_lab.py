"""
Truncated generator of the linear constant-coefficient system

    p' = mu Δp - div v,    v' = eta Δv - grad p

on the sine basis, and the numerical checks that go with it: splitting into
skew and symmetric parts, the dissipativity margin, resolvent norms along the
imaginary axis and the decay of the propagator ``exp(tA)``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigvalsh, expm, svdvals

from .basis import SpectralGrid
from .errors import DomainError, EstimationError
from .operators import _kron_all

__all__ = ["TruncatedGenerator", "assemble_generator", "decomposition_check", "dissipativity_margin",
           "resolvent_sweep", "propagator_decay", "DEFAULT_SWEEP"]

log = logging.getLogger(__name__)

DEFAULT_SWEEP = (0.0,) + tuple(float(2 ** k) for k in range(13))


@dataclass(frozen=True)
class TruncatedGenerator:
    grid: SpectralGrid
    mu: float
    eta: float
    matrix: np.ndarray

    @property
    def exact_symmetric(self) -> np.ndarray:
        """Diagonal ``-diag(mu Λ, eta Λ, ...)`` the symmetric part should equal."""
        lam = self.grid.eigenvalues.ravel()
        return np.diag(np.concatenate([-self.mu * lam] + [-self.eta * lam] * self.grid.dim))

    @property
    def eta_tilde(self) -> float:
        return min(self.mu, self.eta) * self.grid.lambda_min


def assemble_generator(grid: SpectralGrid, mu: float, eta: float) -> TruncatedGenerator:
    """Dense Galerkin matrix in the orthonormal sine basis; ``mu = eta = 0`` gives the skew wave part."""
    if mu < 0 or eta < 0:
        raise DomainError(f"diffusivities must be non-negative, got mu={mu}, eta={eta}")
    M, d = grid.size, grid.dim
    lam = grid.eigenvalues.ravel()
    phi = _kron_all([ax.sin for ax in grid.axes])
    w = grid.weights.ravel()
    A = np.zeros(((d + 1) * M,) * 2)
    A[:M, :M] = np.diag(-mu * lam)
    for i in range(d):
        dphi = _kron_all([ax.cos if i == j else ax.sin for j, ax in enumerate(grid.axes)])
        C = phi.T @ (w[:, None] * dphi)  # <σ_j, ∂_i σ_k>, skew-symmetric
        rows = slice((i + 1) * M, (i + 2) * M)
        A[rows, rows] = np.diag(-eta * lam)
        A[:M, rows] = -C
        A[rows, :M] = -C
    A.setflags(write=False)
    return TruncatedGenerator(grid, float(mu), float(eta), A)


def decomposition_check(g: TruncatedGenerator) -> dict:
    """Split ``A = S + N`` into skew and symmetric parts and compare ``N`` with the exact diagonal."""
    A = g.matrix
    S, N = 0.5 * (A - A.T), 0.5 * (A + A.T)
    return {
        "skewResidual": float(np.abs(N - g.exact_symmetric).max()),
        "maxEigSymmetric": float(eigvalsh(N)[-1]),
        "skewPartNorm": float(np.abs(S).max()),
    }


def dissipativity_margin(g: TruncatedGenerator, rtol: float = 1e-10) -> float:
    """Largest ``c`` with ``<A u, u> <= -c |u|²``; must equal ``min(mu, eta) Λ_min``."""
    N = 0.5 * (g.matrix + g.matrix.T)
    try:
        top = float(eigvalsh(N)[-1])
    except np.linalg.LinAlgError as exc:
        raise EstimationError("symmetric eigensolver failed", {}) from exc
    margin = -top
    expected = g.eta_tilde
    if abs(margin - expected) > rtol * max(1.0, abs(expected)):
        raise EstimationError(f"dissipativity margin {margin!r} differs from {expected!r}",
                              {"margin": margin, "expected": expected})
    return margin


def resolvent_sweep(g: TruncatedGenerator, lambdas=DEFAULT_SWEEP) -> list[dict]:
    """Spectral norm of ``(iλ - A)^{-1}`` from the smallest singular value of the shifted matrix."""
    A = g.matrix.astype(complex)
    eye = np.eye(A.shape[0])
    rows = []
    for lam in lambdas:
        lam = float(lam)
        s = svdvals(1j * lam * eye - A)
        unbounded = bool(s[-1] <= 1e-14 * s[0])
        norm = float("inf") if unbounded else float(1.0 / s[-1])
        rows.append({"lambda": lam, "resolvent_norm": norm, "lambda_times_norm": lam * norm if lam else 0.0,
                     "unbounded": unbounded})
    return rows


def propagator_decay(g: TruncatedGenerator, horizon: float = 10.0, samples: int = 21, times=None) -> dict:
    """``||exp(tA)||_2`` on sample times and a least-squares fit ``C exp(-γ t)``."""
    if times is None:
        if not horizon > 0:
            raise DomainError("horizon must be positive")
        times = np.linspace(0.0, horizon, samples)
    times = np.asarray(times, float)
    norms = np.array([svdvals(expm(t * g.matrix))[0] for t in times])
    sel = (times > 0) & (norms > 0)
    if sel.sum() >= 2:
        slope, intercept = np.polyfit(times[sel], np.log(norms[sel]), 1)
    else:
        slope, intercept = np.log(norms[sel][0]) / times[sel][0], 0.0
    return {"times": times, "norms": norms, "fitC": float(np.exp(intercept)), "fitGamma": float(-slope),
            "contraction": bool(np.all(norms <= 1.0 + 1e-10)), "etaTilde": g.eta_tilde}
