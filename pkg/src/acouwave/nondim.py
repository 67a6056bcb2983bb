"""
Dimensionless coefficients of the model and their mapping to solver coefficients.

Physical medium data are reduced to the small parameters ε (Mach number) and
η (inverse acoustic Reynolds number) plus the O(1) coefficients ν, λ, σ, α, β.
:func:`to_ibvp_coefficients` then fixes the coefficients of the
pressure-velocity system solved elsewhere in the package::

    dp/dt - mu Δp + (1+γ) div v + eps1 p div v + eps2 grad p . v = h_src
    dv/dt - etaV Δv + (1+δ) grad p - eps3/2 grad(p²) + eps4/2 grad(|v|²) = g_src
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .basis import SpectralField, SpectralGrid, gradient, project, synth
from .errors import DimensionError, DomainError
from .fields import Forcing, Trajectory

__all__ = [
    "PhysicalMedium",
    "DimensionlessCoefficients",
    "IbvpCoefficients",
    "mach_number",
    "derive_coefficients",
    "to_ibvp_coefficients",
    "recover_entropy",
    "field_values",
    "field_at",
]

# A spatial coefficient: None (zero), a constant, a SpectralField, or a callable of the meshgrid.
FieldSpec = Union[None, float, SpectralField, Callable[..., np.ndarray]]


def field_values(spec: FieldSpec, axes: tuple[np.ndarray, ...]) -> np.ndarray:
    """Values of a spatial coefficient on the tensor grid spanned by the 1D arrays ``axes``."""
    shape = tuple(a.size for a in axes)
    if spec is None:
        return np.zeros(shape)
    if isinstance(spec, SpectralField):
        return spec.evaluate(axes)
    if callable(spec):
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.broadcast_to(np.asarray(spec(*mesh), float), shape).copy()
    return np.full(shape, float(spec))


def field_at(spec: FieldSpec, points: tuple[np.ndarray, ...]) -> np.ndarray:
    """Values of a spatial coefficient at scattered points ``(x_1, ..., x_d)``."""
    shape = np.broadcast(*points).shape
    if spec is None:
        return np.zeros(shape)
    if isinstance(spec, SpectralField):
        return spec.evaluate_points(points)
    if callable(spec):
        return np.broadcast_to(np.asarray(spec(*points), float), shape).copy()
    return np.full(shape, float(spec))


def mach_number(v_ref: float, c0: float) -> float:
    """ε = v_ref / c0."""
    if not (v_ref > 0 and c0 > 0):
        raise DomainError(f"velocities must be positive, got v_ref={v_ref}, c0={c0}")
    return v_ref / c0


@dataclass(frozen=True)
class PhysicalMedium:
    """Equilibrium state and transport data of a fluid, in consistent units.

    ``theta_scale_ratio`` is the ratio of the temperature scale to
    ``theta0 * [s]``; it enters only λ and is supplied directly.
    """

    rho0: float
    c0: float
    muS: float
    muB: float
    cp: float
    prandtl: float
    gammaHeat: float
    BoverA: float
    Dprime: float
    vRef: float
    omegaRef: float
    thetaScaleRatio: float = 1.0

    def __post_init__(self):
        positive = ("rho0", "c0", "muS", "cp", "prandtl", "omegaRef", "vRef")
        for name in positive:
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")
        if not self.muB >= 0:
            raise DomainError(f"muB must be non-negative, got {self.muB}")
        if not self.gammaHeat > 1:
            raise DomainError(f"gammaHeat must exceed 1, got {self.gammaHeat}")
        if not self.thetaScaleRatio > 0:
            raise DomainError("thetaScaleRatio must be positive")


@dataclass(frozen=True)
class DimensionlessCoefficients:
    """ε, η and the O(1) coefficients of the reduced model."""

    epsMach: float
    etaAcoustic: float
    nu: float
    lambdaTh: float
    sigma: float
    alpha: float
    beta: float
    BoverA: float

    def __post_init__(self):
        if not self.epsMach >= 0:
            raise DomainError("epsMach must be non-negative")
        if not self.etaAcoustic > 0:
            raise DomainError("etaAcoustic must be positive")
        if not self.nu >= 4.0 / 3.0 - 1e-15:
            raise DomainError("nu must be at least 4/3")
        if not self.sigma > 0:
            raise DomainError("sigma must be positive")
        if self.beta != 1.0 + self.BoverA:
            raise DomainError("beta must equal 1 + B/A")

    @classmethod
    def from_values(cls, eps, eta, nu=4.0 / 3.0, lambda_th=1.0, sigma=2.5, BoverA=5.0, Dprime=0.0):
        """Build directly from dimensionless values (α, β follow from B/A and D′)."""
        return cls(eps, eta, nu, lambda_th, sigma, Dprime / 2.0 - BoverA - 1.0, 1.0 + BoverA, BoverA)

    def replace(self, **kw) -> "DimensionlessCoefficients":
        vals = dict(self.__dict__)
        vals.update(kw)
        return DimensionlessCoefficients(**vals)


def derive_coefficients(m: PhysicalMedium) -> DimensionlessCoefficients:
    eps = mach_number(m.vRef, m.c0)
    eta = (m.omegaRef / m.c0) * m.muS / (m.c0 * m.rho0)
    return DimensionlessCoefficients(
        epsMach=eps,
        etaAcoustic=eta,
        nu=4.0 / 3.0 + m.muB / m.muS,
        lambdaTh=m.cp * m.thetaScaleRatio / m.prandtl,
        sigma=1.0 / (m.gammaHeat - 1.0),
        alpha=m.Dprime / 2.0 - m.BoverA - 1.0,
        beta=1.0 + m.BoverA,
        BoverA=m.BoverA,
    )


@dataclass(frozen=True)
class IbvpCoefficients:
    """Coefficients of the pressure-velocity system with homogeneous Dirichlet data.

    :param gamma: spatial field γ(x) (None, constant, SpectralField or callable of the meshgrid)
    :param delta: spatial field δ(x)
    :param eps: the four nonlinearity weights (eps1, eps2, eps3, eps4)
    :param source: ``source(*mesh, t) -> (n, *shape)`` stacking the pressure
        source and the d velocity sources; None means unforced
    """

    mu: float
    eta: float
    gamma: FieldSpec = None
    delta: FieldSpec = None
    eps: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    source: Callable | None = None

    def __post_init__(self):
        if not (self.mu > 0 and self.eta > 0):
            raise DomainError(f"diffusivities must be positive, got mu={self.mu}, eta={self.eta}")
        eps = tuple(float(e) for e in np.broadcast_to(np.asarray(self.eps, float), (4,)))
        if any(e < 0 or not np.isfinite(e) for e in eps):
            raise DomainError(f"nonlinearity weights must be finite and non-negative, got {eps}")
        object.__setattr__(self, "eps", eps)

    @property
    def eps_norm(self) -> float:
        """|ε| = (ε₁² + ε₂² + ε₃² + ε₄²)^{1/2}."""
        return float(np.sqrt(sum(e * e for e in self.eps)))

    @property
    def is_linear(self) -> bool:
        return not any(self.eps)

    def gamma_values(self, axes):
        return field_values(self.gamma, axes)

    def delta_values(self, axes):
        return field_values(self.delta, axes)

    def sup_norms(self, grid: SpectralGrid) -> tuple[float, float]:
        """Sup norms of γ and δ sampled on a fine tensor grid including the box faces."""
        axes = tuple(np.linspace(0.0, L, 4 * q + 1) for L, q in zip(grid.domain.lengths, grid.quad_nodes))
        return (float(np.abs(self.gamma_values(axes)).max()), float(np.abs(self.delta_values(axes)).max()))

    def forcing(self, grid: SpectralGrid) -> Forcing:
        """Projected source as a :class:`Forcing` on ``grid``."""
        if self.source is None:
            return Forcing.zero(grid)
        return Forcing.from_physical(grid, self.source)

    def with_(self, **kw) -> "IbvpCoefficients":
        vals = dict(mu=self.mu, eta=self.eta, gamma=self.gamma, delta=self.delta, eps=self.eps, source=self.source)
        vals.update(kw)
        return IbvpCoefficients(**vals)


def to_ibvp_coefficients(d: DimensionlessCoefficients, sl: SpectralField | float | None = None,
                         h=None, g=None, ell=None) -> IbvpCoefficients:
    """Map the dimensionless model onto the solver coefficients.

    :param sl: leading-order entropy field s_l: None for zero, a constant (zero
        gradient) or a :class:`SpectralField`
    :param h: pressure source ``h(*mesh, t)``
    :param g: velocity source ``g(*mesh, t) -> (dim, *shape)``
    :param ell: entropy source ``ell(*mesh, t)``
    """
    eps, eta = d.epsMach, d.etaAcoustic
    mu, eta_v = eta * d.lambdaTh, eta * d.nu
    gamma = delta = None
    lap_sl = None
    if isinstance(sl, (int, float)):
        if sl:
            gamma, delta = eps * d.alpha * float(sl), eps * float(sl)
    elif sl is not None and np.any(sl.coeffs):
        gamma = SpectralField(sl.grid, eps * d.alpha * sl.coeffs)
        delta = SpectralField(sl.grid, eps * sl.coeffs)
        lap_sl = sl.laplacian()

    source = None
    if any(x is not None for x in (h, g, ell, lap_sl)):
        def source(*args):
            *mesh, t = args
            shape = np.broadcast(*mesh).shape
            dim = len(mesh)
            out = np.zeros((dim + 1,) + shape)
            if h is not None:
                out[0] += eps * np.asarray(h(*mesh, t))
            if ell is not None:
                out[0] += eps * np.asarray(ell(*mesh, t))
            if lap_sl is not None:
                out[0] += eta * d.lambdaTh * d.sigma * lap_sl.evaluate_points(mesh)
            if g is not None:
                out[1:] += eps * np.asarray(g(*mesh, t))
            return out

    return IbvpCoefficients(mu=mu, eta=eta_v, gamma=gamma, delta=delta,
                            eps=(eps * d.beta, eps, eps, eps), source=source)


def recover_entropy(traj: Trajectory, sl: SpectralField | None, d: DimensionlessCoefficients,
                    ell=None, s0: SpectralField | None = None) -> np.ndarray:
    """Integrate ``ds/dt = -ε grad s_l . v + ηλ Δ(p + σ s_l) + ε ℓ`` along ``traj``.

    A constant ``sl`` has no gradient and no Laplacian and is treated like None.

    :returns: entropy coefficients at every time node, shape ``(N+1, *modes)``
    """
    grid = traj.grid
    if isinstance(sl, (int, float)):
        sl = None
    for fld in (sl, s0):
        if fld is not None and not fld.grid.same_basis(grid):
            raise DimensionError("entropy fields must share the trajectory grid")
    lam = grid.eigenvalues
    eps, eta = d.epsMach, d.etaAcoustic
    sl_c = np.zeros(grid.modes) if sl is None else sl.coeffs

    rhs = -eta * d.lambdaTh * lam * (traj.states[:, 0] + d.sigma * sl_c)
    if sl is not None and np.any(sl_c):
        grad_sl = gradient(grid, sl_c)
        v_nodes = synth(grid, traj.states[:, 1:])
        advect = np.einsum("i...,ki...->k...", grad_sl, v_nodes)
        rhs = rhs - eps * project(grid, advect)
    if ell is not None:
        ell_f = ell if isinstance(ell, Forcing) else Forcing.from_physical(grid, lambda *a: _scalar_to_state(ell, grid, *a))
        rhs = rhs + eps * ell_f.sample(traj.times)[:, 0]

    start = np.zeros(grid.modes) if s0 is None else s0.coeffs
    return start + cumulative_trapezoid(rhs, traj.times, axis=0, initial=0.0)


def _scalar_to_state(func, grid, *args):
    vals = np.asarray(func(*args), float)
    out = np.zeros((grid.n_components,) + vals.shape)
    out[0] = vals
    return out
