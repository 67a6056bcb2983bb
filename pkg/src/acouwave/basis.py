r"""
Dirichlet sine eigenbasis on axis-aligned boxes.

The basis functions are the L²-normalized products

.. math::

   \sigma^k(x) = \prod_{i=1}^{d} \sqrt{2/L_i}\,\sin(k_i \pi x_i / L_i),
   \qquad -\Delta \sigma^k = \Lambda_k \sigma^k,
   \qquad \Lambda_k = \sum_i (k_i \pi / L_i)^2 .

Fields are stored as coefficient arrays of shape ``(..., m_1, ..., m_d)``; any
leading axes are batch axes (components, time nodes) and are carried through
every transform.  Nonlinear terms are evaluated on a tensor Gauss-Legendre
grid.  With ``3m + 12`` nodes per axis the rule integrates every product of
three in-band sine/cosine factors to round-off, so projecting a product of two
in-band fields is exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import ceil, pi, sqrt
from typing import Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import DimensionError, DomainError

__all__ = [
    "RectDomain",
    "SpectralGrid",
    "SpectralField",
    "eigenvalue",
    "analyze",
    "synth",
    "project",
    "derivative",
    "gradient",
    "divergence",
    "laplacian",
    "evaluate",
    "evaluate_points",
    "default_quad_nodes",
]


def default_quad_nodes(m: int, degree: int = 3) -> int:
    """Gauss-Legendre nodes needed to integrate products of ``degree`` in-band factors."""
    return degree * m + 12


@dataclass(frozen=True)
class RectDomain:
    """The box :math:`(0, L_1) \\times \\dots \\times (0, L_d)`."""

    lengths: tuple[float, ...]

    def __post_init__(self):
        lengths = tuple(float(L) for L in np.atleast_1d(self.lengths))
        if not 1 <= len(lengths) <= 3:
            raise DomainError(f"dimension must be 1, 2 or 3, got {len(lengths)}")
        if any(not np.isfinite(L) or L <= 0 for L in lengths):
            raise DomainError(f"box lengths must be positive, got {lengths}")
        object.__setattr__(self, "lengths", lengths)

    @property
    def dim(self) -> int:
        return len(self.lengths)

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))


def eigenvalue(k: Sequence[int], dom: RectDomain) -> float:
    """Dirichlet Laplacian eigenvalue :math:`\\Lambda_k = \\sum_i (k_i\\pi/L_i)^2`."""
    k = tuple(int(ki) for ki in np.atleast_1d(k))
    if len(k) != dom.dim:
        raise DimensionError(f"multi-index {k} does not match dimension {dom.dim}")
    if any(ki < 1 for ki in k):
        raise DomainError(f"mode indices start at 1, got {k}")
    return float(sum((ki * pi / L) ** 2 for ki, L in zip(k, dom.lengths)))


class _Axis:
    """One-dimensional factor of the tensor basis: nodes, weights, sine tables."""

    def __init__(self, L: float, m: int, q: int):
        y, w = leggauss(q)
        self.L, self.m, self.q = L, m, q
        self.nodes = 0.5 * L * (y + 1.0)
        self.weights = 0.5 * L * w
        self.kappa = np.arange(1, m + 1) * pi / L
        self.sin = self.table(self.nodes, 0)
        self.cos = self.table(self.nodes, 1)
        self.dsin2 = self.table(self.nodes, 2)
        # rows: modes, columns: nodes; weighted test functions
        self.proj = (self.sin * self.weights[:, None]).T
        self.proj_d = (self.cos * self.weights[:, None]).T

    def table(self, x, order):
        """Values of the ``order``-th derivative of the 1D basis at points ``x``."""
        arg = np.outer(np.asarray(x, float), self.kappa)
        amp = sqrt(2.0 / self.L) * self.kappa ** order
        phase = order % 4
        vals = (np.sin, np.cos, lambda a: -np.sin(a), lambda a: -np.cos(a))[phase](arg)
        return vals * amp


@dataclass(frozen=True)
class SpectralGrid:
    """Truncated sine basis with ``modes[i]`` functions and ``quad_nodes[i]`` Gauss nodes per axis."""

    domain: RectDomain
    modes: tuple[int, ...]
    quad_nodes: tuple[int, ...] | None = None

    def __post_init__(self):
        d = self.domain.dim
        modes = tuple(int(m) for m in np.broadcast_to(np.atleast_1d(self.modes), (d,)))
        if any(m < 1 for m in modes):
            raise DomainError(f"need at least one mode per axis, got {modes}")
        if self.quad_nodes is None:
            quad = tuple(default_quad_nodes(m) for m in modes)
        else:
            quad = tuple(int(q) for q in np.broadcast_to(np.atleast_1d(self.quad_nodes), (d,)))
        for m, q in zip(modes, quad):
            if q < ceil(1.5 * m):
                raise DomainError(f"{q} quadrature nodes cannot dealias {m} modes")
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "quad_nodes", quad)

    # -- sizes -------------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.modes

    @property
    def node_shape(self) -> tuple[int, ...]:
        return self.quad_nodes

    @property
    def size(self) -> int:
        return int(np.prod(self.modes))

    @property
    def n_components(self) -> int:
        return self.dim + 1

    # -- tables ------------------------------------------------------------
    @cached_property
    def axes(self) -> tuple[_Axis, ...]:
        return tuple(_Axis(L, m, q) for L, m, q in zip(self.domain.lengths, self.modes, self.quad_nodes))

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Array of :math:`\\Lambda_k` with the grid's coefficient shape."""
        lam = np.zeros(self.modes)
        for i, ax in enumerate(self.axes):
            sh = [1] * self.dim
            sh[i] = ax.m
            lam = lam + (ax.kappa ** 2).reshape(sh)
        lam.setflags(write=False)
        return lam

    @property
    def lambda_min(self) -> float:
        return float(sum((pi / L) ** 2 for L in self.domain.lengths))

    @cached_property
    def weights(self) -> np.ndarray:
        """Tensor quadrature weights on the node grid."""
        w = np.ones(())
        for ax in self.axes:
            w = np.multiply.outer(w, ax.weights)
        return w

    @cached_property
    def nodes(self) -> tuple[np.ndarray, ...]:
        """Meshgrid (``indexing='ij'``) of the quadrature nodes."""
        return tuple(np.meshgrid(*[ax.nodes for ax in self.axes], indexing="ij"))

    def refined(self, degree: int = 4) -> "SpectralGrid":
        """Same modes with a quadrature exact for ``degree``-fold products (norm checks)."""
        return SpectralGrid(self.domain, self.modes, tuple(default_quad_nodes(m, degree) for m in self.modes))

    def with_modes(self, modes) -> "SpectralGrid":
        return SpectralGrid(self.domain, modes)

    # -- checks ------------------------------------------------------------
    def check_coeffs(self, c: np.ndarray, lead: int | None = None) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        d = self.dim
        if c.ndim < d or c.shape[c.ndim - d:] != self.modes:
            raise DimensionError(f"coefficient array of shape {c.shape} does not end with {self.modes}")
        if lead is not None and c.ndim != d + lead:
            raise DimensionError(f"expected {lead} leading axes, got shape {c.shape}")
        return c

    def check_samples(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        d = self.dim
        if s.ndim < d or s.shape[s.ndim - d:] != self.quad_nodes:
            raise DimensionError(f"sample array of shape {s.shape} does not end with {self.quad_nodes}")
        return s

    def same_basis(self, other: "SpectralGrid") -> bool:
        return self.domain == other.domain and self.modes == other.modes

    # -- tensor contractions ----------------------------------------------
    def _contract(self, arr: np.ndarray, mats: Sequence[np.ndarray]) -> np.ndarray:
        """Apply ``mats[i]`` along the i-th trailing spatial axis of ``arr``."""
        d = self.dim
        lead = arr.ndim - d
        for i, mat in enumerate(mats):
            arr = np.moveaxis(np.tensordot(mat, arr, axes=([1], [lead + i])), 0, lead + i)
        return arr


def synth(grid: SpectralGrid, c: np.ndarray) -> np.ndarray:
    """Node values of the sine series with coefficients ``c``."""
    c = grid.check_coeffs(c)
    return grid._contract(c, [ax.sin for ax in grid.axes])


def analyze(grid: SpectralGrid, samples: np.ndarray) -> np.ndarray:
    """Coefficients from node samples by quadrature inner products.

    For samples of an in-band field this inverts :func:`synth`.
    """
    samples = grid.check_samples(samples)
    return grid._contract(samples, [ax.proj for ax in grid.axes])


def project(grid: SpectralGrid, samples: np.ndarray) -> np.ndarray:
    """L²-orthogonal projection onto the truncated basis, computed by quadrature."""
    return analyze(grid, samples)


def project_derivative(grid: SpectralGrid, samples: np.ndarray, axis: int) -> np.ndarray:
    r"""Inner products :math:`\langle g, \partial_i \sigma^k\rangle` for node samples ``g``.

    By integration by parts this equals :math:`-\langle \partial_i g, \sigma^k\rangle`
    whenever ``g`` vanishes on the boundary, which is how gradients of products
    are projected.
    """
    samples = grid.check_samples(samples)
    mats = [ax.proj_d if i == axis else ax.proj for i, ax in enumerate(grid.axes)]
    return grid._contract(samples, mats)


def derivative(grid: SpectralGrid, c: np.ndarray, axis: int, order: int = 1) -> np.ndarray:
    """Node values of the ``order``-th partial derivative along ``axis``."""
    c = grid.check_coeffs(c)
    if not 0 <= axis < grid.dim:
        raise DimensionError(f"axis {axis} out of range for dimension {grid.dim}")
    tables = {0: "sin", 1: "cos", 2: "dsin2"}
    mats = []
    for i, ax in enumerate(grid.axes):
        if i == axis:
            mats.append(getattr(ax, tables[order]) if order in tables else ax.table(ax.nodes, order))
        else:
            mats.append(ax.sin)
    return grid._contract(c, mats)


def gradient(grid: SpectralGrid, c: np.ndarray) -> np.ndarray:
    """Node values of the gradient, shape ``(d, ..., *quad_nodes)``."""
    return np.stack([derivative(grid, c, i) for i in range(grid.dim)])


def divergence(grid: SpectralGrid, v: np.ndarray) -> np.ndarray:
    """Node values of the divergence of a vector field given by sine coefficients ``v[i]``."""
    v = grid.check_coeffs(v)
    if v.shape[0] != grid.dim:
        raise DimensionError(f"vector field needs {grid.dim} components, got {v.shape[0]}")
    return sum(derivative(grid, v[i], i) for i in range(grid.dim))


def laplacian(grid: SpectralGrid, c: np.ndarray) -> np.ndarray:
    """Coefficients of the Dirichlet Laplacian: mode k is scaled by :math:`-\\Lambda_k`."""
    c = grid.check_coeffs(c)
    return -grid.eigenvalues * c


def evaluate(grid: SpectralGrid, c: np.ndarray, coords: Sequence[np.ndarray], deriv: Sequence[int] | None = None) -> np.ndarray:
    """Evaluate the series (or a mixed derivative) on the tensor grid ``coords[0] x coords[1] x ...``."""
    c = grid.check_coeffs(c)
    if len(coords) != grid.dim:
        raise DimensionError(f"need {grid.dim} coordinate arrays, got {len(coords)}")
    deriv = deriv or (0,) * grid.dim
    mats = [ax.table(x, o) for ax, x, o in zip(grid.axes, coords, deriv)]
    return grid._contract(c, mats)


def evaluate_points(grid: SpectralGrid, c: np.ndarray, points: Sequence[np.ndarray], deriv: Sequence[int] | None = None) -> np.ndarray:
    """Evaluate the series at scattered points ``(x_1, ..., x_d)`` of any common shape."""
    c = grid.check_coeffs(c, lead=0)
    pts = np.broadcast_arrays(*[np.asarray(x, float) for x in points])
    if len(pts) != grid.dim:
        raise DimensionError(f"need {grid.dim} coordinate arrays, got {len(pts)}")
    deriv = deriv or (0,) * grid.dim
    letters = "abc"[: grid.dim]
    tables = [ax.table(x.ravel(), o) for ax, x, o in zip(grid.axes, pts, deriv)]
    spec = ",".join("p" + a for a in letters) + "," + letters + "->p"
    return np.einsum(spec, *tables, c).reshape(pts[0].shape)


@dataclass(frozen=True)
class SpectralField:
    """A scalar field :math:`\\sum_k c_k \\sigma^k` on a :class:`SpectralGrid`."""

    grid: SpectralGrid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = self.grid.check_coeffs(self.coeffs, lead=0).copy()
        if not np.all(np.isfinite(c)):
            raise DomainError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, grid: SpectralGrid) -> "SpectralField":
        return cls(grid, np.zeros(grid.modes))

    @classmethod
    def mode(cls, grid: SpectralGrid, k: Sequence[int], amplitude: float = 1.0) -> "SpectralField":
        k = tuple(int(ki) for ki in np.atleast_1d(k))
        if len(k) != grid.dim or any(not 1 <= ki <= m for ki, m in zip(k, grid.modes)):
            raise DomainError(f"mode {k} is outside the band {grid.modes}")
        c = np.zeros(grid.modes)
        c[tuple(ki - 1 for ki in k)] = amplitude
        return cls(grid, c)

    @classmethod
    def from_function(cls, grid: SpectralGrid, func) -> "SpectralField":
        """Project ``func(*node_meshgrid)`` onto the basis."""
        return cls(grid, project(grid, np.broadcast_to(func(*grid.nodes), grid.node_shape)))

    def synth(self) -> np.ndarray:
        return synth(self.grid, self.coeffs)

    def laplacian(self) -> "SpectralField":
        return SpectralField(self.grid, laplacian(self.grid, self.coeffs))

    def gradient(self) -> np.ndarray:
        return gradient(self.grid, self.coeffs)

    def evaluate(self, coords, deriv=None) -> np.ndarray:
        return evaluate(self.grid, self.coeffs, coords, deriv)

    def evaluate_points(self, points, deriv=None) -> np.ndarray:
        return evaluate_points(self.grid, self.coeffs, points, deriv)

    def sup_norm(self) -> float:
        """Supremum estimate from the quadrature nodes."""
        return float(np.abs(self.synth()).max()) if self.coeffs.any() else 0.0
