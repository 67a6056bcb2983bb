r"""
Operator algebra of the pressure-velocity system in Galerkin form.

With :math:`u = (p, v)` and :math:`w = (q, w)`:

.. math::

   \mathbb{A}u = \bigl(\mu\Delta p - (1+\gamma)\nabla\cdot v,\;
                       \eta\Delta v - (1+\delta)\nabla p\bigr)

   \mathbb{B}[u, w] = \bigl(\varepsilon_1 p\,\nabla\cdot w + \varepsilon_2 \nabla q\cdot v,\;
                       -\tfrac{\varepsilon_3}{2}\nabla(pq) + \tfrac{\varepsilon_4}{2}\nabla(v\cdot w)\bigr)

   F(u) = (\partial_t u - \mathbb{A}u + \mathbb{B}[u,u] - f,\; u(0) - u_0)

Everything returned here is projected onto the truncated basis.  Products are
formed on the Gauss nodes; gradients of products are projected in weak form,
:math:`\langle \partial_i g, \sigma^k\rangle = -\langle g, \partial_i\sigma^k\rangle`,
which is exact because both factors vanish on the boundary.

Coefficient arrays may carry leading batch axes in front of the component
axis, e.g. ``(N+1, n, *modes)`` for all nodes of a trajectory.
"""
from __future__ import annotations

from functools import cached_property

import numpy as np
from scipy.integrate import trapezoid

from .basis import SpectralGrid, derivative, project, project_derivative, synth
from .errors import DimensionError
from .fields import Forcing, PVState, Trajectory, sq_H1, sq_L2
from .nondim import IbvpCoefficients

__all__ = ["ModelOperator", "apply_A", "apply_B", "residual", "residual_norm", "apply_Fprime", "f_tilde",
           "bilinear_l2_norm"]


def _kron_all(mats):
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


class ModelOperator:
    """Coefficients of the model bound to a spectral grid.

    :param grid: spectral grid
    :param coeffs: :class:`~acouwave.nondim.IbvpCoefficients`
    :param ledger: optional :class:`~acouwave.constants.ConstantsLedger` for bound checks
    """

    def __init__(self, grid: SpectralGrid, coeffs: IbvpCoefficients, ledger=None):
        self.grid = grid
        self.coeffs = coeffs
        self.ledger = ledger
        axes = tuple(ax.nodes for ax in grid.axes)
        self.one_gamma = 1.0 + coeffs.gamma_values(axes)
        self.one_delta = 1.0 + coeffs.delta_values(axes)

    @property
    def n(self) -> int:
        return self.grid.n_components

    @property
    def size(self) -> int:
        """Number of unknowns n·M."""
        return self.n * self.grid.size

    @property
    def state_shape(self) -> tuple[int, ...]:
        return (self.n,) + self.grid.modes

    @cached_property
    def forcing(self) -> Forcing:
        """The model's own source term, projected."""
        return self.coeffs.forcing(self.grid)

    def check_state(self, c) -> np.ndarray:
        if isinstance(c, PVState):
            if not c.grid.same_basis(self.grid):
                raise DimensionError("state lives on a different grid")
            c = c.coeffs
        c = np.asarray(c, float)
        if c.shape[c.ndim - self.grid.dim - 1:] != self.state_shape:
            raise DimensionError(f"state array of shape {c.shape} does not end with {self.state_shape}")
        return c

    # -- dense Galerkin matrices -----------------------------------------
    @cached_property
    def _tables(self):
        """Per-axis basis tables on the Gauss nodes: values, first derivatives, weights."""
        g = self.grid
        phi = [ax.sin for ax in g.axes]
        dphi = [[ax.cos if i == j else ax.sin for j, ax in enumerate(g.axes)] for i in range(g.dim)]
        return phi, dphi, g.weights

    def _gram(self, weight, left, right):
        """``Σ_x weight(x) φ_a(x) ψ_c(x)`` for tensor tables, contracted one axis at a time."""
        t = weight
        for lt, rt in zip(left, right):
            t = np.tensordot(t, lt[:, :, None] * rt[:, None, :], axes=([0], [0]))
        d = len(left)
        t = t.transpose([2 * i for i in range(d)] + [2 * i + 1 for i in range(d)])
        return t.reshape(self.grid.size, self.grid.size)

    @cached_property
    def linear_matrix(self) -> np.ndarray:
        """Dense Galerkin matrix of the linear operator (read-only)."""
        g, M, d = self.grid, self.grid.size, self.grid.dim
        phi, dphi, w = self._tables
        lam = g.eigenvalues.ravel()
        A = np.zeros((self.size, self.size))
        A[:M, :M] = np.diag(-self.coeffs.mu * lam)
        wg, wd = w * self.one_gamma, w * self.one_delta
        for i in range(d):
            rows = slice((i + 1) * M, (i + 2) * M)
            A[rows, rows] = np.diag(-self.coeffs.eta * lam)
            A[:M, rows] = -self._gram(wg, phi, dphi[i])
            A[rows, :M] = -self._gram(wd, phi, dphi[i])
        A.setflags(write=False)
        return A

    def bilinear_jacobian(self, ustar: np.ndarray) -> np.ndarray:
        """Dense matrix of ``w -> P(B[u*, w] + B[w, u*])``."""
        ustar = self.check_state(ustar)
        g, M, d = self.grid, self.grid.size, self.grid.dim
        e1, e2, e3, e4 = self.coeffs.eps
        J = np.zeros((self.size, self.size))
        if not any(self.coeffs.eps) or not ustar.any():
            return J
        phi, dphi, w = self._tables
        p = synth(g, ustar[0])
        v = synth(g, ustar[1:])
        dp = [derivative(g, ustar[0], i) for i in range(d)]
        divv = sum(derivative(g, ustar[1 + i], i) for i in range(d))
        vs = [slice((i + 1) * M, (i + 2) * M) for i in range(d)]
        # pressure row: eps1 (p* div w + q div v*) + eps2 (grad q . v* + grad p* . w)
        J[:M, :M] = self._gram(w * e1 * divv, phi, phi)
        for i in range(d):
            J[:M, :M] += self._gram(w * e2 * v[i], phi, dphi[i])
            J[:M, vs[i]] = self._gram(w * e1 * p, phi, dphi[i]) + self._gram(w * e2 * dp[i], phi, phi)
        # velocity rows: -eps3 grad(p* q) + eps4 grad(v* . w), projected in weak form
        for i in range(d):
            J[vs[i], :M] = self._gram(w * e3 * p, dphi[i], phi)
            for k in range(d):
                J[vs[i], vs[k]] = -self._gram(w * e4 * v[k], dphi[i], phi)
        return J

    def galerkin_matrix(self, ustar: np.ndarray | None = None) -> np.ndarray:
        """Dense ``M(u*) = A - J_B(u*)`` of the linearized Galerkin system."""
        if ustar is None:
            return np.array(self.linear_matrix)
        return self.linear_matrix - self.bilinear_jacobian(ustar)

    def linearized_apply(self, ustar: np.ndarray | None, w: np.ndarray) -> np.ndarray:
        """Matrix-free ``A w - B[u*, w] - B[w, u*]``."""
        out = apply_A(self, w)
        if ustar is not None and any(self.coeffs.eps):
            out = out - apply_B(self, ustar, w) - apply_B(self, w, ustar)
        return out


def _split(op: ModelOperator, c: np.ndarray):
    d = op.grid.dim
    ax = c.ndim - d - 1
    p = np.take(c, 0, axis=ax)
    v = np.moveaxis(np.take(c, np.arange(1, d + 1), axis=ax), ax, 0)
    return p, v


def _join(op: ModelOperator, p: np.ndarray, v) -> np.ndarray:
    d = op.grid.dim
    ax = p.ndim - d
    return np.stack([p] + list(v), axis=ax)


def apply_A(op: ModelOperator, s) -> np.ndarray:
    """Projected linear operator applied to coefficients (batch axes allowed)."""
    c = op.check_state(s)
    g, d = op.grid, op.grid.dim
    lam = g.eigenvalues
    p, v = _split(op, c)
    div = sum(derivative(g, v[i], i) for i in range(d))
    out_p = -op.coeffs.mu * lam * p - project(g, op.one_gamma * div)
    out_v = [-op.coeffs.eta * lam * v[i] - project(g, op.one_delta * derivative(g, p, i)) for i in range(d)]
    return _join(op, out_p, out_v)


def apply_B(op: ModelOperator, u, w) -> np.ndarray:
    """Projected bilinear term ``P B[u, w]`` (batch axes allowed and broadcast)."""
    cu, cw = op.check_state(u), op.check_state(w)
    g, d = op.grid, op.grid.dim
    e1, e2, e3, e4 = op.coeffs.eps
    if not any(op.coeffs.eps):
        return np.zeros(np.broadcast_shapes(cu.shape, cw.shape))
    p, v = _split(op, cu)
    q, ww = _split(op, cw)
    p_n, q_n = synth(g, p), synth(g, q)
    v_n = [synth(g, v[i]) for i in range(d)]
    w_n = [synth(g, ww[i]) for i in range(d)]
    div_w = sum(derivative(g, ww[i], i) for i in range(d))
    grad_q = [derivative(g, q, i) for i in range(d)]
    nodal_p = e1 * p_n * div_w + e2 * sum(grad_q[i] * v_n[i] for i in range(d))
    pq = p_n * q_n
    vw = sum(v_n[i] * w_n[i] for i in range(d))
    out_p = project(g, nodal_p)
    out_v = [project_derivative(g, 0.5 * e3 * pq - 0.5 * e4 * vw, i) for i in range(d)]
    return _join(op, out_p, out_v)


def _aligned(op: ModelOperator, traj: Trajectory):
    if not traj.grid.same_basis(op.grid):
        raise DimensionError("trajectory lives on a different grid")


def _forcing_samples(op: ModelOperator, f, times) -> np.ndarray:
    if f is None:
        return np.zeros((len(times),) + op.state_shape)
    if isinstance(f, Forcing):
        if not f.grid.same_basis(op.grid):
            raise DimensionError("forcing lives on a different grid")
        return f.sample(times)
    f = np.asarray(f, float)
    if f.shape != (len(times),) + op.state_shape:
        raise DimensionError(f"forcing samples have shape {f.shape}")
    return f


def _initial(op: ModelOperator, u0) -> np.ndarray:
    if u0 is None:
        return np.zeros(op.state_shape)
    return op.check_state(u0)


def residual(op: ModelOperator, traj: Trajectory, f=None, u0=None):
    """Nodal defect ``du/dt - A u + B[u,u] - f`` and initial defect ``u(0) - u0``."""
    _aligned(op, traj)
    u = traj.states
    defect = traj.dt_states - apply_A(op, u) + apply_B(op, u, u) - _forcing_samples(op, f, traj.times)
    return defect, u[0] - _initial(op, u0)


def residual_norm(op: ModelOperator, traj: Trajectory, f=None, u0=None) -> float:
    """Y norm of F(u): L²(L²) of the defect plus H¹ of the initial defect."""
    defect, init = residual(op, traj, f, u0)
    g = op.grid
    return float(np.sqrt(trapezoid(sq_L2(g, defect), traj.times) + sq_H1(g, init)))


def apply_Fprime(op: ModelOperator, ustar: Trajectory, h: Trajectory):
    """``(dh/dt - A h + B[u*, h] + B[h, u*], h(0))`` at every node."""
    _aligned(op, ustar)
    ustar.check_aligned(h)
    us, hs = ustar.states, h.states
    defect = h.dt_states - apply_A(op, hs) + apply_B(op, us, hs) + apply_B(op, hs, us)
    return defect, hs[0].copy()


def f_tilde(op: ModelOperator, ustar: Trajectory | None, f=None, u0=None):
    """Right-hand side ``(B[u*, u*] + f, u0)`` of the Newton linearization.

    The forcing is returned as a :class:`Forcing` that evaluates ``u*`` by linear
    interpolation, so it can be queried between nodes.
    """
    if isinstance(f, Forcing):
        base = f
    elif f is None:
        base = Forcing.zero(op.grid)
    else:
        raise DimensionError("f_tilde expects a Forcing")
    u0 = _initial(op, u0)
    if ustar is None or not any(op.coeffs.eps) or not ustar.states.any():
        return base, u0
    _aligned(op, ustar)

    def func(t):
        us = ustar.at(t)
        return apply_B(op, us, us) + base(t)

    return Forcing(op.grid, func), u0


def bilinear_l2_norm(op: ModelOperator, u: np.ndarray, w: np.ndarray, times: np.ndarray) -> float:
    """Unprojected :math:`\\|B[u,w]\\|_{L^2(0,T;L^2)}` for nodal coefficient samples.

    Evaluated in strong form on a Gauss grid exact for the squared products.
    """
    g = op.grid.refined(4)
    d = g.dim
    e1, e2, e3, e4 = op.coeffs.eps
    u, w = op.check_state(u), op.check_state(w)
    p, v = _split(op, u)
    q, ww = _split(op, w)
    p_n, q_n = synth(g, p), synth(g, q)
    v_n = [synth(g, v[i]) for i in range(d)]
    w_n = [synth(g, ww[i]) for i in range(d)]
    dp = [derivative(g, p, i) for i in range(d)]
    dq = [derivative(g, q, i) for i in range(d)]
    div_w = sum(derivative(g, ww[i], i) for i in range(d))
    sq = (e1 * p_n * div_w + e2 * sum(dq[i] * v_n[i] for i in range(d))) ** 2
    for i in range(d):
        grad_vw = sum(derivative(g, v[k], i) * w_n[k] + v_n[k] * derivative(g, ww[k], i) for k in range(d))
        sq = sq + (-0.5 * e3 * (dp[i] * q_n + p_n * dq[i]) + 0.5 * e4 * grad_vw) ** 2
    spatial = tuple(range(sq.ndim - d, sq.ndim))
    per_node = np.sum(g.weights * sq, axis=spatial)
    return float(np.sqrt(trapezoid(per_node, times)))
