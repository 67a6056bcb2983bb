r"""
Embedding constants and the constants of the energy estimates.

The embedding constants

* :math:`\|v\|_{L^4} \le C_Q \|\nabla v\|`
* :math:`\|\nabla w\|_{L^4} \le C_R \|\Delta w\|`
* :math:`\|w\|_{L^\infty} \le C_S \|\Delta w\|`
* :math:`\|w\|_{H^2} \le C_\Delta \|\Delta w\|`

are estimated by maximizing the corresponding quotients over the truncated
basis, so every value is a lower bound of the true constant.  The quartic
quotients are convex on the unit sphere after rescaling by powers of
:math:`\Lambda_k`, and the ascent ``a <- grad / |grad|`` increases the objective
monotonically from any start.  Seeding a larger cutoff with the maximizer
found on a smaller one therefore makes the estimates non-decreasing in m.

From these the bilinear constant :math:`C_B` and the energy-estimate
constants (c, C₁, C₂, c̲, σ, C̃_G, C_G) and radii (r, r̃) follow in closed form.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields
from math import pi, sqrt

import numpy as np
from scipy.optimize import minimize

from .basis import SpectralGrid, analyze, derivative, project_derivative, synth
from .errors import EstimationError

__all__ = ["ConstantsLedger", "estimate_constants", "embedding_constants", "energy_constants", "bilinear_constant"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConstantsLedger:
    """Numerically estimated constants.

    Embedding constants are lower bounds obtained over the truncated basis
    (``lower_bounds`` is always True).  The energy constants are ``nan`` when
    no model coefficients were supplied or when the coefficients violate the
    smallness requirement on γ, δ (``coefficients_admissible`` False).
    """

    dim: int
    lambda_min: float
    cP: float
    cQ: float
    cR: float
    cS: float
    cDelta: float
    cB: float
    cB_parts: tuple[float, float, float, float]
    eps_norm: float = float("nan")
    c: float = float("nan")
    C1: float = float("nan")
    C2: float = float("nan")
    under_c: float = float("nan")
    sigma_young: float = float("nan")
    cG_tilde: float = float("nan")
    cG: float = float("nan")
    r: float = float("nan")
    r_tilde: float = float("nan")
    coefficients_admissible: bool = False
    lower_bounds: bool = True
    modes: tuple[int, ...] = ()
    maximizers: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def K(self) -> float:
        """Lipschitz constant :math:`C_B|\\varepsilon|` of the derivative."""
        return self.cB * self.eps_norm

    def cG_for(self, ustar_norm: float, mu: float, eta: float, gamma_sup: float, delta_sup: float) -> float:
        """A priori constant for a specific frozen coefficient of size ``ustar_norm`` in X̃."""
        return (max(mu, eta) + 1.0 + max(gamma_sup, delta_sup) + 2.0 * self.K * ustar_norm) * self.cG_tilde + 1.0

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            if f.name == "maximizers":
                continue
            val = getattr(self, f.name)
            out[f.name] = list(val) if isinstance(val, tuple) else val
        return out


# -- embedding constants ---------------------------------------------------

def _ascent(step, a0, tol, maxiter):
    """Normalized gradient ascent for a convex objective on the unit sphere."""
    a = a0 / np.linalg.norm(a0)
    obj, grad = step(a)
    history = [obj]
    for _ in range(maxiter):
        gn = np.linalg.norm(grad)
        if gn == 0:
            break
        a_new = grad / gn
        obj_new, grad_new = step(a_new)
        history.append(obj_new)
        done = obj_new - obj <= tol * abs(obj_new)
        a, obj, grad = a_new, obj_new, grad_new
        if done:
            return a, obj, history, True
    return a, obj, history, False


def _starts(grid: SpectralGrid, rng, restarts: int, warm=None):
    M = grid.size
    starts = []
    e1 = np.zeros(grid.modes)
    e1[(0,) * grid.dim] = 1.0
    starts.append(e1)
    # a smooth bump-like start: coefficients of a product of sin^3 profiles decay fast
    starts.append(np.exp(-grid.eigenvalues / grid.lambda_min))
    for _ in range(restarts):
        starts.append(rng.standard_normal(grid.modes))
    if warm is not None:
        starts.append(_embed(warm, grid.modes))
    return [s.reshape(grid.modes) for s in starts if np.linalg.norm(s) > 0][: M + restarts + 3]


def _embed(c: np.ndarray, modes) -> np.ndarray:
    out = np.zeros(modes)
    sl = tuple(slice(0, min(a, b)) for a, b in zip(c.shape, modes))
    out[sl] = c[sl]
    return out


def _maximize(name, grid, step, rng, restarts, warm, tol, maxiter):
    best = (-np.inf, None)
    failures = []
    for a0 in _starts(grid, rng, restarts, warm):
        a, obj, hist, ok = _ascent(step, a0, tol, maxiter)
        if not ok:
            failures.append(hist[-5:])
            continue
        if obj > best[0]:
            best = (obj, a)
    if best[1] is None:
        raise EstimationError(f"{name}: quotient maximization did not converge from any start",
                              {"last_objectives": failures})
    return best


def estimate_cQ(grid: SpectralGrid, rng=None, restarts=6, warm=None, tol=1e-13, maxiter=5000):
    """Largest :math:`\\|v\\|_{L^4}/\\|\\nabla v\\|` over the span; returns ``(value, maximizer_a)``."""
    rng = np.random.default_rng(rng)
    fine = grid.refined(4)
    scale = 1.0 / np.sqrt(grid.eigenvalues)

    def step(a):
        v = synth(fine, scale * a)
        obj = float(np.sum(fine.weights * v ** 4))
        return obj, scale * analyze(fine, v ** 3)

    obj, a = _maximize("C_Q", grid, step, rng, restarts, warm, tol, maxiter)
    return obj ** 0.25, a


def estimate_cR(grid: SpectralGrid, rng=None, restarts=6, warm=None, tol=1e-13, maxiter=5000):
    """Largest :math:`\\|\\nabla w\\|_{L^4}/\\|\\Delta w\\|`, with the componentwise L⁴ sum."""
    rng = np.random.default_rng(rng)
    fine = grid.refined(4)
    scale = 1.0 / grid.eigenvalues

    def step(a):
        c = scale * a
        obj, g = 0.0, np.zeros(grid.modes)
        for i in range(grid.dim):
            dw = derivative(fine, c, i)
            obj += float(np.sum(fine.weights * dw ** 4))
            g += project_derivative(fine, dw ** 3, i)
        return obj, scale * g

    obj, a = _maximize("C_R", grid, step, rng, restarts, warm, tol, maxiter)
    return obj ** 0.25, a


def estimate_cS(grid: SpectralGrid):
    r"""Largest :math:`\|w\|_\infty/\|\Delta w\|`.

    For a fixed point x the optimal w follows from Cauchy-Schwarz, leaving the
    maximization of :math:`\sum_k \sigma^k(x)^2/\Lambda_k^2` over the box.
    """
    inv2 = 1.0 / grid.eigenvalues ** 2
    letters = "abc"[: grid.dim]
    spec = ",".join("p" + a for a in letters) + "," + letters + "->p"

    def density(points):
        tabs = [ax.table(np.atleast_1d(x), 0) ** 2 for ax, x in zip(grid.axes, points)]
        return np.einsum(spec, *tabs, inv2)

    axes = [np.linspace(0.0, ax.L, 8 * ax.m + 9) for ax in grid.axes]
    mesh = [x.ravel() for x in np.meshgrid(*axes, indexing="ij")]
    vals = density(mesh)
    x0 = np.array([x[np.argmax(vals)] for x in mesh])
    bounds = [(0.0, ax.L) for ax in grid.axes]
    res = minimize(lambda x: -density([np.array([xi]) for xi in x])[0], x0, method="L-BFGS-B", bounds=bounds)
    best = max(float(vals.max()), float(-res.fun))
    return sqrt(best)


def estimate_cDelta(grid: SpectralGrid) -> float:
    """:math:`\\max_k (1 + \\Lambda_k + \\Lambda_k^2)^{1/2}/\\Lambda_k`, attained at the lowest mode."""
    lam = grid.eigenvalues
    return float(np.sqrt(((1.0 + lam + lam ** 2) / lam ** 2).max()))


def embedding_constants(grid: SpectralGrid, rng=None, restarts=6, warm: ConstantsLedger | None = None) -> dict:
    rng = np.random.default_rng(rng)
    warm_max = warm.maximizers if warm is not None else {}
    cQ, aQ = estimate_cQ(grid, rng, restarts, warm_max.get("cQ"))
    cR, aR = estimate_cR(grid, rng, restarts, warm_max.get("cR"))
    return {
        "lambda_min": grid.lambda_min,
        "cP": 1.0 / sqrt(grid.lambda_min),
        "cQ": cQ,
        "cR": cR,
        "cS": estimate_cS(grid),
        "cDelta": estimate_cDelta(grid),
        "maximizers": {"cQ": aQ, "cR": aR},
    }


def bilinear_constant(cQ: float, cR: float, d: int) -> tuple[float, tuple[float, float, float, float]]:
    """:math:`C_B = 4\\max\\{C_1, \\dots, C_4\\}` from the four term-wise estimates."""
    base = cQ * cR
    parts = (base, sqrt(d) * base, sqrt(d / 2.0) * base, d * base / sqrt(2.0))
    return 4.0 * max(parts), parts


def energy_constants(cP, cDelta, cB, d, mu, eta, gamma_sup, delta_sup, eps_norm) -> dict:
    """Closed-form constants of the energy estimate for the linearized problem.

    Returns ``nan`` entries (and ``coefficients_admissible=False``) when the
    dissipation margin ``min(mu, eta) - c`` is not positive.
    """
    lo, hi = min(mu, eta), max(mu, eta)
    c = 0.5 * cP ** 2 * (gamma_sup + d * delta_sup)
    r_tilde = lo / (cP ** 2 * d)
    out = {"eps_norm": eps_norm, "c": c, "r_tilde": r_tilde}
    margin = lo - c
    admissible = margin > 0 and gamma_sup <= r_tilde and delta_sup <= r_tilde
    if margin <= 0:
        nan = float("nan")
        out.update(C1=nan, C2=nan, under_c=nan, sigma_young=nan, cG_tilde=nan, cG=nan, r=nan,
                   coefficients_admissible=False)
        return out
    C1 = (1.0 + 0.5 * (gamma_sup + delta_sup)) ** 2 * cDelta ** 2 / lo
    C2 = margin / (2.0 * cP ** 2 * C1)
    under_c = 0.25 * min(0.5, 0.5 * C2, margin / (2.0 * cP ** 2), C2 * lo / (2.0 * cDelta ** 2))
    sigma_young = 0.5 * under_c / (C2 + 1.0)
    cG_tilde = sqrt(2.0 / under_c * max((C2 + 1.0) / (2.0 * sigma_young), 0.5 * C2, 0.5))
    K = cB * eps_norm
    r = under_c / (8.0 * K) / (C2 + 1.0) if K > 0 else float("inf")
    # C_G is evaluated uniformly over the ball ||u*|| <= r, where 2 K r = c̲ / (4 (C₂ + 1))
    two_K_r = under_c / (4.0 * (C2 + 1.0))
    cG = (hi + 1.0 + max(gamma_sup, delta_sup) + two_K_r) * cG_tilde + 1.0
    out.update(C1=C1, C2=C2, under_c=under_c, sigma_young=sigma_young, cG_tilde=cG_tilde, cG=cG, r=r,
               coefficients_admissible=bool(admissible))
    return out


def estimate_constants(grid: SpectralGrid, coeffs=None, rng=None, restarts: int = 6,
                       warm: ConstantsLedger | None = None) -> ConstantsLedger:
    """Assemble the full ledger on ``grid``.

    :param coeffs: :class:`~acouwave.nondim.IbvpCoefficients`; without them only
        the embedding and bilinear constants are filled in
    :param rng: seed or generator for the random restarts
    :param warm: ledger from a smaller cutoff whose maximizers seed this search
    """
    emb = embedding_constants(grid, rng, restarts, warm)
    cB, parts = bilinear_constant(emb["cQ"], emb["cR"], grid.dim)
    kw = dict(dim=grid.dim, lambda_min=emb["lambda_min"], cP=emb["cP"], cQ=emb["cQ"], cR=emb["cR"],
              cS=emb["cS"], cDelta=emb["cDelta"], cB=cB, cB_parts=parts, modes=grid.modes,
              maximizers=emb["maximizers"])
    if coeffs is not None:
        gamma_sup, delta_sup = coeffs.sup_norms(grid)
        kw.update(energy_constants(emb["cP"], emb["cDelta"], cB, grid.dim, coeffs.mu, coeffs.eta,
                                   gamma_sup, delta_sup, coeffs.eps_norm))
        if not kw["coefficients_admissible"]:
            log.warning("gamma/delta exceed the admissible radius %.3g; energy constants may be meaningless",
                        kw["r_tilde"])
    return ConstantsLedger(**kw)


def unit_poincare(dom_lengths) -> float:
    """Poincaré constant of a box, :math:`1/\\sqrt{\\Lambda_{min}}`."""
    return 1.0 / sqrt(sum((pi / L) ** 2 for L in dom_lengths))
