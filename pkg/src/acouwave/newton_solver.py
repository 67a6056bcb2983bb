"""
Newton iteration for ``F(u) = 0`` starting from ``u = 0``.

Each step solves the linearization about the current iterate with the
right-hand side ``(B[u_k, u_k] + f, u0)``, which is algebraically the Newton
update for the quadratic residual.  Because the linear solver uses the same
midpoint discretization as the residual, the defect of the new iterate is
exactly ``B[δ, δ]`` at the nodes, with ``δ`` the last update.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .constants import estimate_constants
from .errors import ConvergenceError, DomainError
from .fields import Forcing, Trajectory, sq_L2, x_norm, y_norm
from .linear_solver import RadiusWarning, solve_linearized
from .operators import ModelOperator, apply_B, f_tilde, residual_norm

__all__ = ["NewtonControls", "NewtonReport", "kantorovich_check", "newton_solve", "global_decay_study",
           "fit_decay_rate"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class NewtonControls:
    """Stopping rules.

    The iteration stops as soon as the residual, relative to the data norm,
    drops below ``tolResidual`` or the X norm of the update drops below
    ``tolUpdate`` times the size of the iterate.
    """

    maxIter: int = 20
    tolResidual: float = 1e-10
    tolUpdate: float = 1e-11
    enforceKantorovich: bool = False

    def __post_init__(self):
        if not (self.tolResidual > 0 and self.tolUpdate > 0):
            raise DomainError("tolerances must be positive")
        if int(self.maxIter) != self.maxIter or self.maxIter < 1:
            raise DomainError("maxIter must be a positive integer")


@dataclass
class NewtonReport:
    residuals: list = field(default_factory=list)       # ||F(u^k)||_Y, k = 0, 1, ...
    updates: list = field(default_factory=list)         # ||u^{k+1} - u^k||_X
    ratios: list = field(default_factory=list)          # updates[k] / updates[k-1]^2
    identity: list = field(default_factory=list)        # per step: ||F(u^{k+1})||, ||P B[δ,δ]||, K ||δ||_X̃^2
    iterateNorms: list = field(default_factory=list)    # ||u^{k+1}||_X
    radiusViolations: list = field(default_factory=list)  # iterations whose frozen state left the radii
    beta: float = float("nan")
    K: float = float("nan")
    firstStep: float = float("nan")
    betaKProduct: float = float("nan")
    rMinus: float = float("nan")
    rPlus: float = float("nan")
    admissible: bool = False
    betaDiscrete: float = float("nan")
    dataNorm: float = 0.0
    converged: bool = False
    iterations: int = 0

    def as_dict(self) -> dict:
        return asdict(self)

    def table(self) -> list[dict]:
        """Per-iteration rows for CSV output."""
        rows = []
        for k, upd in enumerate(self.updates):
            ident = self.identity[k]
            rows.append({"iteration": k + 1, "residual": self.residuals[k + 1], "update": upd,
                         "ratio": self.ratios[k], "identity_defect": ident["defect"],
                         "bilinear_bound": ident["bound"]})
        return rows


def kantorovich_check(beta: float, K: float, first_step: float) -> dict:
    """Admissibility ``βK·first_step ≤ 1/2`` and the radii ``r± = (1 ± sqrt(1 - 2βK s)) / (βK)``."""
    if not (beta > 0 and K > 0):
        raise DomainError(f"beta and K must be positive, got beta={beta}, K={K}")
    if not first_step >= 0:
        raise DomainError("first step norm must be non-negative")
    product = beta * K * first_step
    if product > 0.5:
        return {"admissible": False, "product": product, "rMinus": float("nan"), "rPlus": float("nan")}
    root = np.sqrt(max(0.0, 1.0 - 2.0 * product))
    return {"admissible": True, "product": product,
            "rMinus": float((1.0 - root) / (beta * K)), "rPlus": float((1.0 + root) / (beta * K))}


def _bilinear_y(op: ModelOperator, delta: Trajectory) -> float:
    b = apply_B(op, delta.states, delta.states)
    return float(np.sqrt(trapezoid(sq_L2(op.grid, b), delta.times)))


def newton_solve(op: ModelOperator, f: Forcing | None, u0, times, controls: NewtonControls | None = None,
                 ledger=None, mode: str = "auto") -> tuple[Trajectory, NewtonReport]:
    """Solve ``F(u) = 0`` on ``times``.

    :param ledger: constants for the Kantorovich check; taken from ``op.ledger`` or
        estimated on ``op.grid`` when absent
    :raises ConvergenceError: after ``maxIter`` steps, carrying the report
    """
    controls = controls or NewtonControls()
    times = np.asarray(times, float)
    u0 = np.zeros(op.state_shape) if u0 is None else op.check_state(u0)
    if f is not None and not isinstance(f, Forcing):
        raise DomainError("f must be a Forcing or None")
    ledger = ledger or op.ledger
    if ledger is None and not op.coeffs.is_linear:
        ledger = estimate_constants(op.grid, op.coeffs, rng=0)

    report = NewtonReport()
    data = y_norm(f, u0, times, grid=op.grid)
    report.dataNorm = data
    scale = data if data > 0 else 1.0

    u = Trajectory.zeros(op.grid, times)
    report.residuals.append(residual_norm(op, u, f, u0))

    current = None
    for k in range(controls.maxIter):
        rhs, init = f_tilde(op, current, f, u0)
        new = solve_linearized(op, current, rhs, init, times, mode=mode, ledger=ledger if k else None, warn=False)
        if not all(v for key, v in new.flags.items() if key != "mode"):
            report.radiusViolations.append(k + 1)
        delta = new - u
        dx = x_norm(delta)
        report.updates.append(dx.x)
        report.iterateNorms.append(x_norm(new).x)
        prev = report.updates[-2] if k else float("nan")
        report.ratios.append(dx.x / prev ** 2 if k and prev > 0 else float("nan"))
        res = residual_norm(op, new, f, u0)
        report.residuals.append(res)
        K = ledger.K if ledger is not None else 0.0
        bil = _bilinear_y(op, delta)
        report.identity.append({"residual": res, "bilinear": bil, "defect": abs(res - bil),
                                "bound": K * dx.x_tilde ** 2})
        if k == 0:
            _first_step(report, ledger, dx.x, data, controls)
        u, current = new, new
        report.iterations = k + 1
        log.debug("newton %d: residual %.3e update %.3e", k + 1, res, dx.x)
        if res / scale <= controls.tolResidual or dx.x <= controls.tolUpdate * max(report.iterateNorms[-1], 1e-300):
            report.converged = True
            break
    u.flags["newton"] = report
    if report.radiusViolations:
        warnings.warn(f"frozen iterates left the a priori radii in iterations {report.radiusViolations}",
                      RadiusWarning, stacklevel=2)
    if not report.converged:
        raise ConvergenceError(f"Newton did not converge in {controls.maxIter} iterations "
                               f"(relative residual {report.residuals[-1] / scale:.3e})", report)
    return u, report


def _first_step(report: NewtonReport, ledger, first: float, data: float, controls: NewtonControls):
    report.firstStep = first
    report.betaDiscrete = first / data if data > 0 else float("nan")
    if ledger is None or not np.isfinite(ledger.cG) or not ledger.K > 0:
        # affine problem: one step is exact
        report.admissible = True
        report.rMinus, report.rPlus = first, float("inf")
        return
    report.beta, report.K = ledger.cG, ledger.K
    check = kantorovich_check(report.beta, report.K, first)
    report.betaKProduct = check["product"]
    report.admissible = check["admissible"]
    report.rMinus, report.rPlus = check["rMinus"], check["rPlus"]
    if controls.enforceKantorovich and not report.admissible:
        raise DomainError(f"Kantorovich condition fails: beta*K*firstStep = {check['product']:.3g} > 1/2")


def fit_decay_rate(times: np.ndarray, values: np.ndarray, start: float) -> float:
    """Least-squares rate ``-d/dt log(values)`` over ``t ≥ start`` on the nonzero prefix."""
    times, values = np.asarray(times, float), np.asarray(values, float)
    positive = values > 0
    prefix = positive.size if positive.all() else int(np.argmin(positive))
    sel = (times >= start) & (np.arange(times.size) < prefix)
    if sel.sum() < 2:
        sel = np.arange(times.size) < prefix
        if sel.sum() < 2:
            return float("inf")
    slope = np.polyfit(times[sel], np.log(values[sel]), 1)[0]
    return float(-slope)


def global_decay_study(op: ModelOperator, f: Forcing | None, u0, lam: float, horizon: float = 20.0,
                       steps: int = 400, controls: NewtonControls | None = None, ledger=None) -> dict:
    """Solve on a long horizon and compare the tail decay rate of ``||u(t)||_{H1}`` with ``lam``."""
    ceiling = min(op.coeffs.mu, op.coeffs.eta) * op.grid.lambda_min
    if not 0.0 < lam < ceiling:
        raise DomainError(f"decay rate must lie in (0, {ceiling:.6g}), got {lam}")
    times = np.linspace(0.0, horizon, steps + 1)
    traj, report = newton_solve(op, f, u0, times, controls, ledger=ledger)
    h1 = traj.norm_series("H1")
    if not np.any(h1 > 0):
        return {"fitRate": float("inf"), "bound": lam, "ceiling": ceiling, "satisfied": True,
                "trajectory": traj, "report": report}
    rate = fit_decay_rate(times, h1, 0.5 * horizon)
    return {"fitRate": rate, "bound": lam, "ceiling": ceiling, "satisfied": bool(rate >= lam),
            "trajectory": traj, "report": report}
