"""Acceptance suite: one test per headline criterion, each printing a PASS/FAIL line."""
import numpy as np
import pytest

from acouwave.basis import RectDomain, SpectralGrid
from acouwave.fields import Forcing, Trajectory, l2l2_norm, x_norm
from acouwave.linear_solver import apriori_check, solve_linearized
from acouwave.newton_solver import global_decay_study, newton_solve
from acouwave.nondim import IbvpCoefficients
from acouwave.operators import ModelOperator, apply_B, apply_Fprime, bilinear_l2_norm, residual
from acouwave.oracles.manufactured import manufactured_forcing, solution_error
from acouwave.scenarios import fd_study, kuznetsov_study, loglog_slope, observed_orders, smooth_solution
from acouwave.semigroup_lab import assemble_generator, dissipativity_margin, propagator_decay, resolvent_sweep

from conftest import random_state

SQUARE = RectDomain((1.0, 1.0))


def verdict(name: str, ok: bool, detail: str) -> None:
    print(f"\n{'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, detail


def _random_traj(rng, grid, times, scale=1.0, decay=1.0):
    """Smooth-in-time random trajectory with its exact time derivative."""
    a, b, c = (random_state(rng, grid, decay) for _ in range(3))
    w = rng.uniform(0.5, 4.0)
    t = np.asarray(times).reshape((-1,) + (1,) * a.ndim)
    states = scale * (a + t * b + np.sin(w * t) * c)
    rates = scale * (b + w * np.cos(w * t) * c)
    return Trajectory(grid, times, states, rates)


def test_dissipativity_margin():
    worst = 0.0
    cases = [((1.0,), m) for m in (1, 2, 4, 8, 16, 32)] + [((1.0, 1.0), m) for m in (1, 2, 4, 8, 16)]
    cases += [((2.5,), 32), ((1.0, 0.6), 16)]
    for lengths, m in cases:
        grid = SpectralGrid(RectDomain(lengths), m)
        for mu, eta in ((0.1, 0.1), (0.05, 0.3), (0.4, 0.02)):
            g = assemble_generator(grid, mu, eta)
            sym = 0.5 * (g.matrix + g.matrix.T)
            top = np.linalg.eigvalsh(sym)[-1]
            worst = max(worst, abs(top + min(mu, eta) * grid.lambda_min), abs(dissipativity_margin(g) + top))
    verdict("dissipativity margin", worst <= 1e-10, f"max deviation {worst:.2e} over {len(cases) * 3} generators")


def test_contraction_semigroup():
    rows = []
    for dom, m, mu, eta in ((SQUARE, 8, 0.1, 0.1), (RectDomain((1.0,)), 32, 0.05, 0.2),
                            (RectDomain((1.0, 2.0)), 8, 0.2, 0.05)):
        g = assemble_generator(SpectralGrid(dom, m), mu, eta)
        fixed = propagator_decay(g, times=[0.1, 1.0, 10.0])
        fit = propagator_decay(g, horizon=10.0, samples=21)
        rows.append((fixed["norms"].max(), fit["fitGamma"], g.eta_tilde))
    ok = all(n <= 1 + 1e-10 and gam >= eta - 1e-6 for n, gam, eta in rows)
    verdict("contraction semigroup", ok,
            "; ".join(f"max norm {n:.6f}, fit {gam:.4f} vs margin {eta:.4f}" for n, gam, eta in rows))


def test_resolvent_stability_under_refinement():
    sweeps = {m: resolvent_sweep(assemble_generator(SpectralGrid(SQUARE, m), 0.1, 0.1)) for m in (8, 16)}
    finite = all(not r["unbounded"] and np.isfinite(r["resolvent_norm"]) for rows in sweeps.values() for r in rows)
    changes = []
    for key in ("resolvent_norm", "lambda_times_norm"):
        a, b = (max(r[key] for r in sweeps[m]) for m in (8, 16))
        changes.append(abs(b - a) / a)
    verdict("resolvent stability", finite and max(changes) < 0.05,
            f"relative change of sweep maxima {changes[0]:.2e}, {changes[1]:.2e}")


def test_newton_quadratic_convergence(small_data_config, small_data_ledger):
    cfg = small_data_config
    grid = cfg.grid()
    op = ModelOperator(grid, cfg.coeffs, small_data_ledger)
    _, rep = newton_solve(op, cfg.forcing(grid), cfg.initial_state(grid), cfg.times)
    # ratios once the update reaches roundoff carry no information
    q = [r for r, upd in zip(rep.ratios, rep.updates) if np.isfinite(r) and upd > 1e-12 * rep.updates[0]]
    q_bound = small_data_ledger.cG * small_data_ledger.K
    identity = all(row["residual"] <= row["bound"] for row in rep.identity)
    ok = (rep.converged and rep.iterations <= 6 and rep.residuals[-1] <= 1e-10 and identity
          and len(q) >= 1 and max(q) <= q_bound)
    verdict("Newton quadratic convergence", ok,
            f"{rep.iterations} iterations, residual {rep.residuals[-1]:.2e}, q_k {[f'{x:.3e}' for x in q]} "
            f"<= {q_bound:.3g}, identity bound holds: {identity}")


def test_apriori_estimate(small_data_config, small_data_ledger):
    cfg = small_data_config
    grid = cfg.grid()
    led = small_data_ledger
    op = ModelOperator(grid, cfg.coeffs, led)
    times = cfg.times[::4]
    rng = np.random.default_rng(11)
    ratios = []
    for k in range(12):
        u0 = 0.1 * random_state(rng, grid, 2.0)
        f = Forcing.separable(grid, 0.1 * random_state(rng, grid, 1.0), lambda t, w=rng.uniform(0, 5): np.cos(w * t))
        ustar = None
        if k % 2:
            ustar = _random_traj(rng, grid, times, decay=2.0)
            ustar = ustar.scaled(0.5 * led.r / x_norm(ustar).x_tilde)
        res = apriori_check(solve_linearized(op, ustar, f, u0, times, ledger=led), f, u0, led)
        ratios.append(res["lhs"] / res["rhs"])
    verdict("a priori estimate", max(ratios) <= 1.0,
            f"{len(ratios)} solves, max ||u||_X / (C_G ||(f,u0)||_Y) = {max(ratios):.3e}")


def test_exponential_decay(small_data_config, small_data_ledger):
    cfg = small_data_config
    grid = cfg.grid()
    op = ModelOperator(grid, cfg.coeffs, small_data_ledger)
    bound = 0.9 * min(cfg.coeffs.mu, cfg.coeffs.eta) * grid.lambda_min
    res = global_decay_study(op, None, cfg.initial_state(grid), bound, horizon=20.0, steps=400)
    verdict("exponential decay", res["satisfied"], f"fitted rate {res['fitRate']:.4f} >= {bound:.4f}")


def _richardson(op, ms, n):
    """Time-extrapolated solution error, isolating the spatial truncation."""
    sols = []
    for k in (n, 2 * n):
        times = np.linspace(0, 1, k + 1)
        f, u0 = manufactured_forcing(ms, op, times)
        sols.append(newton_solve(op, f, u0, times)[0])
    coarse, fine = sols
    states = (4 * fine.states[::2] - coarse.states) / 3
    rates = (4 * fine.dt_states[::2] - coarse.dt_states) / 3
    return solution_error(ms, Trajectory(op.grid, coarse.times, states, rates))


def test_manufactured_convergence():
    op = ModelOperator(SpectralGrid(SQUARE, 12), IbvpCoefficients(mu=0.1, eta=0.1, eps=0.01))
    ms = smooth_solution(SQUARE, 0.5)
    errors = []
    for n in (16, 32, 64):
        times = np.linspace(0, 1, n + 1)
        f, u0 = manufactured_forcing(ms, op, times)
        errors.append(solution_error(ms, newton_solve(op, f, u0, times)[0]))
    t_orders = observed_orders(errors)

    line = RectDomain((1.0,))
    ms1 = smooth_solution(line, 1.0)
    coeffs = IbvpCoefficients(mu=0.1, eta=0.1, eps=0.01)
    s_errors = [_richardson(ModelOperator(SpectralGrid(line, m), coeffs), ms1, 256) for m in (2, 4, 8)]
    s_orders = observed_orders(s_errors)
    ok = (all(abs(o - 2.0) <= 0.1 for o in t_orders) and all(np.diff(s_errors) < 0)
          and s_orders[1] > s_orders[0] > 2.0)
    verdict("manufactured solution", ok,
            f"temporal orders {np.round(t_orders, 4).tolist()}, spatial errors "
            f"{[f'{e:.2e}' for e in s_errors]} with orders {np.round(s_orders, 2).tolist()}")


@pytest.mark.parametrize("eps", [0.0, 0.05], ids=["linear", "nonlinear"])
def test_finite_difference_oracle(eps):
    rows = fd_study(IbvpCoefficients(mu=0.1, eta=0.1, eps=eps), SQUARE, 12, [1 / 16, 1 / 32, 1 / 64], 1.0, 32)
    gap = rows[1]["gap"]
    orders = [r["order"] for r in rows[1:]]
    ok = gap <= 0.05 and all(abs(o - 2.0) <= 0.4 for o in orders)
    verdict(f"finite-difference oracle (eps={eps})", ok,
            f"gap at h=1/32 {gap:.3%}, orders {np.round(orders, 3).tolist()}")


def test_kuznetsov_consistency():
    eps = [0.02, 0.01, 0.005]
    diffs = [r["difference"] for r in kuznetsov_study(eps)]
    slope = loglog_slope(eps, diffs)
    verdict("Kuznetsov consistency", abs(slope - 2.0) <= 0.3,
            f"differences {[f'{d:.3e}' for d in diffs]}, log-log slope {slope:.3f}")


def test_bilinear_estimate(small_data_config, small_data_ledger):
    cfg = small_data_config
    grid = cfg.grid()
    led = small_data_ledger
    op = ModelOperator(grid, cfg.coeffs, led)
    times = np.linspace(0, 1, 5)
    rng = np.random.default_rng(23)
    worst = 0.0
    for _ in range(1000):
        u = _random_traj(rng, grid, times, decay=rng.uniform(0.0, 3.0))
        w = _random_traj(rng, grid, times, decay=rng.uniform(0.0, 3.0))
        lhs = bilinear_l2_norm(op, u.states, w.states, times)
        worst = max(worst, lhs / (led.K * x_norm(u).x_tilde * x_norm(w).x_tilde))
    verdict("bilinear estimate", worst <= 1.0, f"1000 pairs, max ratio to C_B|eps| bound {worst:.3e}")


def test_frechet_exactness(small_data_ledger):
    grid = SpectralGrid(SQUARE, 8)
    coeffs = IbvpCoefficients(mu=0.1, eta=0.1, eps=0.01)
    op = ModelOperator(grid, coeffs, small_data_ledger)
    times = np.linspace(0, 1, 9)
    rng = np.random.default_rng(31)
    defect_worst, lip_worst = 0.0, 0.0
    for _ in range(20):
        u, h = _random_traj(rng, grid, times), _random_traj(rng, grid, times)
        fuh, iuh = residual(op, u + h)
        fu, iu = residual(op, u)
        dh, ih = apply_Fprime(op, u, h)
        gap = np.abs(fuh - fu - dh - apply_B(op, h.states, h.states)).max()
        defect_worst = max(defect_worst, gap / max(1.0, np.abs(fuh).max()), np.abs(iuh - iu - ih).max())
        w = _random_traj(rng, grid, times)
        du, _ = apply_Fprime(op, u, h)
        dw, _ = apply_Fprime(op, w, h)
        lhs = l2l2_norm(grid, times, du - dw)
        lip_worst = max(lip_worst, lhs / (2 * small_data_ledger.K * x_norm(u - w).x_tilde * x_norm(h).x_tilde))
    ok = defect_worst <= 1e-10 and lip_worst <= 1.0
    verdict("Frechet exactness", ok,
            f"identity defect {defect_worst:.2e}, Lipschitz ratio to 2 C_B|eps| bound {lip_worst:.3e}")
