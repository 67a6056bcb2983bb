"""
Run configuration: a YAML file with nested blocks, parsed with line tracking so
that every validation error can point at the offending line.

Example::

    scenario: solve
    seed: 0
    domain: {lengths: [1.0, 1.0]}
    grid: {modes: [8, 8]}
    time: {T: 1.0, steps: 64}
    coefficients:
      ibvp: {mu: 0.1, eta: 0.1, eps: 0.01}
    initial:
      normH1: 0.1
      modes:
        - {component: p, k: [1, 1], amplitude: 1.0}
    forcing:
      - {component: p, k: [1, 1], amplitude: 0.5, decay: 1.0}
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .basis import RectDomain, SpectralGrid
from .errors import AcouwaveError, ConfigError
from .fields import Forcing, PVState, norm_H1, y_norm
from .nondim import (DimensionlessCoefficients, IbvpCoefficients, PhysicalMedium, derive_coefficients,
                     to_ibvp_coefficients)

__all__ = ["RunConfig", "load_config", "parse_config", "validate", "SCENARIOS", "SMALLNESS_NAME"]

SCENARIOS = ("solve", "converge", "decay", "semigroup", "kuznetsov", "ledger", "oracle")
SMALLNESS_NAME = "data smallness condition"

_TOP_KEYS = {"scenario", "seed", "output", "domain", "grid", "time", "coefficients", "initial", "forcing",
             "newton", "semigroup", "decay", "converge", "kuznetsov", "oracle", "ledger"}


# -- YAML with line numbers --------------------------------------------------

def _construct(node, path, lines):
    lines[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for key_node, val_node in node.value:
            key = key_node.value
            if key in out:
                raise ConfigError(f"duplicate key {key!r}", key_node.start_mark.line + 1)
            out[key] = _construct(val_node, path + (key,), lines)
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_construct(v, path + (i,), lines) for i, v in enumerate(node.value)]
    return yaml.safe_load(yaml.serialize(node))


def _parse_yaml(text: str):
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        raise ConfigError(f"malformed configuration: {exc.problem}", mark.line + 1 if mark else None) from exc
    if node is None:
        return {}, {}
    lines: dict[tuple, int] = {}
    data = _construct(node, (), lines)
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping", 1)
    return data, lines


# -- resolved configuration --------------------------------------------------

@dataclass
class RunConfig:
    raw: dict
    lines: dict
    scenario: str
    seed: int
    output: str | None
    lengths: tuple[float, ...]
    modes: tuple[int, ...]
    quad_nodes: tuple[int, ...] | None
    T: float
    steps: int
    coeffs: IbvpCoefficients
    dimensionless: DimensionlessCoefficients | None = None
    sl: float = 0.0
    initial: list = field(default_factory=list)
    init_norm: float | None = None
    forcing_terms: list = field(default_factory=list)

    def line(self, *path) -> int | None:
        while path and path not in self.lines:
            path = path[:-1]
        return self.lines.get(path)

    def block(self, name: str) -> dict:
        val = self.raw.get(name) or {}
        if not isinstance(val, dict):
            raise ConfigError(f"block {name!r} must be a mapping", self.line(name))
        return val

    @property
    def domain(self) -> RectDomain:
        return RectDomain(self.lengths)

    def grid(self) -> SpectralGrid:
        return SpectralGrid(self.domain, self.modes, self.quad_nodes)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.steps + 1)

    def initial_state(self, grid: SpectralGrid) -> np.ndarray:
        c = np.zeros((grid.n_components,) + grid.modes)
        for item in self.initial:
            c[(item["component"],) + tuple(k - 1 for k in item["k"])] += item["amplitude"]
        if self.init_norm is not None and c.any():
            c *= self.init_norm / norm_H1(PVState(grid, c))
        return c

    def forcing(self, grid: SpectralGrid) -> Forcing:
        """Mode-sum forcing ``Σ a e^{-decay t} cos(freq t + phase) σ_k`` plus any model source."""
        terms = list(self.forcing_terms)
        model = self.coeffs.forcing(grid)
        if not terms:
            return model
        shape = (grid.n_components,) + grid.modes

        def coeffs(t):
            out = np.zeros(shape) if model.is_zero else model(t).copy()
            for item in terms:
                env = item["amplitude"] * np.exp(-item["decay"] * t) * np.cos(item["freq"] * t + item["phase"])
                out[(item["component"],) + tuple(k - 1 for k in item["k"])] += env
            return out

        return Forcing(grid, coeffs)

    def resolved(self) -> dict:
        """The configuration with every default filled in, for the run summary."""
        c = self.coeffs
        out = copy.deepcopy(self.raw)
        out.update({
            "scenario": self.scenario, "seed": self.seed,
            "domain": {"lengths": list(self.lengths)},
            "grid": {"modes": list(self.modes), "quadNodes": list(self.grid().quad_nodes)},
            "time": {"T": self.T, "steps": self.steps},
        })
        out["resolvedCoefficients"] = {
            "mu": c.mu, "eta": c.eta, "eps": list(c.eps),
            "gamma": c.gamma if isinstance(c.gamma, (int, float)) or c.gamma is None else "field",
            "delta": c.delta if isinstance(c.delta, (int, float)) or c.delta is None else "field",
        }
        return out


_COMPONENTS = {"p": 0, "v1": 1, "v2": 2, "v3": 3, "vx": 1, "vy": 2, "vz": 3}


def _num(val, path, cfg_lines, kind=float, positive=False, allow_none=False):
    if val is None and allow_none:
        return None
    try:
        if isinstance(val, bool):
            raise TypeError
        out = kind(val)
        if kind is int and out != val:
            raise ValueError
    except (TypeError, ValueError):
        raise ConfigError(f"{'.'.join(map(str, path))} must be a {kind.__name__}, got {val!r}", _line(cfg_lines, path))
    if positive and not out > 0:
        raise ConfigError(f"{'.'.join(map(str, path))} must be positive", _line(cfg_lines, path))
    return out


def _line(lines, path):
    path = tuple(path)
    while path and path not in lines:
        path = path[:-1]
    return lines.get(path)


def _mode_items(items, path, lines, d, what):
    if items is None:
        return []
    if not isinstance(items, list):
        raise ConfigError(f"{what} must be a list of mode entries", _line(lines, path))
    out = []
    for i, item in enumerate(items):
        p = path + (i,)
        if not isinstance(item, dict):
            raise ConfigError(f"{what} entry must be a mapping", _line(lines, p))
        comp = item.get("component", "p")
        if comp not in _COMPONENTS or _COMPONENTS[comp] > d:
            raise ConfigError(f"unknown component {comp!r}", _line(lines, p + ("component",)))
        k = item.get("k")
        if not isinstance(k, list) or len(k) != d:
            raise ConfigError(f"k must list {d} mode indices", _line(lines, p + ("k",)))
        ks = [_num(x, p + ("k", j), lines, int) for j, x in enumerate(k)]
        out.append({
            "component": _COMPONENTS[comp], "k": ks, "line": _line(lines, p),
            "amplitude": _num(item.get("amplitude", 1.0), p + ("amplitude",), lines),
            "decay": _num(item.get("decay", 0.0), p + ("decay",), lines),
            "freq": _num(item.get("freq", 0.0), p + ("freq",), lines),
            "phase": _num(item.get("phase", 0.0), p + ("phase",), lines),
        })
    return out


def _coefficients(block, lines, d):
    if not isinstance(block, dict):
        raise ConfigError("coefficients must be a mapping", _line(lines, ("coefficients",)))
    present = [k for k in ("ibvp", "medium") if k in block]
    if len(present) != 1:
        raise ConfigError("coefficients need exactly one of the blocks 'ibvp' or 'medium'",
                          _line(lines, ("coefficients",)))
    key = present[0]
    body = block[key] or {}
    base = ("coefficients", key)
    try:
        if key == "ibvp":
            extra = set(body) - {"mu", "eta", "gamma", "delta", "eps"}
            if extra:
                raise ConfigError(f"unknown ibvp keys {sorted(extra)}", _line(lines, base + (sorted(extra)[0],)))
            eps = body.get("eps", 0.0)
            eps = [_num(e, base + ("eps", i), lines) for i, e in enumerate(eps)] if isinstance(eps, list) \
                else _num(eps, base + ("eps",), lines)
            coeffs = IbvpCoefficients(
                mu=_num(body.get("mu"), base + ("mu",), lines, positive=True),
                eta=_num(body.get("eta"), base + ("eta",), lines, positive=True),
                gamma=_num(body.get("gamma", 0.0), base + ("gamma",), lines) or None,
                delta=_num(body.get("delta", 0.0), base + ("delta",), lines) or None,
                eps=eps)
            return coeffs, None, 0.0
        sl = _num(body.get("sl", 0.0), base + ("sl",), lines)
        if "dimensionless" in body:
            dim = body["dimensionless"]
            dless = DimensionlessCoefficients.from_values(
                **{k: _num(v, base + ("dimensionless", k), lines) for k, v in dim.items()})
        else:
            fields_ = {k: v for k, v in body.items() if k != "sl"}
            medium = PhysicalMedium(**{k: _num(v, base + (k,), lines) for k, v in fields_.items()})
            dless = derive_coefficients(medium)
        return to_ibvp_coefficients(dless, sl), dless, sl
    except ConfigError:
        raise
    except (AcouwaveError, ValueError, TypeError) as exc:
        raise ConfigError(str(exc), _line(lines, base)) from exc


def parse_config(text: str, scenario: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Parse YAML text into a :class:`RunConfig`; command-line overrides win over the file."""
    data, lines = _parse_yaml(text)
    overrides = overrides or {}
    unknown = set(data) - _TOP_KEYS
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown top-level key {key!r}", _line(lines, (key,)))

    scen = scenario or data.get("scenario")
    if scen not in SCENARIOS:
        raise ConfigError(f"scenario must be one of {', '.join(SCENARIOS)}, got {scen!r}", _line(lines, ("scenario",)))
    seed = overrides.get("seed")
    if seed is None:
        seed = _num(data.get("seed", 0), ("seed",), lines, int)

    dom = data.get("domain") or {"lengths": [1.0, 1.0]}
    lens = dom.get("lengths") if isinstance(dom, dict) else None
    if not isinstance(lens, list) or not 1 <= len(lens) <= 3:
        raise ConfigError("domain.lengths must list 1 to 3 positive lengths", _line(lines, ("domain",)))
    lengths = tuple(_num(x, ("domain", "lengths", i), lines, positive=True) for i, x in enumerate(lens))
    d = len(lengths)

    grid = data.get("grid") or {}
    modes = overrides.get("modes") or grid.get("modes", 8)
    modes = modes if isinstance(modes, list) else [modes] * d
    if len(modes) != d:
        raise ConfigError(f"grid.modes must list {d} entries", _line(lines, ("grid", "modes")))
    modes = tuple(_num(m, ("grid", "modes", i), lines, int, positive=True) for i, m in enumerate(modes))
    quad = grid.get("quadNodes")
    if quad is not None:
        quad = quad if isinstance(quad, list) else [quad] * d
        quad = tuple(_num(q, ("grid", "quadNodes", i), lines, int, positive=True) for i, q in enumerate(quad))
        for m, q in zip(modes, quad):
            if q < np.ceil(1.5 * m):
                raise ConfigError(f"{q} quadrature nodes cannot dealias {m} modes", _line(lines, ("grid", "quadNodes")))

    tblock = data.get("time") or {}
    T = _num(tblock.get("T", 1.0), ("time", "T"), lines, positive=True)
    steps = overrides.get("steps") or _num(tblock.get("steps", 64), ("time", "steps"), lines, int, positive=True)

    coeffs, dless, sl = _coefficients(data.get("coefficients") or {"ibvp": {"mu": 0.1, "eta": 0.1}}, lines, d)

    init = data.get("initial") or {}
    if not isinstance(init, dict):
        raise ConfigError("initial must be a mapping", _line(lines, ("initial",)))
    initial = _mode_items(init.get("modes"), ("initial", "modes"), lines, d, "initial.modes")
    init_norm = _num(init.get("normH1"), ("initial", "normH1"), lines, allow_none=True)
    forcing = _mode_items(data.get("forcing"), ("forcing",), lines, d, "forcing")

    cfg = RunConfig(raw=data, lines=lines, scenario=scen, seed=int(seed), output=data.get("output"),
                    lengths=lengths, modes=modes, quad_nodes=quad, T=T, steps=int(steps), coeffs=coeffs,
                    dimensionless=dless, sl=sl, initial=initial, init_norm=init_norm, forcing_terms=forcing)
    _check_bands(cfg)
    return cfg


def _check_bands(cfg: RunConfig):
    for item in cfg.initial + cfg.forcing_terms:
        if any(not 1 <= k <= m for k, m in zip(item["k"], cfg.modes)):
            raise ConfigError(f"mode {item['k']} lies outside the resolved band {list(cfg.modes)}", item["line"])


def load_config(path: str | Path, scenario: str | None = None, overrides: dict | None = None) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc.strerror}") from exc
    return parse_config(text, scenario, overrides)


def validate(cfg: RunConfig, ledger=None) -> list[dict]:
    """Diagnostics ``{check, status, message}`` with status ``pass`` or ``warn``.

    Hard errors (malformed blocks, out-of-band modes) are raised while parsing.
    """
    from .constants import estimate_constants  # deferred: estimation costs seconds

    out = []
    grid = cfg.grid()
    _check_bands(cfg)
    out.append({"check": "modes in band", "status": "pass", "message": f"all modes within {list(cfg.modes)}"})
    u0 = cfg.initial_state(grid)
    f = cfg.forcing(grid)
    data = y_norm(f, u0, cfg.times, grid=grid)
    if data == 0.0:
        out.append({"check": "coefficient radius", "status": "pass", "message": "zero data"})
        out.append({"check": SMALLNESS_NAME, "status": "pass", "message": "zero data"})
        return out
    if ledger is None:
        ledger = estimate_constants(grid, cfg.coeffs, rng=cfg.seed)
    gamma_sup, delta_sup = cfg.coeffs.sup_norms(grid)
    ok = max(gamma_sup, delta_sup) <= ledger.r_tilde
    out.append({"check": "coefficient radius", "status": "pass" if ok else "warn",
                "message": f"max(|gamma|, |delta|) = {max(gamma_sup, delta_sup):.3g}, radius {ledger.r_tilde:.3g}"})
    value = ledger.cG ** 2 * ledger.K * data
    out.append({"check": SMALLNESS_NAME, "status": "pass" if value < 0.5 else "warn", "value": value,
                "message": f"{SMALLNESS_NAME}: C_G^2 C_B |eps| ||(f,u0)||_Y = {value:.3g} "
                           f"{'<' if value < 0.5 else '>='} 1/2"})
    return out
