"""Scenario configuration: plain `key = value` text, `#` comments,
unknown keys rejected.  Zero-dependency parsing keeps scenario files
trivially diffable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from .kernels import ParameterError, check_resonance
from .plant import delay_steps

__all__ = ["ConfigError", "ScenarioConfig", "parse_config", "parse_text", "serialize"]

MODES = ("exact", "state-quant", "input-quant", "open-loop")


class ConfigError(ValueError):
    """Malformed or inconsistent scenario configuration."""


_INT_KEYS = {"nx", "modes", "quad_points", "seed", "stride"}
_FLOAT_KEYS = {"lambda", "delay", "dt", "range", "delta", "deadzone", "saturation",
               "tau", "mu0", "margin", "horizon", "lambda1", "eps", "nu", "decay"}
_STR_KEYS = {"mode", "u0", "v0", "detect_margin"}
_REQUIRED = ("lambda", "delay", "nx", "dt", "modes", "range", "delta",
             "tau", "mu0", "margin", "mode", "horizon", "u0", "v0", "seed", "stride")
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS


@dataclass(frozen=True)
class ScenarioConfig:
    lam: float
    delay: float
    nx: int
    dt: float
    modes: int
    range: float
    delta: float
    tau: float
    mu0: float
    margin: float
    mode: str
    horizon: float
    u0: str
    v0: str
    seed: int
    stride: int
    quad_points: int = 0          # 0 means 20 * modes
    deadzone: float = 0.0         # 0 means delta / 2
    saturation: float = 10.0
    lambda1: float | None = None
    eps: float | None = None
    nu: float | None = None
    decay: float | None = None
    detect_margin: str = "single"

    def resolved_quad_points(self) -> int:
        return self.quad_points if self.quad_points else 20 * self.modes

    def resolved_deadzone(self) -> float:
        return self.deadzone if self.deadzone else self.delta / 2.0


def _parse_value(key: str, raw: str, lineno: int):
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
    except ValueError:
        raise ConfigError(f"line {lineno}: cannot parse {key} = {raw!r}") from None
    return raw


def parse_text(text: str) -> ScenarioConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in _ALL_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, raw, lineno)
    for key in _REQUIRED:
        if key not in values:
            raise ConfigError(f"missing required key {key!r}")
    cfg = ScenarioConfig(
        lam=values["lambda"], delay=values["delay"], nx=values["nx"],
        dt=values["dt"], modes=values["modes"], range=values["range"],
        delta=values["delta"], tau=values["tau"], mu0=values["mu0"],
        margin=values["margin"], mode=values["mode"], horizon=values["horizon"],
        u0=values["u0"], v0=values["v0"], seed=values["seed"],
        stride=values["stride"],
        quad_points=values.get("quad_points", 0),
        deadzone=values.get("deadzone", 0.0),
        saturation=values.get("saturation", 10.0),
        lambda1=values.get("lambda1"), eps=values.get("eps"),
        nu=values.get("nu"), decay=values.get("decay"),
        detect_margin=values.get("detect_margin", "single"),
    )
    _validate(cfg)
    return cfg


def parse_config(path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_text(fh.read())


def _validate(cfg: ScenarioConfig):
    if cfg.mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {cfg.mode!r}")
    if cfg.detect_margin not in ("single", "double"):
        raise ConfigError("detect_margin must be 'single' or 'double'")
    if cfg.lam <= 0:
        raise ConfigError("lambda must be positive")
    try:
        check_resonance(cfg.lam, cfg.modes)
    except ParameterError as exc:
        raise ConfigError(str(exc)) from None
    if cfg.dt <= 0 or cfg.delay <= 0:
        raise ConfigError("dt and delay must be positive")
    if cfg.nx < 50:
        raise ConfigError("nx must be at least 50")
    try:
        delay_steps(cfg.delay, cfg.dt, cfg.nx)
    except ParameterError as exc:
        raise ConfigError(str(exc)) from None
    tau_steps = cfg.tau / cfg.dt
    if abs(tau_steps - round(tau_steps)) > 1e-9 * max(1.0, tau_steps) or tau_steps < 1:
        raise ConfigError("tau must be a positive integer multiple of dt")
    if cfg.horizon <= 0:
        raise ConfigError("horizon must be positive")
    if cfg.stride < 1:
        raise ConfigError("stride must be at least 1")
    if cfg.seed < 0:
        raise ConfigError("seed must be nonnegative")
    if not 0 < cfg.delta < cfg.range:
        raise ConfigError("need 0 < delta < range")
    dz = cfg.resolved_deadzone()
    if not 0 < dz <= cfg.delta / 2.0:
        raise ConfigError("need 0 < deadzone <= delta/2")
    if cfg.saturation < 1.0:
        raise ConfigError("saturation must be >= 1")
    if not 0 <= cfg.margin < 1:
        raise ConfigError("margin must lie in [0, 1)")
    if cfg.mu0 <= 0:
        raise ConfigError("mu0 must be positive")
    if cfg.resolved_quad_points() < 20 * cfg.modes:
        raise ConfigError("quad_points must be at least 20 * modes")
    _ic_builders(cfg)  # raises on malformed initial-condition selectors


def serialize(cfg: ScenarioConfig) -> str:
    lines = []
    for key in _REQUIRED:
        attr = {"lambda": "lam"}.get(key, key)
        lines.append(f"{key} = {getattr(cfg, attr)}")
    for key, attr in (("quad_points", "quad_points"), ("deadzone", "deadzone"),
                      ("saturation", "saturation"), ("lambda1", "lambda1"),
                      ("eps", "eps"), ("nu", "nu"), ("decay", "decay"),
                      ("detect_margin", "detect_margin")):
        val = getattr(cfg, attr)
        if val is None:
            continue
        if key == "quad_points" and val == 0:
            continue
        if key == "deadzone" and val == 0.0:
            continue
        if key == "saturation" and val == 10.0:
            continue
        if key == "detect_margin" and val == "single":
            continue
        lines.append(f"{key} = {val}")
    return "\n".join(lines) + "\n"


def _ic_builders(cfg: ScenarioConfig):
    """Return (u0 sampler, v0 callable); validates the selectors."""
    rng = np.random.default_rng(cfg.seed)

    spec = cfg.u0.strip()
    if spec == "zero":
        def u0(x):
            return np.zeros_like(x)
    elif spec == "eigen":
        def u0(x):
            return np.sin(np.pi * x)
    elif spec == "random":
        coeffs = rng.normal(size=6) / np.arange(1, 7)
        norm = math.sqrt(0.5 * float(np.sum(coeffs**2)))
        coeffs = coeffs * (0.5 / norm)

        def u0(x, c=coeffs):
            k = np.arange(1, c.size + 1)
            return np.sin(np.pi * np.outer(x, k)) @ c
    elif spec.startswith("sine:"):
        try:
            coeffs = np.array([float(tok) for tok in spec[5:].split()], dtype=float)
        except ValueError:
            raise ConfigError(f"malformed u0 selector {cfg.u0!r}") from None
        if coeffs.size == 0:
            raise ConfigError("u0 = sine: needs at least one coefficient")

        def u0(x, c=coeffs):
            k = np.arange(1, c.size + 1)
            return np.sin(np.pi * np.outer(x, k)) @ c
    else:
        raise ConfigError(f"unknown u0 selector {cfg.u0!r}")

    spec_v = cfg.v0.strip()
    if spec_v == "zero":
        def v0(x):
            return np.zeros_like(np.asarray(x, dtype=float))
    elif spec_v == "random":
        ends = np.linspace(0.2, 1.0, 5)
        vals = rng.uniform(-0.5, 0.5, size=5)

        def v0(x, e=ends, v=vals):
            idx = np.searchsorted(e, np.asarray(x, dtype=float), side="right")
            return v[np.minimum(idx, v.size - 1)]
    elif spec_v.startswith("const:"):
        try:
            c = float(spec_v[6:])
        except ValueError:
            raise ConfigError(f"malformed v0 selector {cfg.v0!r}") from None

        def v0(x, c=c):
            return np.full_like(np.asarray(x, dtype=float), c)
    elif spec_v.startswith("steps:"):
        ends, vals = [], []
        try:
            for tok in spec_v[6:].split():
                end, val = tok.split("=")
                ends.append(float(end))
                vals.append(float(val))
        except ValueError:
            raise ConfigError(f"malformed v0 selector {cfg.v0!r}") from None
        if not ends or ends != sorted(ends) or not math.isclose(ends[-1], 1.0):
            raise ConfigError("v0 steps must have increasing ends, last = 1.0")
        e = np.array(ends)
        v = np.array(vals)

        def v0(x, e=e, v=v):
            idx = np.searchsorted(e, np.asarray(x, dtype=float), side="right")
            return v[np.minimum(idx, v.size - 1)]
    else:
        raise ConfigError(f"unknown v0 selector {cfg.v0!r}")

    return u0, v0


def initial_conditions(cfg: ScenarioConfig):
    """The (u0 sampler, v0 callable) pair for a validated config."""
    return _ic_builders(cfg)
