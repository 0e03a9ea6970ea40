"""Dynamic zoom quantizers for the state pair and the scalar input.

The underlying device is a mid-tread uniform lattice with per-sample
saturation; the zoom variable scales range and error together.  The
deadzone is a norm-level wrapper on the pair (zeroing both components
when the quantized output's joint norm falls below the threshold), and a
plain magnitude test for the scalar input quantizer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import ParameterError
from .transforms import CascadePair, Field, L2, SUP, quadrature_weights

__all__ = [
    "QuantizerSpec",
    "ZoomedQuantizer",
    "quantize_scalar",
    "quantize_field",
    "zoom_quantize_pair",
    "input_quantize",
    "verify_properties",
    "QuantizerReport",
]


@dataclass(frozen=True)
class QuantizerSpec:
    """Lattice step, range M, error bound Delta, deadzone, saturation factor.

    step equals the error bound: each of the two components then
    contributes at most Delta/2 to the joint quantization error, which
    meets the in-range error budget with no tuning.
    """

    range: float
    error: float
    deadzone: float
    saturation: float = 10.0

    def __post_init__(self):
        if not 0 < self.error < self.range:
            raise ParameterError("need 0 < Delta < M")
        if not 0 < self.deadzone < self.range:
            raise ParameterError("need 0 < M_hat < M")
        if self.deadzone > self.error / 2.0:
            raise ParameterError("need M_hat <= Delta/2 so the deadzone preserves "
                                 "the in-range error bound")
        if self.saturation < 1.0:
            raise ParameterError("saturation factor must be >= 1")

    @property
    def step(self) -> float:
        return self.error

    @property
    def levels(self) -> int:
        """Per-sample clip in lattice units, at +- saturation * M."""
        return int(np.rint(self.saturation * self.range / self.step))


def quantize_scalar(x: float, spec: QuantizerSpec) -> float:
    """Mid-tread lattice value nearest x, clipped at the saturation level."""
    k = np.rint(x / spec.step)
    k = min(max(k, -spec.levels), spec.levels)
    return float(k * spec.step)


def quantize_field(f: Field, spec: QuantizerSpec) -> Field:
    """Sample-wise mid-tread quantization, preserving the norm role."""
    k = np.rint(f.samples / spec.step)
    np.clip(k, -spec.levels, spec.levels, out=k)
    return Field(k * spec.step, f.role)


def _joint(u: np.ndarray, v: np.ndarray, w: np.ndarray) -> float:
    return float(np.sqrt(np.sum(w * u * u)) + np.max(np.abs(v)))


def zoom_quantize_pair(pair: CascadePair, mu: float, spec: QuantizerSpec) -> CascadePair:
    """Apply the scaling law q_mu(u, v) = mu * q(state / mu), with deadzone.

    If the joint norm of the scaled quantized output does not exceed
    deadzone * mu, both components are zeroed.
    """
    if mu <= 0:
        raise ParameterError(f"zoom variable must be positive, got {mu}")
    scaled_step = mu * spec.step
    ku = np.rint(pair.u.samples / scaled_step)
    kv = np.rint(pair.v.samples / scaled_step)
    np.clip(ku, -spec.levels, spec.levels, out=ku)
    np.clip(kv, -spec.levels, spec.levels, out=kv)
    qu = ku * scaled_step
    qv = kv * scaled_step
    n = qu.size
    w = quadrature_weights(n, 1.0 / (n - 1))
    if _joint(qu, qv, w) <= spec.deadzone * mu:
        qu = np.zeros_like(qu)
        qv = np.zeros_like(qv)
    return CascadePair.from_arrays(qu, qv)


def input_quantize(u_nom: float, mu: float, spec: QuantizerSpec) -> float:
    """Scalar zoom quantization with the input-magnitude deadzone."""
    if mu <= 0:
        raise ParameterError(f"zoom variable must be positive, got {mu}")
    if abs(u_nom) <= spec.deadzone * mu:
        return 0.0
    return mu * quantize_scalar(u_nom / mu, spec)


@dataclass(frozen=True)
class ZoomedQuantizer:
    """A quantizer spec bound to a current zoom value; freely copyable."""

    spec: QuantizerSpec
    mu: float

    def __post_init__(self):
        if self.mu <= 0:
            raise ParameterError("zoom variable must be positive")

    def pair(self, pair: CascadePair) -> CascadePair:
        return zoom_quantize_pair(pair, self.mu, self.spec)

    def scalar(self, value: float) -> float:
        return input_quantize(value, self.mu, self.spec)


# --- empirical property verification -----------------------------------

_REGIMES = ("deadzone", "in_range", "beyond")


@dataclass
class QuantizerReport:
    """Counts and worst margins from randomized P1-P3 verification."""

    samples_per_regime: int
    seed: int
    violations: list = field(default_factory=list)
    worst: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations

    def describe(self) -> str:
        lines = [f"quantizer property check: {'PASS' if self.passed else 'FAIL'} "
                 f"({self.samples_per_regime} draws/regime, seed {self.seed})"]
        for key in sorted(self.worst):
            lines.append(f"  {key}: worst margin {self.worst[key]:.3e}")
        for v in self.violations[:10]:
            lines.append(f"  VIOLATION {v}")
        return "\n".join(lines)


def _smooth_draws(rng, count, nodes, n_modes=6):
    """Random finite sine/cosine sums: one (u, v) pair per row."""
    x = np.linspace(0.0, 1.0, nodes)
    ks = np.arange(1, n_modes + 1)
    au = rng.normal(size=(count, n_modes)) / ks
    av = rng.normal(size=(count, n_modes + 1)) / np.arange(1, n_modes + 2)
    u = au @ np.sin(np.pi * np.outer(ks, x))
    v = av[:, :1] + av[:, 1:] @ np.cos(np.pi * np.outer(ks, x))
    return u, v


def _joint_rows(u, v, w):
    return np.sqrt((u * u) @ w) + np.max(np.abs(v), axis=1)


def verify_properties(spec: QuantizerSpec, sample_count: int = 10_000,
                      seed: int = 0, nodes: int = 201) -> QuantizerReport:
    """Draw random smooth pairs in each norm regime and test P1, P2, P3,
    plus the scalar input-quantizer analogues.

    Draws are scaled so their joint norms land in the deadzone regime
    (0, M_hat], the in-range regime (M_hat, M], and the out-of-range
    regime (M, c*M / 4]; the last cap keeps samples inside the per-sample
    saturation envelope, which is this device's standing operational
    assumption for unbounded-norm inputs.
    """
    if sample_count < 1_000:
        raise ParameterError("sample_count must be at least 1000")
    rng = np.random.default_rng(seed)
    w = quadrature_weights(nodes, 1.0 / (nodes - 1))
    report = QuantizerReport(samples_per_regime=sample_count, seed=seed)
    m, delta, mhat = spec.range, spec.error, spec.deadzone
    eps = 1e-12 * max(m, delta)

    for regime in _REGIMES:
        u, v = _smooth_draws(rng, sample_count, nodes)
        base = _joint_rows(u, v, w)
        if regime == "deadzone":
            target = rng.uniform(0.0, mhat, size=sample_count)
        elif regime == "in_range":
            target = rng.uniform(mhat, m, size=sample_count)
        else:
            target = rng.uniform(m * (1 + 1e-9), spec.saturation * m / 4.0,
                                 size=sample_count)
        scale = (target / base)[:, None]
        u *= scale
        v *= scale

        ku = np.clip(np.rint(u / spec.step), -spec.levels, spec.levels)
        kv = np.clip(np.rint(v / spec.step), -spec.levels, spec.levels)
        qu, qv = ku * spec.step, kv * spec.step
        out_norm = _joint_rows(qu, qv, w)
        dead = out_norm <= mhat
        qu[dead] = 0.0
        qv[dead] = 0.0
        out_norm = _joint_rows(qu, qv, w)
        err_norm = _joint_rows(qu - u, qv - v, w)
        joint = _joint_rows(u, v, w)

        in_range = joint <= m
        p1_bad = in_range & (err_norm > delta + eps)
        p2_bad = (~in_range) & (out_norm <= m - delta - eps)
        report.worst[f"P1[{regime}]"] = float(np.max(delta - err_norm[in_range])) \
            if in_range.any() else float("nan")
        if regime == "beyond":
            report.worst["P2[beyond]"] = float(np.min(out_norm - (m - delta)))
        if regime == "deadzone":
            p3_bad = np.abs(qu).max(axis=1) + np.abs(qv).max(axis=1) > 0.0
            if p3_bad.any():
                report.violations.append(
                    ("P3", regime, int(np.argmax(p3_bad))))
        for name, bad in (("P1", p1_bad), ("P2", p2_bad)):
            if bad.any():
                report.violations.append((name, regime, int(np.argmax(bad))))

    # scalar input quantizer sweeps
    for regime in _REGIMES:
        if regime == "deadzone":
            vals = rng.uniform(-mhat, mhat, size=sample_count)
        elif regime == "in_range":
            vals = rng.uniform(-m, m, size=sample_count)
        else:
            mag = rng.uniform(m * (1 + 1e-9), spec.saturation * m, size=sample_count)
            vals = mag * rng.choice([-1.0, 1.0], size=sample_count)
        q = np.clip(np.rint(vals / spec.step), -spec.levels, spec.levels) * spec.step
        q[np.abs(vals) <= mhat] = 0.0
        err = np.abs(q - vals)
        if regime == "deadzone":
            if np.any(q != 0.0):
                report.violations.append(("P3bar", regime, int(np.argmax(q != 0))))
        if regime in ("deadzone", "in_range"):
            bad = err > delta + eps
            report.worst[f"P1bar[{regime}]"] = float(np.max(delta - err))
            if bad.any():
                report.violations.append(("P1bar", regime, int(np.argmax(bad))))
        else:
            bad = np.abs(q) <= m - delta - eps
            report.worst["P2bar[beyond]"] = float(np.min(np.abs(q) - (m - delta)))
            if bad.any():
                report.violations.append(("P2bar", regime, int(np.argmax(bad))))
    return report
