"""Switched predictor feedback: the zoom schedule, detection events, the
(quantized) predictor evaluations, and the closed-loop bound checks.

The reference implementations here operate on whole-state snapshots and
are what the tests cross-validate the stepping core against; the per-step
hot path lives in the backend core.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gains import DesignConstants, InfeasibleError, QuantizerBudget, theorem_gamma
from .kernels import ParameterError
from .quantizers import QuantizerSpec, input_quantize, zoom_quantize_pair
from .transforms import CascadePair, TransformOperators, joint_norm

__all__ = [
    "EXACT",
    "STATE_QUANT",
    "INPUT_QUANT",
    "ZoomSchedule",
    "predictor_weights",
    "nominal_predictor",
    "quantized_predictor",
    "detect_t0_state",
    "detect_t0_input",
    "control_at",
    "lemma1_detection_bound",
    "lemma3_detection_bound",
    "BoundReport",
    "theorem_bound_check",
    "tail_slope",
]

EXACT = "exact"
STATE_QUANT = "state-quant"
INPUT_QUANT = "input-quant"


class ZoomSchedule:
    """Piecewise-constant zoom variable: exponential zoom-out intervals of
    length tau until detection, then geometric zoom-in every dwell period.

    The zoom-out interval in effect when detection fires is extended to
    the detection instant, and its value is frozen as mu(t0).
    """

    def __init__(self, constants: DesignConstants, tau: float, mu0: float):
        if tau <= 0 or mu0 <= 0:
            raise ParameterError("tau and mu0 must be positive")
        self.constants = constants
        self.tau = float(tau)
        self.mu0 = float(mu0)
        self.t0 = None
        self.mu_t0 = None

    def zoom_out_mu(self, t: float) -> float:
        j = math.floor(t / self.tau) + 1
        c = self.constants
        return c.mbar1 * math.exp(2.0 * c.sigma1 * (j + 1) * self.tau) * self.mu0

    def mark_detection(self, t0: float):
        self.t0 = float(t0)
        self.mu_t0 = self.zoom_out_mu(t0)

    def mu_at(self, t: float) -> float:
        """The scheduled zoom at time t (piecewise constant, right continuous)."""
        if self.t0 is None or t < self.t0:
            return self.zoom_out_mu(t)
        i = math.floor((t - self.t0) / self.constants.dwell) + 1
        mu = self.mu_t0
        for _ in range(i - 1):
            mu *= self.constants.omega
        return mu

    def phase_at(self, t: float) -> str:
        return "zoomout" if (self.t0 is None or t < self.t0) else "dwell"


def predictor_weights(ops: TransformOperators) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature rows realizing U_nom = int gamma(1,y) u dy + D int g(1,y) v dy.

    These are the x = 1 rows of the z-transformation operators, so the
    discrete target boundary z(t, 1) = U(t) - U_nom(t) holds identically.
    """
    return np.array(ops.op_gamma[-1, :]), np.array(ops.op_g[-1, :])


def nominal_predictor(pair: CascadePair, ops: TransformOperators) -> float:
    gw, dw = predictor_weights(ops)
    return float(gw @ pair.u.samples + dw @ pair.v.samples)


def quantized_predictor(pair: CascadePair, mu: float, ops: TransformOperators,
                        spec: QuantizerSpec) -> float:
    return nominal_predictor(zoom_quantize_pair(pair, mu, spec), ops)


def detect_t0_state(pair: CascadePair, mu: float, spec: QuantizerSpec,
                    constants: DesignConstants, budget: QuantizerBudget,
                    h: float, double_margin: bool = False) -> bool:
    """Detection event on quantized norms (all the controller can measure)."""
    m_mbar = budget.range * constants.mbar
    k = 2.0 if double_margin else 1.0
    if m_mbar <= k * budget.error:
        raise ParameterError("M*Mbar <= Delta: the detection set is empty")
    q = zoom_quantize_pair(pair, mu, spec)
    return joint_norm(q, h) <= (m_mbar - k * budget.error) * mu


def detect_t0_input(pair: CascadePair, mu: float, constants: DesignConstants,
                    budget: QuantizerBudget, h: float) -> bool:
    """Detection event on exact norms, scaled by the predictor gain bound."""
    thresh = budget.range * constants.mbar / constants.m3
    return joint_norm(pair, h) <= thresh * mu


def control_at(t: float, pair: CascadePair, mode: str, schedule: ZoomSchedule,
               ops: TransformOperators, spec: QuantizerSpec) -> float:
    """Reference control evaluation: zero before detection, then the
    mode's predictor."""
    if mode == EXACT:
        return nominal_predictor(pair, ops)
    if schedule.t0 is None or t < schedule.t0:
        return 0.0
    mu = schedule.mu_at(t)
    if mode == STATE_QUANT:
        return quantized_predictor(pair, mu, ops, spec)
    if mode == INPUT_QUANT:
        return input_quantize(nominal_predictor(pair, ops), mu, spec)
    raise ValueError(f"unknown controller mode {mode!r}")


def lemma1_detection_bound(joint0: float, mu0: float, budget: QuantizerBudget,
                           constants: DesignConstants) -> float:
    """Open-loop detection-time guarantee for state quantization."""
    floor = budget.range * constants.mbar - 2.0 * budget.error
    if floor <= 0:
        raise InfeasibleError("M*Mbar - 2*Delta must be positive")
    return max(0.0, math.log(joint0 / (mu0 * floor)) / constants.sigma1)


def lemma3_detection_bound(joint0: float, mu0: float, budget: QuantizerBudget,
                           constants: DesignConstants) -> float:
    """Detection-time guarantee for input quantization."""
    arg = constants.m3 * joint0 / (mu0 * budget.range * constants.mbar)
    return max(0.0, math.log(arg) / constants.sigma1)


@dataclass(frozen=True)
class BoundReport:
    ok: bool
    min_slack: float
    worst_time: float
    gamma_coefficient: float

    def describe(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return (f"trajectory bound: {status}; minimum slack {self.min_slack:.6g} "
                f"at t = {self.worst_time:.6g} (gamma = {self.gamma_coefficient:.6g})")


def trajectory_bound(times: np.ndarray, joint0: float, constants: DesignConstants,
                     budget: QuantizerBudget, tau: float, mu0: float,
                     mode: str) -> np.ndarray:
    """Right-hand side of the closed-loop stability estimate at each time."""
    which = "state" if mode == STATE_QUANT else "input"
    gamma = theorem_gamma(constants, budget, tau, mu0, which)
    rate = constants.overall_rate
    expo = 2.0 - rate / constants.sigma1
    return gamma * joint0**expo * np.exp(rate * np.asarray(times))


def theorem_bound_check(times, joints, constants, budget, tau, mu0, mode,
                        slack: float = 1.05) -> BoundReport:
    """Assert the stability estimate at every record, with multiplicative
    slack absorbing discretization; reports the minimum remaining slack."""
    times = np.asarray(times, dtype=float)
    joints = np.asarray(joints, dtype=float)
    rhs = trajectory_bound(times, joints[0], constants, budget, tau, mu0, mode)
    which = "state" if mode == STATE_QUANT else "input"
    gamma = theorem_gamma(constants, budget, tau, mu0, which)
    margin = rhs * slack - joints
    i = int(np.argmin(margin))
    return BoundReport(ok=bool(np.all(margin >= 0.0)),
                       min_slack=float(margin[i]),
                       worst_time=float(times[i]),
                       gamma_coefficient=gamma)


def tail_slope(times, values, t_from: float, t_to: float) -> float:
    """Least-squares slope of log(values) over records in [t_from, t_to]."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    mask = (times >= t_from) & (times <= t_to) & (values > 0)
    if mask.sum() < 3:
        raise ValueError("not enough records in the regression window")
    t = times[mask]
    y = np.log(values[mask])
    a = np.vstack([t, np.ones_like(t)]).T
    slope, _ = np.linalg.lstsq(a, y, rcond=None)[0]
    return float(slope)
