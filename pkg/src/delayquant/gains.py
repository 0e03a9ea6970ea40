"""Design-constant ledger: transform norm bounds, spectral constants, the
small-gain parameter, contraction factors, and the quantizer feasibility
certificate.

Every value is a deterministic function of the plant parameters, kernel
tables, quantizer budget, and the small-gain margin; recomputing from the
same inputs reproduces the ledger bit for bit.

The norm bounds (k~, l~, g~, p~, gamma~, delta~) are evaluated from the
discrete transform operators, so the two-sided norm equivalence holds as
exact weighted-space algebra on the grid, not merely up to quadrature
error.  They agree with direct grid quadrature of the kernel tables to
O(h^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import KernelTables, ParameterError, check_resonance
from .transforms import TransformOperators

__all__ = [
    "InfeasibleError",
    "PlantParams",
    "QuantizerBudget",
    "TildeConstants",
    "DesignConstants",
    "BudgetCertificate",
    "compute_tilde_constants",
    "compute_equivalence",
    "compute_spectral_constants",
    "select_lambda1",
    "select_auxiliaries",
    "compute_omega_T",
    "design_constants",
    "validate_budget",
    "theorem_gamma",
]

PI2 = math.pi * math.pi


class InfeasibleError(ValueError):
    """No admissible parameter choice exists for the requested inputs."""


@dataclass(frozen=True)
class PlantParams:
    """Reaction coefficient and input delay of the controlled plant."""

    lam: float
    delay: float

    def __post_init__(self):
        if self.lam <= PI2:
            raise ParameterError(
                f"lambda = {self.lam} <= pi^2; the design targets the unstable case"
            )
        if self.delay <= 0:
            raise ParameterError("delay must be positive")


@dataclass(frozen=True)
class QuantizerBudget:
    """Quantizer range M, error bound Delta, and deadzone threshold M_hat."""

    range: float
    error: float
    deadzone: float

    def __post_init__(self):
        if not 0 < self.error < self.range:
            raise ParameterError("need 0 < Delta < M")
        if not 0 < self.deadzone < self.range:
            raise ParameterError("need 0 < M_hat < M")


@dataclass(frozen=True)
class TildeConstants:
    k: float
    l: float
    g: float
    p: float
    gamma: float
    delta: float


def _hilbert_schmidt(op: np.ndarray, w: np.ndarray) -> float:
    return float(np.sqrt(np.sum(w[:, None] * op * op / w[None, :])))


def _max_row_l2(op: np.ndarray, w: np.ndarray) -> float:
    return float(np.sqrt(np.max(np.sum(op * op / w[None, :], axis=1))))


def _max_row_l1(op: np.ndarray) -> float:
    return float(np.max(np.sum(np.abs(op), axis=1)))


def compute_tilde_constants(ops: TransformOperators) -> TildeConstants:
    """Norm bounds of the four transformations, from the discrete operators.

    k~ and l~ are 1 + the weighted Hilbert-Schmidt norms of the Volterra
    operators (the grid analogue of 1 + (double integral of |k|^2)^(1/2));
    g~ and p~ are 1 + the largest row sum of the delay-scaled Volterra
    operators (the grid analogue of 1 + D max_x int |g(x,y)| dy); gamma~
    and delta~ are the largest weighted row norms (sup_x ||gamma(x,.)||_2,
    taken over the full spatial interval).
    """
    w = ops.weights
    return TildeConstants(
        k=1.0 + _hilbert_schmidt(ops.op_k, w),
        l=1.0 + _hilbert_schmidt(ops.op_l, w),
        g=1.0 + _max_row_l1(ops.op_g),
        p=1.0 + _max_row_l1(ops.op_p),
        gamma=_max_row_l2(ops.op_gamma, w),
        delta=_max_row_l2(ops.op_delta, w),
    )


def compute_equivalence(tilde: TildeConstants) -> tuple[float, float]:
    """Equivalence constants M1, M2 between the physical and target norms."""
    m1 = max(tilde.k + tilde.gamma, tilde.g)
    m2 = 1.0 / max(tilde.l + tilde.delta, tilde.p)
    return m1, m2


def compute_spectral_constants(lam: float, tail_modes: int = 1_000_000):
    """Open-loop growth rate sigma1, series constant G, overshoot Mbar1.

    G is evaluated by partial summation; the analytic bound on the
    discarded tail is returned as the reported uncertainty.
    """
    check_resonance(lam, min(tail_modes, 10_000))
    sigma1 = lam - PI2
    if sigma1 <= 0:
        raise ParameterError("lambda <= pi^2: open-loop growth premise violated")
    n = np.arange(1, tail_modes + 1, dtype=float)
    npi2 = n * n * PI2
    partial = float(np.sum(npi2 / (lam - npi2) ** 2))
    # for n > tail_modes:  n^2 pi^2/(n^2 pi^2 - lam)^2 <= c / (n^2 pi^2)
    guard = 1.0 / (1.0 - lam / ((tail_modes + 1) ** 2 * PI2)) ** 2
    tail = guard / PI2 / tail_modes
    g_value = 4.0 * math.sqrt(partial)
    g_uncertainty = 4.0 * math.sqrt(partial + tail) - g_value
    mbar1 = max(math.sqrt(2.0), g_value + 1.0)
    return sigma1, g_value, g_uncertainty, mbar1


def select_lambda1(delay: float, margin: float) -> float:
    """Smallest lambda1 >= 0 meeting the small-gain condition with margin.

    Solves 1/(1 + lambda1) <= (1 - margin) e^{-D} / (1 + sqrt(3)/3) in
    closed form.
    """
    if not 0 <= margin < 1:
        raise ParameterError("margin must lie in [0, 1)")
    rhs = (1.0 - margin) * math.exp(-delay) / (1.0 + math.sqrt(3.0) / 3.0)
    return max(0.0, 1.0 / rhs - 1.0)


def small_gain_holds(lambda1: float, delay: float) -> bool:
    return 1.0 / (1.0 + lambda1) < math.exp(-delay) / (1.0 + math.sqrt(3.0) / 3.0)


def _phi_pair(eps: float, nu: float, lambda1: float, delay: float) -> tuple[float, float]:
    phi = (1.0 + eps) / (1.0 + lambda1) * math.exp(delay * (nu + 1.0))
    if phi >= 1.0:
        return phi, math.inf
    phi1 = (1.0 + eps) / math.sqrt(3.0) * phi / (1.0 - phi)
    return phi, phi1


def select_auxiliaries(delay: float, lambda1: float,
                       eps: float | None = None, nu: float | None = None,
                       decay: float | None = None):
    """Pick (eps, nu, delta) and evaluate phi, phi1, M0.

    By default eps = nu = the largest decade in {1e-1, ..., 1e-8} keeping
    both contraction factors below one, and delta sits at half of
    min(pi^2, nu).  Explicit values override the search.
    """
    if (eps is None) != (nu is None):
        raise ParameterError("override eps and nu together")
    if eps is None:
        for k in range(1, 9):
            cand = 10.0 ** (-k)
            phi, phi1 = _phi_pair(cand, cand, lambda1, delay)
            if phi < 1.0 and phi1 < 1.0:
                eps = nu = cand
                break
        else:
            raise InfeasibleError(
                "no eps = nu down to 1e-8 gives phi < 1 and phi1 < 1; "
                "lambda1 is too small for this delay"
            )
    else:
        phi, phi1 = _phi_pair(eps, nu, lambda1, delay)
        if not (phi < 1.0 and phi1 < 1.0):
            raise InfeasibleError(
                f"overridden eps = {eps}, nu = {nu} give phi = {phi:.6g}, "
                f"phi1 = {phi1:.6g}; both must be < 1"
            )
    if decay is None:
        decay = 0.5 * min(PI2, nu)
    if not 0 < decay < min(PI2, nu):
        raise ParameterError("decay rate delta must lie in (0, min(pi^2, nu))")
    edn = math.exp(delay * (nu + 1.0))
    m0 = (1.0 - phi1) ** -1 * max(1.0, (1.0 + eps) / math.sqrt(3.0) * edn / (1.0 - phi)) \
        + (1.0 - phi) ** -1 * (1.0 - phi1) ** -1 * max(edn, phi)
    return eps, nu, decay, phi, phi1, m0


def compute_omega_T(lambda1: float, m0: float, m2: float, m3: float,
                    budget: QuantizerBudget, decay: float):
    """Per-period contraction Omega, dwell time T, and the overall rate."""
    omega = (1.0 + lambda1) * (1.0 + m0) ** 2 * budget.error * m3 / (m2 * budget.range)
    if omega >= 1.0 + m0:
        raise InfeasibleError(
            f"Omega = {omega:.6g} >= 1 + M0 = {1.0 + m0:.6g}: dwell time would "
            "not be positive; shrink Delta/M"
        )
    dwell = -math.log(omega / (1.0 + m0)) / decay
    rate = math.log(omega) / dwell
    return omega, dwell, rate


@dataclass(frozen=True)
class DesignConstants:
    """The full constant ledger entering the switching schedule and bounds."""

    params: PlantParams
    tilde: TildeConstants
    m1: float
    m2: float
    m3: float
    mbar: float
    mbar1: float
    g_series: float
    g_uncertainty: float
    sigma1: float
    lambda1: float
    eps: float
    nu: float
    phi: float
    phi1: float
    m0: float
    decay: float
    omega: float
    dwell: float
    overall_rate: float
    mode_count: int

    def as_dict(self) -> dict[str, float]:
        d = {
            "lambda": self.params.lam,
            "delay": self.params.delay,
            "k_tilde": self.tilde.k,
            "l_tilde": self.tilde.l,
            "g_tilde": self.tilde.g,
            "p_tilde": self.tilde.p,
            "gamma_tilde": self.tilde.gamma,
            "delta_tilde": self.tilde.delta,
            "M1": self.m1,
            "M2": self.m2,
            "M3": self.m3,
            "Mbar": self.mbar,
            "Mbar1": self.mbar1,
            "G": self.g_series,
            "G_uncertainty": self.g_uncertainty,
            "sigma1": self.sigma1,
            "lambda1": self.lambda1,
            "eps": self.eps,
            "nu": self.nu,
            "phi": self.phi,
            "phi1": self.phi1,
            "M0": self.m0,
            "delta_rate": self.decay,
            "Omega": self.omega,
            "T_dwell": self.dwell,
            "overall_rate": self.overall_rate,
            "mode_count": self.mode_count,
        }
        return d


def predictor_trace_bound(tables: KernelTables) -> float:
    """M3 = ||gamma(1,.)||_2 + D max_y |g(1,y)| from the grid tables.

    The boundary trace of g grows with the retained mode count (the
    termwise-differentiated series does not decay), so M3 is a function
    of the truncation and is reported as such.
    """
    from .transforms import quadrature_weights

    w = quadrature_weights(tables.x.size, tables.h)
    gamma1_l2 = float(np.sqrt(np.sum(w * tables.gamma1**2)))
    return gamma1_l2 + tables.delay * float(np.max(np.abs(tables.g1)))


def design_constants(tables: KernelTables, ops: TransformOperators,
                     budget: QuantizerBudget, margin: float = 0.1,
                     lambda1: float | None = None,
                     eps: float | None = None, nu: float | None = None,
                     decay: float | None = None) -> DesignConstants:
    """Assemble the whole ledger for one plant/budget configuration."""
    params = PlantParams(tables.lam, tables.delay)
    tilde = compute_tilde_constants(ops)
    m1, m2 = compute_equivalence(tilde)
    m3 = predictor_trace_bound(tables)
    sigma1, g_value, g_unc, mbar1 = compute_spectral_constants(params.lam)
    if lambda1 is None:
        lambda1 = select_lambda1(params.delay, margin)
    elif not small_gain_holds(lambda1, params.delay):
        raise InfeasibleError(
            f"lambda1 = {lambda1} violates the small-gain condition for D = {params.delay}"
        )
    eps, nu, decay, phi, phi1, m0 = select_auxiliaries(params.delay, lambda1, eps, nu, decay)
    mbar = m2 / (m1 * (1.0 + m0))
    omega, dwell, rate = compute_omega_T(lambda1, m0, m2, m3, budget, decay)
    return DesignConstants(
        params=params, tilde=tilde, m1=m1, m2=m2, m3=m3, mbar=mbar,
        mbar1=mbar1, g_series=g_value, g_uncertainty=g_unc, sigma1=sigma1,
        lambda1=lambda1, eps=eps, nu=nu, phi=phi, phi1=phi1, m0=m0,
        decay=decay, omega=omega, dwell=dwell, overall_rate=rate,
        mode_count=tables.truncation.mode_count,
    )


@dataclass(frozen=True)
class BudgetCertificate:
    """Outcome of checking a budget against the theorem ratio condition."""

    mode: str
    passed: bool
    ratio: float
    bound: float
    omega: float | None
    dwell: float | None
    guaranteed_rate: float | None

    def describe(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        lines = [
            f"budget certificate ({self.mode} quantization): {status}",
            f"  Delta/M attained = {self.ratio:.9g}",
            f"  theorem bound    = {self.bound:.9g} (strict)",
        ]
        if self.passed:
            lines.append(f"  Omega = {self.omega:.9g}  T = {self.dwell:.9g}")
            lines.append(f"  guaranteed rate ln(Omega)/T = {self.guaranteed_rate:.9g}")
        return "\n".join(lines)


def budget_ratio_bound(constants: DesignConstants, mode: str) -> float:
    """The strict upper bound on Delta/M required by the theorems."""
    m1, m2, m3 = constants.m1, constants.m2, constants.m3
    lam1, m0 = constants.lambda1, constants.m0
    if mode == "state":
        return m2 / ((1.0 + m0) * max(m3 * (1.0 + lam1) * (1.0 + m0), 2.0 * m1))
    if mode == "input":
        return m2 / (m3 * (1.0 + lam1) * (1.0 + m0) ** 2)
    raise ValueError(f"unknown quantization mode {mode!r}")


def validate_budget(budget: QuantizerBudget, constants: DesignConstants,
                    mode: str) -> BudgetCertificate:
    """Check the theorem ratio condition; failure is a value, not an error."""
    ratio = budget.error / budget.range
    bound = budget_ratio_bound(constants, mode)
    passed = ratio < bound
    if passed:
        omega, dwell, rate = constants.omega, constants.dwell, constants.overall_rate
    else:
        omega = dwell = rate = None
    return BudgetCertificate(mode=mode, passed=passed, ratio=ratio, bound=bound,
                             omega=omega, dwell=dwell, guaranteed_rate=rate)


def theorem_gamma(constants: DesignConstants, budget: QuantizerBudget,
                  tau: float, mu0: float, mode: str) -> float:
    """Leading coefficient of the closed-loop trajectory bound."""
    c = constants
    expo = 1.0 - c.overall_rate / c.sigma1
    if mode == "state":
        floor = mu0 * (budget.range * c.mbar - 2.0 * budget.error)
        if floor <= 0:
            raise InfeasibleError("M Mbar - 2 Delta must be positive for the bound")
        return (c.mbar1 / c.m2) \
            * max(c.m2 * budget.range / c.omega * math.exp(2.0 * c.sigma1 * tau) * mu0, c.m1) \
            * max(1.0 / floor, 1.0) * (1.0 / floor) ** expo
    if mode == "input":
        arg = c.m3 / (mu0 * budget.range * c.mbar)
        return (c.sigma1 / c.m2) \
            * max(c.m2 * budget.range / (c.omega * c.m3) * math.exp(2.0 * c.sigma1 * tau) * mu0, c.m1) \
            * max(arg, 1.0) * arg**expo
    raise ValueError(f"unknown quantization mode {mode!r}")
